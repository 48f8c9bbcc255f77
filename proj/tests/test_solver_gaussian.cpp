#include <doctest.h>

#include <cmath>

#include "lrtc/solver.hpp"
#include "lrtc/synth.hpp"
#include "test_utils.hpp"

using namespace lrtc;
using testutil::numeric_gradient;
using testutil::random_matrix;
using testutil::random_spd;

namespace {

struct Problem {
  Tensor3 z;
  Mask3 mask;
  Eigen::MatrixXd pi;          // khatri_rao(C, B) for the first-factor update
  Eigen::MatrixXd z_unf, d_unf;
};

Problem small_problem(std::uint64_t seed, Index m = 3, Index n = 2, Index p = 2, Index rank = 2) {
  Rng rng(seed);
  const Eigen::MatrixXd a = random_matrix(rng, m, rank);
  const Eigen::MatrixXd b = random_matrix(rng, n, rank);
  const Eigen::MatrixXd c = random_matrix(rng, p, rank);
  Problem out;
  out.z = parafac_reconstruct(a, b, c);
  for (double& v : out.z.values()) v += 0.1 * rng.normal();
  out.mask = Mask3::ones(m, n, p);
  for (auto& v : out.mask.values()) v = rng.uniform() < 0.8;
  out.pi = khatri_rao(c, b);
  out.z_unf = unfold_matrix(out.z, Mode::tube);
  out.d_unf = unfold_mask(out.mask, Mode::tube);
  return out;
}

}  // namespace

TEST_CASE("cost of the zero model on zero data is zero") {
  FactorModel f;
  f.a = Eigen::MatrixXd::Zero(2, 2);
  f.b = Eigen::MatrixXd::Zero(2, 2);
  f.c = Eigen::MatrixXd::Zero(2, 2);
  CHECK(gaussian_cost(Tensor3(2, 2, 2), Mask3::ones(2, 2, 2), f, identity_priors(2, 2, 2), 3.0) ==
        0.0);
}

TEST_CASE("cost reduces to the penalty when the fit is exact") {
  // unit-energy factors, data equal to the reconstruction: cost = 3 mu / 2
  FactorModel f;
  f.a = Eigen::MatrixXd::Zero(2, 1);
  f.a(0, 0) = 1.0;
  f.b = f.a;
  f.c = f.a;
  const Tensor3 x = f.reconstruct();
  const double mu = 0.8;
  CHECK(gaussian_cost(x, Mask3::ones(2, 2, 2), f, identity_priors(2, 2, 2), mu) ==
        doctest::Approx(1.5 * mu).epsilon(1e-14));
}

TEST_CASE("cost matches the dense vectorized form") {
  // Flatten the first factor and rebuild the objective from slice-by-slice
  // Kronecker blocks, with quadratic-form penalties.
  Rng rng(101);
  const Index m = 3, n = 2, p = 2, rank = 2;
  FactorModel f{random_matrix(rng, m, rank), random_matrix(rng, n, rank),
                random_matrix(rng, p, rank)};
  Tensor3 z(m, n, p);
  for (double& v : z.values()) v = rng.normal();
  Mask3 mask = Mask3::ones(m, n, p);
  for (auto& v : mask.values()) v = rng.uniform() < 0.7;

  PriorSet priors;
  priors.r_a = random_spd(rng, m);
  priors.r_b = random_spd(rng, n);
  priors.r_c = random_spd(rng, p);
  const double mu = 0.37;

  Eigen::VectorXd a_vec(m * rank);
  for (Index r = 0; r < rank; ++r) a_vec.segment(r * m, m) = f.a.col(r);

  double fit = 0.0;
  for (Index pp = 0; pp < p; ++pp) {
    const Eigen::MatrixXd coeff =
        testutil::kron(f.b * f.c.row(pp).asDiagonal(), Eigen::MatrixXd::Identity(m, m));
    Eigen::VectorXd z_p(m * n), d_p(m * n);
    for (Index nn = 0; nn < n; ++nn)
      for (Index mm = 0; mm < m; ++mm) {
        z_p(nn * m + mm) = z(mm, nn, pp);
        d_p(nn * m + mm) = mask(mm, nn, pp);
      }
    fit += (d_p.asDiagonal() * (z_p - coeff * a_vec)).squaredNorm();
  }
  const Eigen::MatrixXd pen_a =
      testutil::kron(Eigen::MatrixXd::Identity(rank, rank), priors.r_a.inverse());
  double penalty = a_vec.dot(pen_a * a_vec);
  penalty += (f.b.transpose() * priors.r_b.inverse() * f.b).trace();
  penalty += (f.c.transpose() * priors.r_c.inverse() * f.c).trace();
  const double want = 0.5 * fit + 0.5 * mu * penalty;

  CHECK(gaussian_cost(z, mask, f, priors, mu) == doctest::Approx(want).epsilon(1e-10));
}

TEST_CASE("update with orthonormal columns and a full mask is a shrunk projection") {
  Rng rng(103);
  const Eigen::MatrixXd q =
      Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(rng, 6, 3)).householderQ() *
      Eigen::MatrixXd::Identity(6, 3);
  const Eigen::MatrixXd z = random_matrix(rng, 2, 6);
  const Eigen::MatrixXd d = Eigen::MatrixXd::Ones(2, 6);
  const double mu = 0.6;
  const Eigen::MatrixXd f0 = random_matrix(rng, 2, 3);
  const Eigen::MatrixXd got =
      update_factor_gaussian(f0, Eigen::MatrixXd::Identity(2, 2), q, d, z, mu);
  const Eigen::MatrixXd want = z * q / (1.0 + mu);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("a fully unobserved row with identity prior updates to zero") {
  Problem prob = small_problem(107);
  prob.d_unf.row(1).setZero();
  const Eigen::MatrixXd f0 = Eigen::MatrixXd::Ones(3, 2);
  const Eigen::MatrixXd got = update_factor_gaussian(f0, Eigen::MatrixXd::Identity(3, 3), prob.pi,
                                                     prob.d_unf, prob.z_unf, 0.9);
  CHECK(got.row(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("update with identity prior equals the explicit ridge solution") {
  const Problem prob = small_problem(109);
  const double mu = 0.45;
  const Eigen::MatrixXd f0 = Eigen::MatrixXd::Ones(3, 2);
  const Eigen::MatrixXd got = update_factor_gaussian(f0, Eigen::MatrixXd::Identity(3, 3), prob.pi,
                                                     prob.d_unf, prob.z_unf, mu);
  for (Index i = 0; i < 3; ++i) {
    const Eigen::MatrixXd dm = prob.d_unf.row(i).asDiagonal();
    const Eigen::MatrixXd g =
        prob.pi.transpose() * dm * prob.pi + mu * Eigen::MatrixXd::Identity(2, 2);
    const Eigen::VectorXd rhs = prob.pi.transpose() * dm * prob.z_unf.row(i).transpose();
    const Eigen::VectorXd want = g.inverse() * rhs;
    CHECK((got.row(i).transpose() - want).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("update solves the dense vectorized normal equations") {
  const Problem prob = small_problem(113);
  Rng rng(127);
  const Index m = 3, rank = 2, k = prob.pi.rows();
  const Eigen::MatrixXd r_prior = random_spd(rng, m);
  const Eigen::MatrixXd f_bar = random_matrix(rng, m, rank);
  const double mu = 0.3;

  auto [lambda, base] = max_eig_inverse(r_prior);
  const Eigen::MatrixXd theta = base * f_bar;

  // Design matrix over (m, k) residuals against vec(F) in column-major order.
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(m * k, m * rank);
  Eigen::VectorXd target = Eigen::VectorXd::Zero(m * k);
  for (Index i = 0; i < m; ++i) {
    for (Index kk = 0; kk < k; ++kk) {
      const Index row = i * k + kk;
      target(row) = prob.d_unf(i, kk) * prob.z_unf(i, kk);
      for (Index r = 0; r < rank; ++r) {
        design(row, r * m + i) = prob.d_unf(i, kk) * prob.pi(kk, r);
      }
    }
  }
  Eigen::VectorXd theta_vec(m * rank);
  for (Index r = 0; r < rank; ++r) theta_vec.segment(r * m, m) = theta.col(r);
  const Eigen::MatrixXd h = design.transpose() * design +
                            mu * lambda * Eigen::MatrixXd::Identity(m * rank, m * rank);
  const Eigen::VectorXd sol = h.ldlt().solve(design.transpose() * target + mu * theta_vec);

  const Eigen::MatrixXd got =
      update_factor_gaussian(f_bar, r_prior, prob.pi, prob.d_unf, prob.z_unf, mu);
  Eigen::VectorXd got_vec(m * rank);
  for (Index r = 0; r < rank; ++r) got_vec.segment(r * m, m) = got.col(r);
  CHECK((got_vec - sol).norm() / sol.norm() < 1e-8);
}

TEST_CASE("surrogate touches the objective at the anchor and dominates elsewhere") {
  const Problem prob = small_problem(131);
  Rng rng(137);
  const Eigen::MatrixXd r_prior = random_spd(rng, 3);
  const double mu = 0.7;

  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::MatrixXd f_bar = random_matrix(rng, 3, 2);
    const double f_val =
        partial_cost_gaussian(f_bar, r_prior, prob.pi, prob.d_unf, prob.z_unf, mu);
    const double g_val =
        majorizer_gaussian_value(f_bar, f_bar, r_prior, prob.pi, prob.d_unf, prob.z_unf, mu);
    CHECK(std::abs(g_val - f_val) <= 1e-8 * (1.0 + std::abs(f_val)));

    const Eigen::MatrixXd away = random_matrix(rng, 3, 2);
    const double f_away = partial_cost_gaussian(away, r_prior, prob.pi, prob.d_unf, prob.z_unf, mu);
    const double g_away =
        majorizer_gaussian_value(away, f_bar, r_prior, prob.pi, prob.d_unf, prob.z_unf, mu);
    CHECK(g_away - f_away >= -1e-10 * (1.0 + std::abs(f_away)));
  }
}

TEST_CASE("surrogate with identity prior equals the objective everywhere") {
  const Problem prob = small_problem(139);
  Rng rng(149);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd f_bar = random_matrix(rng, 3, 2);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd f = random_matrix(rng, 3, 2);
    const double f_val = partial_cost_gaussian(f, eye, prob.pi, prob.d_unf, prob.z_unf, 0.5);
    const double g_val =
        majorizer_gaussian_value(f, f_bar, eye, prob.pi, prob.d_unf, prob.z_unf, 0.5);
    CHECK(g_val == doctest::Approx(f_val).epsilon(1e-12));
  }
}

TEST_CASE("surrogate and objective share their gradient at the anchor") {
  const Problem prob = small_problem(151);
  Rng rng(157);
  const Eigen::MatrixXd r_prior = random_spd(rng, 3);
  const Eigen::MatrixXd f_bar = random_matrix(rng, 3, 2);
  const double mu = 0.9;

  const auto f_fn = [&](const Eigen::MatrixXd& f) {
    return partial_cost_gaussian(f, r_prior, prob.pi, prob.d_unf, prob.z_unf, mu);
  };
  const auto g_fn = [&](const Eigen::MatrixXd& f) {
    return majorizer_gaussian_value(f, f_bar, r_prior, prob.pi, prob.d_unf, prob.z_unf, mu);
  };
  const Eigen::MatrixXd grad_f = numeric_gradient(f_fn, f_bar);
  const Eigen::MatrixXd grad_g = numeric_gradient(g_fn, f_bar);
  CHECK((grad_f - grad_g).norm() / grad_f.norm() < 1e-5);
}

TEST_CASE("solver recovers a noiseless rank-1 tensor through one quarter missing") {
  Rng rng(163);
  const Eigen::MatrixXd a = random_matrix(rng, 6, 1);
  const Eigen::MatrixXd b = random_matrix(rng, 5, 1);
  const Eigen::MatrixXd c = random_matrix(rng, 4, 1);
  const Tensor3 z = parafac_reconstruct(a, b, c);
  const MaskPair masks = random_mask(6, 5, 4, 0.25, 7);

  SolveConfig cfg;
  cfg.mu = 1e-4 * mu_max(z, masks.train);
  cfg.rank = 3;
  cfg.tol = 1e-12;
  cfg.max_iters = 2000;
  cfg.seed = 99;
  const SolveReport rep = lrti_solve(z, masks.train, identity_priors(6, 5, 4), cfg);
  CHECK(error_db(rep.estimate, z, masks.test) <= -40.0);
}

TEST_CASE("objective trace never increases") {
  Rng rng(167);
  Tensor3 z(4, 3, 3);
  for (double& v : z.values()) v = rng.normal();
  Mask3 mask = Mask3::ones(4, 3, 3);
  for (auto& v : mask.values()) v = rng.uniform() < 0.75;

  PriorSet priors;
  priors.r_a = random_spd(rng, 4);
  priors.r_b = random_spd(rng, 3);
  priors.r_c = random_spd(rng, 3);

  SolveConfig cfg;
  cfg.mu = 0.2;
  cfg.rank = 3;
  cfg.seed = 5;
  const SolveReport rep = lrti_solve(z, mask, priors, cfg);
  for (std::size_t i = 1; i < rep.cost_trace.size(); ++i) {
    CHECK(rep.cost_trace[i] <=
          rep.cost_trace[i - 1] + 1e-9 * (1.0 + std::abs(rep.cost_trace[i - 1])));
  }
  CHECK(rep.converged);
}

TEST_CASE("weights at and above the shutoff level produce the exact zero model") {
  Rng rng(173);
  Tensor3 z(4, 3, 2);
  for (double& v : z.values()) v = rng.normal();
  Mask3 mask = Mask3::ones(4, 3, 2);
  for (auto& v : mask.values()) v = rng.uniform() < 0.8;

  for (double factor : {1.0, 2.0, 0.81}) {
    SolveConfig cfg;
    cfg.mu = factor * mu_max(z, mask);
    cfg.rank = 4;
    cfg.seed = 31;
    const SolveReport rep = lrti_solve(z, mask, identity_priors(4, 3, 2), cfg);
    CHECK(std::sqrt(frobenius_sq(rep.estimate)) <= 1e-8);
    CHECK(effective_rank(rep.model) == 0);
  }
}

TEST_CASE("shutoff weight formula") {
  Tensor3 ones(2, 2, 2);
  for (double& v : ones.values()) v = 1.0;
  CHECK(mu_max(ones, Mask3::ones(2, 2, 2)) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(mu_max(ones, Mask3(2, 2, 2)) == 0.0);

  Rng rng(179);
  Tensor3 z(3, 2, 2);
  for (double& v : z.values()) v = rng.normal();
  Mask3 mask = Mask3::ones(3, 2, 2);
  mask(0, 0, 0) = 0;
  CHECK(mu_max(z, mask) == doctest::Approx(std::pow(frobenius_sq(z, mask), 2.0 / 3.0)));
}

TEST_CASE("frozen ones factor reduces the problem to matrix completion") {
  Rng rng(181);
  const Eigen::MatrixXd a = random_matrix(rng, 12, 1);
  const Eigen::MatrixXd b = random_matrix(rng, 10, 1);
  const Tensor3 z = parafac_reconstruct(a, b, Eigen::MatrixXd::Ones(1, 1));
  const MaskPair masks = random_mask(12, 10, 1, 0.3, 17);

  SolveConfig cfg;
  cfg.mu = 1e-4 * mu_max(z, masks.train);
  cfg.rank = 3;
  cfg.tol = 1e-12;
  cfg.max_iters = 2000;
  cfg.seed = 3;
  cfg.freeze_c = true;
  const SolveReport rep = lrti_solve(z, masks.train, identity_priors(12, 10, 1), cfg);
  CHECK((rep.model.c - Eigen::MatrixXd::Ones(1, 3)).cwiseAbs().maxCoeff() == 0.0);
  CHECK(error_db(rep.estimate, z, masks.test) <= -40.0);
}

TEST_CASE("converged factors have balanced norms under identity priors") {
  Rng rng(191);
  const Eigen::MatrixXd a = random_matrix(rng, 6, 2);
  const Eigen::MatrixXd b = random_matrix(rng, 5, 2);
  const Eigen::MatrixXd c = random_matrix(rng, 4, 2);
  const Tensor3 z = parafac_reconstruct(a, b, c);

  SolveConfig cfg;
  cfg.mu = 1e-3 * mu_max(z, Mask3::ones(6, 5, 4));
  cfg.rank = 2;
  cfg.tol = 1e-12;
  cfg.max_iters = 3000;
  cfg.seed = 11;
  const SolveReport rep = lrti_solve(z, Mask3::ones(6, 5, 4), identity_priors(6, 5, 4), cfg);
  CHECK(equal_norm_residual(rep.model) <= 0.05);
}

TEST_CASE("noiseless fit with surplus budget recovers the component count") {
  Rng rng(193);
  const Eigen::MatrixXd a = random_matrix(rng, 8, 3);
  const Eigen::MatrixXd b = random_matrix(rng, 6, 3);
  const Eigen::MatrixXd c = random_matrix(rng, 5, 3);
  const Tensor3 z = parafac_reconstruct(a, b, c);

  SolveConfig cfg;
  cfg.mu = 1e-3 * mu_max(z, Mask3::ones(8, 6, 5));
  cfg.rank = 6;
  cfg.tol = 1e-11;
  cfg.max_iters = 3000;
  cfg.seed = 21;
  const SolveReport rep = lrti_solve(z, Mask3::ones(8, 6, 5), identity_priors(8, 6, 5), cfg);
  CHECK(effective_rank(rep.model) == 3);
}

TEST_CASE("identical seeds give identical runs") {
  Rng rng(197);
  Tensor3 z(3, 3, 2);
  for (double& v : z.values()) v = rng.normal();
  const Mask3 mask = Mask3::ones(3, 3, 2);

  SolveConfig cfg;
  cfg.mu = 0.5;
  cfg.rank = 2;
  cfg.seed = 1234;
  const SolveReport r1 = lrti_solve(z, mask, identity_priors(3, 3, 2), cfg);
  const SolveReport r2 = lrti_solve(z, mask, identity_priors(3, 3, 2), cfg);
  REQUIRE(r1.cost_trace.size() == r2.cost_trace.size());
  for (std::size_t i = 0; i < r1.cost_trace.size(); ++i) {
    CHECK(r1.cost_trace[i] == r2.cost_trace[i]);
  }
  for (std::size_t i = 0; i < r1.estimate.values().size(); ++i) {
    CHECK(r1.estimate.values()[i] == r2.estimate.values()[i]);
  }
}

TEST_CASE("config validation") {
  const Tensor3 z(2, 2, 2);
  const Mask3 mask = Mask3::ones(2, 2, 2);
  SolveConfig cfg;
  cfg.mu = -1.0;
  CHECK_THROWS_AS(lrti_solve(z, mask, identity_priors(2, 2, 2), cfg), input_error);
  cfg.mu = 1.0;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(lrti_solve(z, mask, identity_priors(2, 2, 2), cfg), input_error);
  cfg.max_iters = 10;
  CHECK_THROWS_AS(lrti_solve(z, mask, identity_priors(3, 2, 2), cfg), shape_error);
}

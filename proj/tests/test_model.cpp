#include <doctest.h>

#include <cmath>

#include "lrtc/model.hpp"
#include "test_utils.hpp"

using namespace lrtc;
using testutil::random_matrix;

namespace {

// Orthogonal columns so each component's scale is pinned exactly.
FactorModel diag_model(const std::vector<double>& scales) {
  const Index r = static_cast<Index>(scales.size());
  FactorModel f;
  f.a = Eigen::MatrixXd::Zero(r, r);
  f.b = Eigen::MatrixXd::Identity(r, r);
  f.c = Eigen::MatrixXd::Identity(r, r);
  for (Index j = 0; j < r; ++j) f.a(j, j) = scales[static_cast<std::size_t>(j)];
  return f;
}

}  // namespace

TEST_CASE("normalize splits scales out of the factors") {
  FactorModel f;
  f.a = Eigen::MatrixXd::Zero(4, 1);
  f.a.col(0) << 1, 1, 1, 1;  // norm 2
  f.b = Eigen::MatrixXd::Zero(2, 1);
  f.b(0, 0) = 3;             // norm 3
  f.c = Eigen::MatrixXd::Zero(1, 1);
  f.c(0, 0) = 2;             // norm 2
  const NormalizedModel n = normalize(f);
  CHECK(n.gamma(0) == doctest::Approx(12.0).epsilon(1e-14));
  CHECK(n.u.col(0).norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(n.v.col(0).norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(n.w.col(0).norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("a vanished component normalizes to zero scale and zero directions") {
  FactorModel f;
  f.a = Eigen::MatrixXd::Ones(2, 2);
  f.b = Eigen::MatrixXd::Ones(2, 2);
  f.c = Eigen::MatrixXd::Ones(2, 2);
  f.a.col(1).setZero();
  const NormalizedModel n = normalize(f);
  CHECK(n.gamma(1) == 0.0);
  CHECK(n.u.col(1).norm() == 0.0);
  CHECK(n.v.col(1).norm() == 0.0);
  CHECK(n.w.col(1).norm() == 0.0);
}

TEST_CASE("normalization preserves the reconstruction") {
  Rng rng(13);
  FactorModel f{random_matrix(rng, 4, 3), random_matrix(rng, 3, 3), random_matrix(rng, 2, 3)};
  const Tensor3 x = f.reconstruct();
  const Tensor3 y = normalize(f).to_factors().reconstruct();
  double worst = 0.0;
  for (std::size_t i = 0; i < x.values().size(); ++i) {
    worst = std::max(worst, std::abs(x.values()[i] - y.values()[i]));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("normalize is idempotent") {
  Rng rng(29);
  FactorModel f{random_matrix(rng, 3, 2), random_matrix(rng, 4, 2), random_matrix(rng, 2, 2)};
  const NormalizedModel once = normalize(f);
  const NormalizedModel twice = normalize(once.to_factors());
  CHECK((once.gamma - twice.gamma).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("effective rank counts scales against the largest") {
  CHECK(effective_rank(diag_model({0, 0, 0})) == 0);
  CHECK(effective_rank(diag_model({10, 9, 1e-9}), 1e-3) == 2);
  CHECK(effective_rank(diag_model({10, 9, 1e-9}), 1e-2) == 2);
  CHECK(effective_rank(diag_model({10, 0.5})) == 2);     // 0.5 > 0.01 * 10
  CHECK(effective_rank(diag_model({10, 0.05})) == 1);    // 0.05 < 0.01 * 10
}

TEST_CASE("effective rank and pseudonorm ignore component order") {
  const FactorModel f = diag_model({5, 0.2, 3});
  FactorModel g = f;
  g.a = f.a * Eigen::PermutationMatrix<3>(Eigen::Vector3i(2, 0, 1));
  g.b = f.b * Eigen::PermutationMatrix<3>(Eigen::Vector3i(2, 0, 1));
  g.c = f.c * Eigen::PermutationMatrix<3>(Eigen::Vector3i(2, 0, 1));
  CHECK(effective_rank(f) == effective_rank(g));
  CHECK(gamma_pseudonorm(f) == doctest::Approx(gamma_pseudonorm(g)).epsilon(1e-12));
}

TEST_CASE("gamma pseudonorm agrees with a scalar loop") {
  CHECK(gamma_pseudonorm(diag_model({1})) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(gamma_pseudonorm(diag_model({8, 1})) ==
        doctest::Approx(std::pow(5.0, 1.5)).epsilon(1e-13));

  Rng rng(37);
  FactorModel f{random_matrix(rng, 3, 4), random_matrix(rng, 5, 4), random_matrix(rng, 2, 4)};
  const NormalizedModel n = normalize(f);
  double accum = 0.0;
  for (Index j = 0; j < n.gamma.size(); ++j) accum += std::cbrt(n.gamma(j) * n.gamma(j));
  CHECK(gamma_pseudonorm(f) == doctest::Approx(std::pow(accum, 1.5)).epsilon(1e-12));
}

TEST_CASE("equal norm residual measures the worst pairwise gap") {
  FactorModel balanced = diag_model({1, 1});
  CHECK(equal_norm_residual(balanced) == 0.0);

  FactorModel skew = balanced;
  skew.a *= 2.0;  // norms (2, 1, 1)
  CHECK(equal_norm_residual(skew) == doctest::Approx(1.0).epsilon(1e-14));

  FactorModel zero;
  zero.a = Eigen::MatrixXd::Zero(2, 1);
  zero.b = Eigen::MatrixXd::Zero(2, 1);
  zero.c = Eigen::MatrixXd::Zero(2, 1);
  CHECK(equal_norm_residual(zero) == 0.0);

  FactorModel half = zero;
  half.a = Eigen::MatrixXd::Ones(2, 1);
  CHECK(std::isinf(equal_norm_residual(half)));
}

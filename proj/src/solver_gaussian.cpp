#include <cmath>
#include <limits>

#include "lrtc/solver.hpp"
#include "solver_detail.hpp"

namespace lrtc {

namespace {

double masked_fit_sq(const Eigen::MatrixXd& z, const Eigen::MatrixXd& d,
                     const Eigen::MatrixXd& x) {
  return (d.array() * (z - x).array()).matrix().squaredNorm();
}

// Row-independent ridge solves against a prebuilt prior operator.
Eigen::MatrixXd update_rows(const Eigen::MatrixXd& f_bar, const PriorOperator& op,
                            const Eigen::MatrixXd& pi, const Eigen::MatrixXd& delta_unf,
                            const Eigen::MatrixXd& z_unf, double mu) {
  const Index rows = f_bar.rows();
  const Index rank = pi.cols();
  Eigen::MatrixXd theta;
  if (!op.identity) theta = op.theta_base * f_bar;  // proximal anchor, zero for identity priors
  Eigen::MatrixXd out(rows, rank);
  const double ridge = op.lambda * mu;
  Eigen::MatrixXd gram(rank, rank);
  for (Index i = 0; i < rows; ++i) {
    const Eigen::VectorXd weights = delta_unf.row(i).transpose();
    const Eigen::MatrixXd pi_w = weights.asDiagonal() * pi;
    gram.noalias() = pi.transpose() * pi_w;
    gram.diagonal().array() += ridge;
    Eigen::VectorXd rhs = pi_w.transpose() * z_unf.row(i).transpose();
    if (!op.identity) rhs.noalias() += mu * theta.row(i).transpose();
    out.row(i) = gram.llt().solve(rhs).transpose();
  }
  return out;
}

double cost_with_ops(const Tensor3& z, const Mask3& mask, const FactorModel& f,
                     const PriorOperator& op_a, const PriorOperator& op_b,
                     const PriorOperator& op_c, double mu) {
  const Tensor3 x = f.reconstruct();
  double fit = 0.0;
  const auto& zv = z.values();
  const auto& xv = x.values();
  const auto& mv = mask.values();
  for (std::size_t i = 0; i < zv.size(); ++i) {
    if (mv[i]) {
      const double r = zv[i] - xv[i];
      fit += r * r;
    }
  }
  const double pen = detail::penalty(f.a, op_a) + detail::penalty(f.b, op_b) +
                     detail::penalty(f.c, op_c);
  return 0.5 * fit + 0.5 * mu * pen;
}

}  // namespace

Index default_rank(Index m, Index n, Index p) {
  const Index cap = std::min({m * n, n * p, p * m});
  return std::min(std::min({m, n, p}) * 2, cap);
}

double gaussian_cost(const Tensor3& z, const Mask3& mask, const FactorModel& f,
                     const PriorSet& priors, double mu) {
  require_same_shape(z, mask);
  detail::validate_priors(priors, z.dim0(), z.dim1(), z.dim2());
  const PriorOperator op_a = PriorOperator::build(priors.r_a, "mode-0");
  const PriorOperator op_b = PriorOperator::build(priors.r_b, "mode-1");
  const PriorOperator op_c = PriorOperator::build(priors.r_c, "mode-2");
  return cost_with_ops(z, mask, f, op_a, op_b, op_c, mu);
}

double partial_cost_gaussian(const Eigen::MatrixXd& f, const Eigen::MatrixXd& r_prior,
                             const Eigen::MatrixXd& pi, const Eigen::MatrixXd& delta_unf,
                             const Eigen::MatrixXd& z_unf, double mu) {
  const PriorOperator op = PriorOperator::build(r_prior, "prior");
  const Eigen::MatrixXd x = f * pi.transpose();
  return 0.5 * masked_fit_sq(z_unf, delta_unf, x) + 0.5 * mu * detail::penalty(f, op);
}

double majorizer_gaussian_value(const Eigen::MatrixXd& f, const Eigen::MatrixXd& f_bar,
                                const Eigen::MatrixXd& r_prior, const Eigen::MatrixXd& pi,
                                const Eigen::MatrixXd& delta_unf, const Eigen::MatrixXd& z_unf,
                                double mu) {
  const PriorOperator op = PriorOperator::build(r_prior, "prior");
  const Eigen::MatrixXd x = f * pi.transpose();
  const Eigen::MatrixXd theta = op.theta_base * f_bar;
  const double quad = 0.5 * op.lambda * f.squaredNorm();
  const double cross = (theta.array() * f.array()).sum();
  const double anchor = 0.5 * (theta.array() * f_bar.array()).sum();
  return 0.5 * masked_fit_sq(z_unf, delta_unf, x) + mu * (quad - cross + anchor);
}

Eigen::MatrixXd update_factor_gaussian(const Eigen::MatrixXd& f_bar,
                                       const Eigen::MatrixXd& r_prior,
                                       const Eigen::MatrixXd& pi,
                                       const Eigen::MatrixXd& delta_unf,
                                       const Eigen::MatrixXd& z_unf, double mu) {
  const PriorOperator op = PriorOperator::build(r_prior, "prior");
  return update_rows(f_bar, op, pi, delta_unf, z_unf, mu);
}

double mu_max(const Tensor3& z, const Mask3& mask) {
  return std::pow(frobenius_sq(z, mask), 2.0 / 3.0);
}

SolveReport lrti_solve(const Tensor3& z, const Mask3& mask, const PriorSet& priors,
                       const SolveConfig& cfg) {
  require_same_shape(z, mask);
  detail::validate_config(cfg);
  const Index m = z.dim0(), n = z.dim1(), p = z.dim2();
  detail::validate_priors(priors, m, n, p);
  const Index rank = cfg.rank > 0 ? cfg.rank : default_rank(m, n, p);

  const PriorOperator op_a = PriorOperator::build(priors.r_a, "mode-0");
  const PriorOperator op_b = PriorOperator::build(priors.r_b, "mode-1");
  const PriorOperator op_c = PriorOperator::build(priors.r_c, "mode-2");
  const detail::UnfoldedData data = detail::unfold_problem(z, mask);

  Rng rng(cfg.seed);
  FactorModel f;
  f.a = detail::normal_matrix(rng, m, rank);
  f.b = detail::normal_matrix(rng, n, rank);
  f.c = cfg.freeze_c ? Eigen::MatrixXd::Ones(p, rank) : detail::normal_matrix(rng, p, rank);

  SolveReport report;
  double cost = cost_with_ops(z, mask, f, op_a, op_b, op_c, cfg.mu);
  report.cost_trace.push_back(cost);

  const detail::ConvergenceTest done(cfg.tol);
  for (Index it = 1; it <= cfg.max_iters; ++it) {
    const FactorModel prev = f;
    f.a = update_rows(f.a, op_a, khatri_rao(f.c, f.b), data.d_tube, data.z_tube, cfg.mu);
    f.b = update_rows(f.b, op_b, khatri_rao(f.a, f.c), data.d_row, data.z_row, cfg.mu);
    if (!cfg.freeze_c) {
      f.c = update_rows(f.c, op_c, khatri_rao(f.b, f.a), data.d_col, data.z_col, cfg.mu);
    }
    const double next = cost_with_ops(z, mask, f, op_a, op_b, op_c, cfg.mu);
    if (!std::isfinite(next)) throw divergence_error("objective became non-finite");
    report.cost_trace.push_back(next);
    report.iterations = it;
    if (done(cost, next, {&prev.a, &prev.b, &prev.c}, {&f.a, &f.b, &f.c})) {
      report.converged = true;
      cost = next;
      break;
    }
    cost = next;
  }

  report.model = std::move(f);
  report.estimate = report.model.reconstruct();
  return report;
}

SolveReport solve(const Tensor3& z, const Mask3& mask, const PriorSet& priors,
                  const SolveConfig& cfg) {
  return cfg.family == Family::gaussian ? lrti_solve(z, mask, priors, cfg)
                                        : lrpti_solve(z, mask, priors, cfg);
}

}  // namespace lrtc

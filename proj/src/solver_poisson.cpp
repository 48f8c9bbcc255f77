#include <cmath>
#include <limits>

#include "lrtc/solver.hpp"
#include "solver_detail.hpp"

namespace lrtc {

namespace {

constexpr double kRateFloor = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

// sum over observed cells of (x - z log x); +inf when a positive count meets
// a zero (or negative) rate. z = 0 contributes x alone.
double kl_fit(const Eigen::ArrayXXd& delta, const Eigen::ArrayXXd& z, const Eigen::ArrayXXd& x) {
  double total = 0.0;
  for (Index k = 0; k < z.cols(); ++k) {
    for (Index i = 0; i < z.rows(); ++i) {
      if (delta(i, k) == 0.0) continue;
      total += x(i, k);
      if (z(i, k) > 0.0) {
        if (x(i, k) <= 0.0) return kInf;
        total -= z(i, k) * std::log(x(i, k));
      }
    }
  }
  return total;
}

PoissonMajorizerParams params_with_op(const Eigen::MatrixXd& f_bar, const PriorOperator& op,
                                      const Eigen::MatrixXd& pi, const Eigen::MatrixXd& delta_unf,
                                      const Eigen::MatrixXd& z_unf, double mu) {
  const Index rows = f_bar.rows();
  const Index rank = pi.cols();
  const double lm = op.lambda * mu;

  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(rows, rank);
  if (!op.identity) theta = op.theta_base * f_bar;

  Eigen::MatrixXd rates = f_bar * pi.transpose();  // current fit, rows x K
  Eigen::MatrixXd floored = rates.cwiseMax(kRateFloor);
  const Eigen::MatrixXd ratio =
      (delta_unf.array() * z_unf.array() / floored.array()).matrix();  // z/x on observed cells

  PoissonMajorizerParams params;
  params.lambda = op.lambda;
  params.s = (f_bar.array() * (ratio * pi).array()).matrix() / lm;
  params.t = (mu * theta - delta_unf * pi) / (2.0 * lm);

  // Constant block that makes the surrogate touch the objective at f_bar.
  params.u = Eigen::MatrixXd::Zero(rows, rank);
  for (Index i = 0; i < rows; ++i) {
    for (Index r = 0; r < rank; ++r) {
      double accum = 0.5 * mu * theta(i, r) * f_bar(i, r);
      if (f_bar(i, r) > 0.0) {
        for (Index k = 0; k < pi.rows(); ++k) {
          const double zd = delta_unf(i, k) * z_unf(i, k);
          if (zd <= 0.0 || pi(k, r) <= 0.0) continue;
          const double d = floored(i, k);
          const double alpha = f_bar(i, r) * pi(k, r) / d;
          accum += zd * alpha * std::log(f_bar(i, r) / d);
        }
      }
      params.u(i, r) = accum / lm;
    }
  }
  return params;
}

}  // namespace

double kl_cost(const Tensor3& z, const Mask3& mask, const FactorModel& f,
               const PriorSet& priors, double mu) {
  require_same_shape(z, mask);
  detail::validate_priors(priors, z.dim0(), z.dim1(), z.dim2());
  const PriorOperator op_a = PriorOperator::build(priors.r_a, "mode-0");
  const PriorOperator op_b = PriorOperator::build(priors.r_b, "mode-1");
  const PriorOperator op_c = PriorOperator::build(priors.r_c, "mode-2");

  const Tensor3 x = f.reconstruct();
  double fit = 0.0;
  const auto& zv = z.values();
  const auto& xv = x.values();
  const auto& mv = mask.values();
  for (std::size_t i = 0; i < zv.size(); ++i) {
    if (!mv[i]) continue;
    fit += xv[i];
    if (zv[i] > 0.0) {
      if (xv[i] <= 0.0) return kInf;
      fit -= zv[i] * std::log(xv[i]);
    }
  }
  const double pen = detail::penalty(f.a, op_a) + detail::penalty(f.b, op_b) +
                     detail::penalty(f.c, op_c);
  return fit + 0.5 * mu * pen;
}

double partial_cost_poisson(const Eigen::MatrixXd& f, const Eigen::MatrixXd& r_prior,
                            const Eigen::MatrixXd& pi, const Eigen::MatrixXd& delta_unf,
                            const Eigen::MatrixXd& z_unf, double mu) {
  const PriorOperator op = PriorOperator::build(r_prior, "prior");
  const Eigen::MatrixXd x = f * pi.transpose();
  const double fit = kl_fit(delta_unf.array(), z_unf.array(), x.array());
  if (!std::isfinite(fit)) return kInf;
  return fit + 0.5 * mu * detail::penalty(f, op);
}

PoissonMajorizerParams poisson_majorizer_params(const Eigen::MatrixXd& f_bar,
                                                const Eigen::MatrixXd& r_prior,
                                                const Eigen::MatrixXd& pi,
                                                const Eigen::MatrixXd& delta_unf,
                                                const Eigen::MatrixXd& z_unf, double mu) {
  const PriorOperator op = PriorOperator::build(r_prior, "prior");
  return params_with_op(f_bar, op, pi, delta_unf, z_unf, mu);
}

double majorizer_poisson_value(const Eigen::MatrixXd& f, const PoissonMajorizerParams& params,
                               double mu) {
  double total = 0.0;
  for (Index r = 0; r < f.cols(); ++r) {
    for (Index i = 0; i < f.rows(); ++i) {
      const double v = f(i, r);
      double term = 0.5 * v * v - 2.0 * params.t(i, r) * v + params.u(i, r);
      if (params.s(i, r) > 0.0) {
        if (v <= 0.0) return kInf;
        term -= params.s(i, r) * std::log(v);
      }
      total += term;
    }
  }
  return mu * params.lambda * total;
}

Eigen::MatrixXd update_factor_poisson(const PoissonMajorizerParams& params) {
  // Entrywise stationary point of v^2/2 - 2tv - s log v, nonnegative branch.
  return (params.t.array() +
          (params.t.array().square() + params.s.array()).sqrt()).matrix();
}

SolveReport lrpti_solve(const Tensor3& z, const Mask3& mask, const PriorSet& priors,
                        const SolveConfig& cfg) {
  require_same_shape(z, mask);
  detail::validate_config(cfg);
  const Index m = z.dim0(), n = z.dim1(), p = z.dim2();
  detail::validate_priors(priors, m, n, p);
  const Index rank = cfg.rank > 0 ? cfg.rank : default_rank(m, n, p);

  double observed_sum = 0.0;
  Index observed_count = 0;
  for (Index pp = 0; pp < p; ++pp)
    for (Index nn = 0; nn < n; ++nn)
      for (Index mm = 0; mm < m; ++mm) {
        if (!mask(mm, nn, pp)) continue;
        const double v = z(mm, nn, pp);
        if (v < 0.0) throw input_error("count data must be nonnegative");
        observed_sum += v;
        ++observed_count;
      }
  if (observed_count == 0) throw input_error("mask observes no entries");

  const PriorOperator op_a = PriorOperator::build(priors.r_a, "mode-0");
  const PriorOperator op_b = PriorOperator::build(priors.r_b, "mode-1");
  const PriorOperator op_c = PriorOperator::build(priors.r_c, "mode-2");
  const detail::UnfoldedData data = detail::unfold_problem(z, mask);

  Rng rng(cfg.seed);
  FactorModel f;
  f.a = detail::normal_matrix(rng, m, rank).cwiseAbs();
  f.b = detail::normal_matrix(rng, n, rank).cwiseAbs();
  f.c = cfg.freeze_c ? Eigen::MatrixXd(Eigen::MatrixXd::Ones(p, rank))
                     : Eigen::MatrixXd(detail::normal_matrix(rng, p, rank).cwiseAbs());

  // Match the initial mean rate to the observed mean so early iterations see
  // sane z/x ratios.
  {
    const Tensor3 x0 = f.reconstruct();
    double total = 0.0;
    for (double v : x0.values()) total += v;
    const double init_mean = total / static_cast<double>(x0.size());
    const double target_mean = observed_sum / static_cast<double>(observed_count);
    if (init_mean > 0.0 && target_mean > 0.0) {
      const double ratio = target_mean / init_mean;
      if (cfg.freeze_c) {  // spread over the two free factors
        const double s = std::sqrt(ratio);
        f.a *= s;
        f.b *= s;
      } else {
        const double s = std::cbrt(ratio);
        f.a *= s;
        f.b *= s;
        f.c *= s;
      }
    }
  }

  const auto cost_of = [&](const FactorModel& model) {
    const Tensor3 x = model.reconstruct();
    double fit = 0.0;
    const auto& zv = z.values();
    const auto& xv = x.values();
    const auto& mv = mask.values();
    for (std::size_t i = 0; i < zv.size(); ++i) {
      if (!mv[i]) continue;
      fit += xv[i];
      if (zv[i] > 0.0) {
        if (xv[i] <= 0.0) return kInf;
        fit -= zv[i] * std::log(xv[i]);
      }
    }
    const double pen = detail::penalty(model.a, op_a) + detail::penalty(model.b, op_b) +
                       detail::penalty(model.c, op_c);
    return fit + 0.5 * cfg.mu * pen;
  };

  SolveReport report;
  double cost = cost_of(f);
  report.cost_trace.push_back(cost);

  const detail::ConvergenceTest done(cfg.tol);
  for (Index it = 1; it <= cfg.max_iters; ++it) {
    const FactorModel prev = f;
    f.a = update_factor_poisson(
        params_with_op(f.a, op_a, khatri_rao(f.c, f.b), data.d_tube, data.z_tube, cfg.mu));
    f.b = update_factor_poisson(
        params_with_op(f.b, op_b, khatri_rao(f.a, f.c), data.d_row, data.z_row, cfg.mu));
    if (!cfg.freeze_c) {
      f.c = update_factor_poisson(
          params_with_op(f.c, op_c, khatri_rao(f.b, f.a), data.d_col, data.z_col, cfg.mu));
    }
    const double next = cost_of(f);
    if (std::isnan(next)) throw divergence_error("objective became NaN");
    report.cost_trace.push_back(next);
    report.iterations = it;
    if (std::isfinite(next) && std::isfinite(cost) &&
        done(cost, next, {&prev.a, &prev.b, &prev.c}, {&f.a, &f.b, &f.c})) {
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

}  // namespace lrtc

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lrtc/model.hpp"
#include "lrtc/priors.hpp"
#include "lrtc/tensor.hpp"

namespace lrtc {

enum class Family { gaussian, poisson };

struct SolveConfig {
  Family family = Family::gaussian;
  double mu = 1.0;              // regularization weight (noise power for gaussian)
  Index rank = 0;               // component budget; 0 picks default_rank()
  double tol = 1e-8;            // relative objective-change threshold
  Index max_iters = 500;
  std::uint64_t seed = 0;
  bool freeze_c = false;        // pin C to all-ones (matrix-completion reduction)
};

// min(M,N,P)*2, capped at the identifiability ceiling min(MN, NP, PM).
Index default_rank(Index m, Index n, Index p);

struct SolveReport {
  FactorModel model;
  Tensor3 estimate;
  std::vector<double> cost_trace;  // objective before iterating, then one value per sweep
  Index iterations = 0;
  bool converged = false;
};

// ---- Gaussian (least-squares) path ----

// 1/2 ||(Z - reconstruct(f)) o mask||_F^2
//   + mu/2 * sum over factors of tr(F^T R^{-1} F).
double gaussian_cost(const Tensor3& z, const Mask3& mask, const FactorModel& f,
                     const PriorSet& priors, double mu);

// The block objective in one factor with the others folded into pi:
// 1/2 ||(Z_unf - F pi^T) o D||_F^2 + mu/2 tr(F^T R^{-1} F).
double partial_cost_gaussian(const Eigen::MatrixXd& f, const Eigen::MatrixXd& r_prior,
                             const Eigen::MatrixXd& pi, const Eigen::MatrixXd& delta_unf,
                             const Eigen::MatrixXd& z_unf, double mu);

// Quadratic surrogate anchored at f_bar; touches partial_cost_gaussian there
// and dominates it everywhere.
double majorizer_gaussian_value(const Eigen::MatrixXd& f, const Eigen::MatrixXd& f_bar,
                                const Eigen::MatrixXd& r_prior, const Eigen::MatrixXd& pi,
                                const Eigen::MatrixXd& delta_unf, const Eigen::MatrixXd& z_unf,
                                double mu);

// Exact minimizer of the surrogate: row-independent ridge solves
// f_m = (pi^T D_m pi + lambda mu I)^{-1} (pi^T D_m z_m + mu theta_m).
Eigen::MatrixXd update_factor_gaussian(const Eigen::MatrixXd& f_bar,
                                       const Eigen::MatrixXd& r_prior,
                                       const Eigen::MatrixXd& pi,
                                       const Eigen::MatrixXd& delta_unf,
                                       const Eigen::MatrixXd& z_unf, double mu);

// Block-coordinate majorize-minimize for the masked least-squares objective.
SolveReport lrti_solve(const Tensor3& z, const Mask3& mask, const PriorSet& priors,
                       const SolveConfig& cfg);

// Weight at and above which the solution collapses to the zero tensor:
// ||Z o mask||_F^(4/3).
double mu_max(const Tensor3& z, const Mask3& mask);

// ---- Poisson (KL divergence) path ----

// sum over observed cells of (x - z log x) + mu/2 * sum tr(F^T R^{-1} F).
// Returns +inf when some observed positive count meets a zero rate.
double kl_cost(const Tensor3& z, const Mask3& mask, const FactorModel& f,
               const PriorSet& priors, double mu);

double partial_cost_poisson(const Eigen::MatrixXd& f, const Eigen::MatrixXd& r_prior,
                            const Eigen::MatrixXd& pi, const Eigen::MatrixXd& delta_unf,
                            const Eigen::MatrixXd& z_unf, double mu);

// Entrywise-separable surrogate pieces for one factor update:
// g(F) = mu*lambda * sum_mr (F_mr^2 / 2 - 2 T_mr F_mr - S_mr log F_mr + U_mr).
struct PoissonMajorizerParams {
  Eigen::MatrixXd s, t, u;
  double lambda = 1.0;
};

PoissonMajorizerParams poisson_majorizer_params(const Eigen::MatrixXd& f_bar,
                                                const Eigen::MatrixXd& r_prior,
                                                const Eigen::MatrixXd& pi,
                                                const Eigen::MatrixXd& delta_unf,
                                                const Eigen::MatrixXd& z_unf, double mu);

double majorizer_poisson_value(const Eigen::MatrixXd& f, const PoissonMajorizerParams& params,
                               double mu);

// Closed-form surrogate minimizer, entrywise t + sqrt(t^2 + s); never negative.
Eigen::MatrixXd update_factor_poisson(const PoissonMajorizerParams& params);

// Multiplicative-flavor majorize-minimize for masked Poisson data. Requires
// nonnegative observed entries.
SolveReport lrpti_solve(const Tensor3& z, const Mask3& mask, const PriorSet& priors,
                        const SolveConfig& cfg);

SolveReport solve(const Tensor3& z, const Mask3& mask, const PriorSet& priors,
                  const SolveConfig& cfg);

}  // namespace lrtc

#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lrtc/tensor.hpp"

namespace lrtc {

// Per-mode factor covariances. theta is the common trace after equal-power
// calibration; identity priors leave it unset and skip calibration.
struct PriorSet {
  Eigen::MatrixXd r_a, r_b, r_c;
  std::optional<double> theta;
};

enum class KernelSource { estimated, supplied };

// Per-mode slice covariances (the extrapolation kernels). Related to the
// prior by K = rank * theta^2 * R.
struct KernelSet {
  Eigen::MatrixXd k_m, k_n, k_p;
  KernelSource sourced = KernelSource::supplied;
};

PriorSet identity_priors(Index m, Index n, Index p);

struct KernelEstimate {
  KernelSet kernels;
  PriorSet priors;
  double theta = 0.0;
};

// Estimates the three mode kernels from fully observed training tensors by
// averaging slice Gram matrices, then converts them to calibrated factor
// priors under the given rank hypothesis. Raises input_error for an empty or
// shape-mismatched sample list and conditioning_error when the samples carry
// no energy.
KernelEstimate estimate_kernels(const std::vector<Tensor3>& samples, Index rank_hint);

// Conversions between the two covariance conventions above (used by tests and
// by the extrapolation path).
KernelSet kernels_from_priors(const PriorSet& priors, Index rank, double theta);
PriorSet priors_from_kernels(const KernelSet& kernels, Index rank, double theta);

// Symmetrizes, adds a relative jitter of 1e-8 * trace/dim when the smallest
// eigenvalue falls below it, and rejects matrices that stay non-SPD.
Eigen::MatrixXd ensure_spd(const Eigen::MatrixXd& r, const char* label);

// (lambda, lambda * I - R^{-1}) for an SPD covariance R, where lambda is the
// largest eigenvalue of R^{-1}. The second matrix is PSD and weights the
// proximal anchor inside both solvers.
std::pair<double, Eigen::MatrixXd> max_eig_inverse(const Eigen::MatrixXd& r);

// Precomputed per-factor prior pieces shared by the solvers. The exact
// identity matrix short-circuits the eigensolver so identity-prior runs are
// bitwise reproducible against the plain ridge formulation.
struct PriorOperator {
  Eigen::MatrixXd inverse;     // R^{-1}
  Eigen::MatrixXd theta_base;  // lambda * I - R^{-1}
  double lambda = 1.0;
  bool identity = true;

  static PriorOperator build(const Eigen::MatrixXd& r, const char* label);
};

}  // namespace lrtc

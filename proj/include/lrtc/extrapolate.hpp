#pragma once

#include <Eigen/Dense>

#include "lrtc/priors.hpp"
#include "lrtc/solver.hpp"
#include "lrtc/tensor.hpp"

namespace lrtc {

// Wraps a fitted factor triple with the mode kernels it was trained under so
// the model can be queried off the observation grid. For grid point (m,n,p)
// pass the canonical cross-covariance columns k_M e_m etc.; evaluate then
// reproduces the fitted tensor exactly.
class KernelEvaluator {
 public:
  KernelEvaluator(const FactorModel& model, const KernelSet& kernels);

  // k_m^T K_M^{-1} A diag(k_p^T K_P^{-1} C) B^T K_N^{-1} k_n
  double evaluate(const Eigen::VectorXd& k_m, const Eigen::VectorXd& k_n,
                  const Eigen::VectorXd& k_p) const;

  // Convenience: evaluate at grid point (m, n, p).
  double at(Index m, Index n, Index p) const;

  const FactorModel& model() const { return model_; }

 private:
  FactorModel model_;
  Eigen::MatrixXd alpha_, beta_, gamma_;  // K^{-1} A, K^{-1} B, K^{-1} C
};

// Fits the Gaussian solver with slice-coupling priors and reads off the slice
// that carries no observations. The slice at missing_index along mode must be
// entirely unobserved; a partially observed slice or a mode of extent 1 is an
// input_error.
Eigen::MatrixXd recover_missing_slice(const Tensor3& z, const Mask3& mask,
                                      const PriorSet& priors, const SolveConfig& cfg,
                                      Mode mode, Index missing_index);

}  // namespace lrtc

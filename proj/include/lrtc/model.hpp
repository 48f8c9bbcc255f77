#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lrtc/tensor.hpp"

namespace lrtc {

// Raw factor triple of a rank-R decomposition: A is M x R, B is N x R,
// C is P x R.
struct FactorModel {
  Eigen::MatrixXd a, b, c;

  Index rank() const { return a.cols(); }
  Tensor3 reconstruct() const { return parafac_reconstruct(a, b, c); }
};

// Same decomposition with every component split into a scale gamma_r and unit
// direction columns. A component that vanishes keeps gamma_r = 0 with all
// three direction columns zeroed.
struct NormalizedModel {
  Eigen::VectorXd gamma;
  Eigen::MatrixXd u, v, w;

  Index rank() const { return gamma.size(); }
  // Folds the scales back into the first factor.
  FactorModel to_factors() const;
};

NormalizedModel normalize(const FactorModel& f);

// Number of components whose scale exceeds rel_tol times the largest scale.
// All-zero models (and models whose largest scale is exactly zero) count as
// rank 0.
Index effective_rank(const FactorModel& f, double rel_tol = 1e-2);

// (sum_r gamma_r^q)^(1/q); q = 2/3 is the scale measure the solvers shrink.
double gamma_pseudonorm(const FactorModel& f, double q = 2.0 / 3.0);

// Largest pairwise relative gap among the three factor Frobenius norms,
// measured against the smaller of each pair. Zero when all three agree; +inf
// when one factor is zero while another is not; 0 for the all-zero model.
double equal_norm_residual(const FactorModel& f);

}  // namespace lrtc

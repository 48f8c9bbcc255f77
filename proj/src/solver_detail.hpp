#pragma once

// Internal pieces shared by the least-squares and Poisson solvers.

#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "lrtc/priors.hpp"
#include "lrtc/rng.hpp"
#include "lrtc/solver.hpp"
#include "lrtc/tensor.hpp"

namespace lrtc::detail {

// Data and mask unfoldings for the three update directions; fixed across
// iterations.
struct UnfoldedData {
  Eigen::MatrixXd z_tube, d_tube;  // M x NP
  Eigen::MatrixXd z_row, d_row;    // N x PM
  Eigen::MatrixXd z_col, d_col;    // P x MN
};

inline UnfoldedData unfold_problem(const Tensor3& z, const Mask3& mask) {
  UnfoldedData u;
  u.z_tube = unfold_matrix(z, Mode::tube);
  u.d_tube = unfold_mask(mask, Mode::tube);
  u.z_row = unfold_matrix(z, Mode::row);
  u.d_row = unfold_mask(mask, Mode::row);
  u.z_col = unfold_matrix(z, Mode::column);
  u.d_col = unfold_mask(mask, Mode::column);
  return u;
}

inline void validate_config(const SolveConfig& cfg) {
  if (!(cfg.mu > 0.0) || !std::isfinite(cfg.mu)) throw input_error("mu must be positive and finite");
  if (!(cfg.tol > 0.0)) throw input_error("tol must be positive");
  if (cfg.max_iters <= 0) throw input_error("max_iters must be positive");
  if (cfg.rank < 0) throw input_error("rank must be nonnegative");
}

inline void validate_priors(const PriorSet& priors, Index m, Index n, Index p) {
  if (priors.r_a.rows() != m || priors.r_a.cols() != m ||
      priors.r_b.rows() != n || priors.r_b.cols() != n ||
      priors.r_c.rows() != p || priors.r_c.cols() != p) {
    throw shape_error("prior covariance dims do not match the tensor");
  }
}

// Column-major standard-normal fill; the draw order is part of the
// reproducibility contract.
inline Eigen::MatrixXd normal_matrix(Rng& rng, Index rows, Index cols) {
  Eigen::MatrixXd out(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) out(r, c) = rng.normal();
  return out;
}

// tr(F^T R^{-1} F) under a prebuilt prior operator.
inline double penalty(const Eigen::MatrixXd& f, const PriorOperator& op) {
  if (op.identity) return f.squaredNorm();
  return (f.array() * (op.inverse * f).array()).sum();
}

// Relative movement of one factor between sweeps; exact zeros count as
// stationary.
inline bool factor_settled(const Eigen::MatrixXd& prev, const Eigen::MatrixXd& cur,
                           double move_tol) {
  const double delta = (cur - prev).norm();
  const double scale = cur.norm();
  if (scale == 0.0) return delta == 0.0;
  return delta <= move_tol * scale;
}

// Stop once the objective change is negligible and all factors have stopped
// moving. The movement condition lets collapsing runs (mu at or above the
// shutoff weight) continue until the factors reach exact zero instead of
// freezing at a tiny plateau.
struct ConvergenceTest {
  double tol;
  double move_tol;

  explicit ConvergenceTest(double tol_) : tol(tol_), move_tol(std::sqrt(tol_)) {}

  bool operator()(double prev_cost, double cost, const std::array<const Eigen::MatrixXd*, 3>& prev,
                  const std::array<const Eigen::MatrixXd*, 3>& cur) const {
    if (std::abs(cost - prev_cost) >= tol * (1.0 + std::abs(cost))) return false;
    for (int i = 0; i < 3; ++i) {
      if (!factor_settled(*prev[i], *cur[i], move_tol)) return false;
    }
    return true;
  }
};

}  // namespace lrtc::detail

#include "lrtc/extrapolate.hpp"

#include <string>

#include <Eigen/Dense>

#include "lrtc/errors.hpp"

namespace lrtc {

namespace {

Eigen::MatrixXd kernel_solve(const Eigen::MatrixXd& k, const Eigen::MatrixXd& rhs,
                             const char* label) {
  if (k.isIdentity(0.0)) return rhs;  // keeps identity-kernel runs bit-identical
  const Eigen::MatrixXd spd = ensure_spd(k, label);
  Eigen::LLT<Eigen::MatrixXd> llt(spd);
  if (llt.info() != Eigen::Success) {
    throw conditioning_error(std::string(label) + " kernel is not positive definite");
  }
  return llt.solve(rhs);
}

}  // namespace

KernelEvaluator::KernelEvaluator(const FactorModel& model, const KernelSet& kernels)
    : model_(model) {
  if (kernels.k_m.rows() != model.a.rows() || kernels.k_n.rows() != model.b.rows() ||
      kernels.k_p.rows() != model.c.rows()) {
    throw shape_error("kernel dims do not match the factor model");
  }
  alpha_ = kernel_solve(kernels.k_m, model.a, "mode-0");
  beta_ = kernel_solve(kernels.k_n, model.b, "mode-1");
  gamma_ = kernel_solve(kernels.k_p, model.c, "mode-2");
}

double KernelEvaluator::evaluate(const Eigen::VectorXd& k_m, const Eigen::VectorXd& k_n,
                                 const Eigen::VectorXd& k_p) const {
  if (k_m.size() != alpha_.rows() || k_n.size() != beta_.rows() || k_p.size() != gamma_.rows()) {
    throw shape_error("cross-covariance vector sizes do not match the kernels");
  }
  const Eigen::RowVectorXd wa = k_m.transpose() * alpha_;
  const Eigen::RowVectorXd wb = k_n.transpose() * beta_;
  const Eigen::RowVectorXd wc = k_p.transpose() * gamma_;
  return (wa.array() * wb.array() * wc.array()).sum();
}

double KernelEvaluator::at(Index m, Index n, Index p) const {
  // Canonical cross-covariances are the kernel columns; K^{-1} K e = e, so
  // this reduces to reading the fitted factors at grid indices.
  if (m < 0 || m >= model_.a.rows() || n < 0 || n >= model_.b.rows() || p < 0 ||
      p >= model_.c.rows()) {
    throw shape_error("grid point out of range");
  }
  return (model_.a.row(m).array() * model_.b.row(n).array() * model_.c.row(p).array()).sum();
}

Eigen::MatrixXd recover_missing_slice(const Tensor3& z, const Mask3& mask,
                                      const PriorSet& priors, const SolveConfig& cfg,
                                      Mode mode, Index missing_index) {
  require_same_shape(z, mask);
  const Index extent = z.extent(mode);
  if (extent <= 1) {
    throw input_error(std::string("cannot extrapolate along a ") + mode_name(mode) +
                      " mode of extent " + std::to_string(extent));
  }
  if (missing_index < 0 || missing_index >= extent) {
    throw shape_error("missing slice index out of range");
  }

  // The target slice must carry no observations; otherwise this is ordinary
  // imputation and the caller should not be here.
  const Index m = z.dim0(), n = z.dim1(), p = z.dim2();
  for (Index pp = 0; pp < p; ++pp) {
    for (Index nn = 0; nn < n; ++nn) {
      for (Index mm = 0; mm < m; ++mm) {
        const bool in_slice = (mode == Mode::row && mm == missing_index) ||
                              (mode == Mode::column && nn == missing_index) ||
                              (mode == Mode::tube && pp == missing_index);
        if (in_slice && mask(mm, nn, pp)) {
          throw input_error("slice marked missing has observed entries");
        }
      }
    }
  }

  const SolveReport report = lrti_solve(z, mask, priors, cfg);
  return slice(report.estimate, mode, missing_index);
}

}  // namespace lrtc

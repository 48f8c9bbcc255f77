#include "lrtc/priors.hpp"

#include <cmath>
#include <string>

#include "lrtc/errors.hpp"

namespace lrtc {

namespace {

constexpr double kJitterRel = 1e-8;

bool is_exact_identity(const Eigen::MatrixXd& r) {
  if (r.rows() != r.cols()) return false;
  return r.isIdentity(0.0);
}

}  // namespace

PriorSet identity_priors(Index m, Index n, Index p) {
  if (m <= 0 || n <= 0 || p <= 0) throw shape_error("prior dims must be positive");
  PriorSet out;
  out.r_a = Eigen::MatrixXd::Identity(m, m);
  out.r_b = Eigen::MatrixXd::Identity(n, n);
  out.r_c = Eigen::MatrixXd::Identity(p, p);
  out.theta = std::nullopt;  // traces differ across modes, calibration skipped
  return out;
}

Eigen::MatrixXd ensure_spd(const Eigen::MatrixXd& r, const char* label) {
  if (r.rows() != r.cols()) {
    throw shape_error(std::string(label) + " covariance must be square");
  }
  const double scale = r.cwiseAbs().maxCoeff();
  if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, scale)) {
    throw input_error(std::string(label) + " covariance is not symmetric");
  }
  Eigen::MatrixXd sym = 0.5 * (r + r.transpose());
  const double floor = kJitterRel * sym.trace() / static_cast<double>(sym.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw conditioning_error(std::string(label) + " eigendecomposition failed");
  }
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < floor || min_eig <= 0.0) {
    if (floor <= 0.0) {
      throw conditioning_error(std::string(label) + " covariance has nonpositive trace");
    }
    sym += floor * Eigen::MatrixXd::Identity(sym.rows(), sym.cols());
    if (sym.selfadjointView<Eigen::Lower>().eigenvalues().minCoeff() <= 0.0) {
      throw conditioning_error(std::string(label) + " covariance is not positive definite");
    }
  }
  return sym;
}

std::pair<double, Eigen::MatrixXd> max_eig_inverse(const Eigen::MatrixXd& r) {
  if (is_exact_identity(r)) {
    return {1.0, Eigen::MatrixXd::Zero(r.rows(), r.cols())};
  }
  const Eigen::MatrixXd spd = ensure_spd(r, "prior");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spd);
  if (eig.info() != Eigen::Success) throw conditioning_error("prior eigendecomposition failed");
  const Eigen::VectorXd d = eig.eigenvalues();
  if (d.minCoeff() <= 0.0) throw conditioning_error("prior is singular after jitter");
  const double lambda = 1.0 / d.minCoeff();  // top eigenvalue of R^{-1}
  const Eigen::MatrixXd inv =
      eig.eigenvectors() * d.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  Eigen::MatrixXd base = lambda * Eigen::MatrixXd::Identity(r.rows(), r.cols()) - inv;
  return {lambda, std::move(base)};
}

PriorOperator PriorOperator::build(const Eigen::MatrixXd& r, const char* label) {
  PriorOperator op;
  if (is_exact_identity(r)) {
    op.inverse = Eigen::MatrixXd::Identity(r.rows(), r.cols());
    op.theta_base = Eigen::MatrixXd::Zero(r.rows(), r.cols());
    op.lambda = 1.0;
    op.identity = true;
    return op;
  }
  const Eigen::MatrixXd spd = ensure_spd(r, label);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spd);
  if (eig.info() != Eigen::Success) {
    throw conditioning_error(std::string(label) + " eigendecomposition failed");
  }
  const Eigen::VectorXd d = eig.eigenvalues();
  if (d.minCoeff() <= 0.0) {
    throw conditioning_error(std::string(label) + " prior is singular after jitter");
  }
  op.lambda = 1.0 / d.minCoeff();
  op.inverse = eig.eigenvectors() * d.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  op.theta_base = op.lambda * Eigen::MatrixXd::Identity(r.rows(), r.cols()) - op.inverse;
  op.identity = false;
  return op;
}

KernelEstimate estimate_kernels(const std::vector<Tensor3>& samples, Index rank_hint) {
  if (samples.empty()) throw input_error("kernel estimation needs at least one sample tensor");
  if (rank_hint <= 0) throw input_error("rank hint must be positive");
  const Index m = samples[0].dim0(), n = samples[0].dim1(), p = samples[0].dim2();

  Eigen::MatrixXd k_m = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd k_n = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd k_p = Eigen::MatrixXd::Zero(p, p);
  double energy = 0.0;
  for (const Tensor3& x : samples) {
    if (x.dim0() != m || x.dim1() != n || x.dim2() != p) {
      throw input_error("sample tensors must share one shape");
    }
    // Rows of each unfolding are the vectorized slices of that mode, so the
    // Gram matrix of the unfolding is the matrix of slice inner products.
    const Eigen::MatrixXd t = unfold_matrix(x, Mode::tube);    // M x NP
    const Eigen::MatrixXd r = unfold_matrix(x, Mode::row);     // N x PM
    const Eigen::MatrixXd c = unfold_matrix(x, Mode::column);  // P x MN
    k_m.noalias() += t * t.transpose();
    k_n.noalias() += r * r.transpose();
    k_p.noalias() += c * c.transpose();
    energy += frobenius_sq(x);
  }
  const double count = static_cast<double>(samples.size());
  k_m /= count;
  k_n /= count;
  k_p /= count;
  energy /= count;

  if (energy <= 0.0) throw conditioning_error("sample tensors carry no energy");
  const double theta = std::cbrt(energy / static_cast<double>(rank_hint));

  KernelEstimate est;
  est.theta = theta;
  est.kernels.k_m = ensure_spd(k_m, "mode-0 kernel");
  est.kernels.k_n = ensure_spd(k_n, "mode-1 kernel");
  est.kernels.k_p = ensure_spd(k_p, "mode-2 kernel");
  est.kernels.sourced = KernelSource::estimated;

  const double denom = static_cast<double>(rank_hint) * theta * theta;
  Eigen::MatrixXd r_a = est.kernels.k_m / denom;
  Eigen::MatrixXd r_b = est.kernels.k_n / denom;
  Eigen::MatrixXd r_c = est.kernels.k_p / denom;

  // Equal-power calibration: all three traces are pinned to their geometric
  // mean, which keeps the product of traces (and with it the implied energy
  // budget) unchanged.
  const double ta = r_a.trace(), tb = r_b.trace(), tc = r_c.trace();
  const double target = std::cbrt(ta * tb * tc);
  r_a *= target / ta;
  r_b *= target / tb;
  r_c *= target / tc;

  est.priors.r_a = std::move(r_a);
  est.priors.r_b = std::move(r_b);
  est.priors.r_c = std::move(r_c);
  est.priors.theta = target;
  return est;
}

KernelSet kernels_from_priors(const PriorSet& priors, Index rank, double theta) {
  if (rank <= 0) throw input_error("rank must be positive");
  const double scale = static_cast<double>(rank) * theta * theta;
  KernelSet out;
  out.k_m = scale * priors.r_a;
  out.k_n = scale * priors.r_b;
  out.k_p = scale * priors.r_c;
  out.sourced = KernelSource::supplied;
  return out;
}

PriorSet priors_from_kernels(const KernelSet& kernels, Index rank, double theta) {
  if (rank <= 0) throw input_error("rank must be positive");
  if (theta <= 0.0) throw input_error("theta must be positive");
  const double scale = static_cast<double>(rank) * theta * theta;
  PriorSet out;
  out.r_a = kernels.k_m / scale;
  out.r_b = kernels.k_n / scale;
  out.r_c = kernels.k_p / scale;
  out.theta = theta;
  return out;
}

}  // namespace lrtc

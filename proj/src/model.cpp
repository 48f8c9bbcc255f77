#include "lrtc/model.hpp"

#include <cmath>
#include <limits>

namespace lrtc {

FactorModel NormalizedModel::to_factors() const {
  return FactorModel{u * gamma.asDiagonal(), v, w};
}

NormalizedModel normalize(const FactorModel& f) {
  const Index r = f.rank();
  if (f.b.cols() != r || f.c.cols() != r) throw shape_error("factor column counts differ");
  NormalizedModel out;
  out.gamma.resize(r);
  out.u = Eigen::MatrixXd::Zero(f.a.rows(), r);
  out.v = Eigen::MatrixXd::Zero(f.b.rows(), r);
  out.w = Eigen::MatrixXd::Zero(f.c.rows(), r);
  for (Index j = 0; j < r; ++j) {
    const double na = f.a.col(j).norm();
    const double nb = f.b.col(j).norm();
    const double nc = f.c.col(j).norm();
    const double g = na * nb * nc;
    out.gamma(j) = g;
    if (g > 0.0) {
      out.u.col(j) = f.a.col(j) / na;
      out.v.col(j) = f.b.col(j) / nb;
      out.w.col(j) = f.c.col(j) / nc;
    }
    // a vanished component keeps zero direction columns
  }
  return out;
}

Index effective_rank(const FactorModel& f, double rel_tol) {
  const NormalizedModel n = normalize(f);
  const double top = n.gamma.size() > 0 ? n.gamma.maxCoeff() : 0.0;
  if (top <= 0.0) return 0;
  Index count = 0;
  for (Index j = 0; j < n.gamma.size(); ++j) {
    if (n.gamma(j) > rel_tol * top) ++count;
  }
  return count;
}

double gamma_pseudonorm(const FactorModel& f, double q) {
  const NormalizedModel n = normalize(f);
  double accum = 0.0;
  for (Index j = 0; j < n.gamma.size(); ++j) accum += std::pow(n.gamma(j), q);
  if (accum == 0.0) return 0.0;
  return std::pow(accum, 1.0 / q);
}

double equal_norm_residual(const FactorModel& f) {
  const double norms[3] = {f.a.norm(), f.b.norm(), f.c.norm()};
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double lo = std::min(norms[i], norms[j]);
      const double hi = std::max(norms[i], norms[j]);
      if (hi == 0.0) continue;  // both zero: perfectly balanced
      if (lo == 0.0) return std::numeric_limits<double>::infinity();
      worst = std::max(worst, (hi - lo) / lo);
    }
  }
  return worst;
}

}  // namespace lrtc

#include "lrtc/tensor.hpp"

#include <string>

namespace lrtc {

namespace {

void check_dims(Index m, Index n, Index p) {
  if (m <= 0 || n <= 0 || p <= 0) {
    throw shape_error("tensor dims must be positive, got " + std::to_string(m) + "x" +
                      std::to_string(n) + "x" + std::to_string(p));
  }
}

void check_index(Index value, Index extent, const char* which) {
  if (value < 0 || value >= extent) {
    throw shape_error(std::string(which) + " index " + std::to_string(value) +
                      " out of range [0, " + std::to_string(extent) + ")");
  }
}

}  // namespace

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::row: return "row";
    case Mode::column: return "column";
    case Mode::tube: return "tube";
  }
  return "?";
}

Tensor3::Tensor3(Index m, Index n, Index p) : m_(m), n_(n), p_(p) {
  check_dims(m, n, p);
  values_.assign(static_cast<std::size_t>(m * n * p), 0.0);
}

Tensor3 Tensor3::from_values(Index m, Index n, Index p, std::vector<double> values) {
  check_dims(m, n, p);
  if (static_cast<Index>(values.size()) != m * n * p) {
    throw shape_error("value count " + std::to_string(values.size()) + " does not fill " +
                      std::to_string(m * n * p) + " cells");
  }
  Tensor3 t;
  t.m_ = m;
  t.n_ = n;
  t.p_ = p;
  t.values_ = std::move(values);
  return t;
}

Index Tensor3::extent(Mode mode) const {
  switch (mode) {
    case Mode::row: return m_;
    case Mode::column: return n_;
    case Mode::tube: return p_;
  }
  return 0;
}

Index Tensor3::offset(Index m, Index n, Index p) const {
  check_index(m, m_, "row");
  check_index(n, n_, "column");
  check_index(p, p_, "tube");
  return (p * n_ + n) * m_ + m;
}

Mask3::Mask3(Index m, Index n, Index p) : m_(m), n_(n), p_(p) {
  check_dims(m, n, p);
  values_.assign(static_cast<std::size_t>(m * n * p), 0);
}

Mask3 Mask3::ones(Index m, Index n, Index p) {
  Mask3 mask(m, n, p);
  std::fill(mask.values_.begin(), mask.values_.end(), std::uint8_t{1});
  return mask;
}

Mask3 Mask3::from_values(Index m, Index n, Index p, std::vector<std::uint8_t> values) {
  check_dims(m, n, p);
  if (static_cast<Index>(values.size()) != m * n * p) {
    throw shape_error("mask value count " + std::to_string(values.size()) + " does not fill " +
                      std::to_string(m * n * p) + " cells");
  }
  for (std::uint8_t v : values) {
    if (v > 1) throw input_error("mask entries must be 0 or 1");
  }
  Mask3 mask;
  mask.m_ = m;
  mask.n_ = n;
  mask.p_ = p;
  mask.values_ = std::move(values);
  return mask;
}

Index Mask3::count() const {
  Index total = 0;
  for (std::uint8_t v : values_) total += v;
  return total;
}

Index Mask3::offset(Index m, Index n, Index p) const {
  check_index(m, m_, "row");
  check_index(n, n_, "column");
  check_index(p, p_, "tube");
  return (p * n_ + n) * m_ + m;
}

void require_same_shape(const Tensor3& t, const Mask3& mask) {
  if (t.dim0() != mask.dim0() || t.dim1() != mask.dim1() || t.dim2() != mask.dim2()) {
    throw shape_error("tensor and mask shapes differ");
  }
}

Eigen::MatrixXd slice(const Tensor3& t, Mode mode, Index index) {
  const Index m = t.dim0(), n = t.dim1(), p = t.dim2();
  Eigen::MatrixXd out;
  switch (mode) {
    case Mode::row: {  // N x P
      check_index(index, m, "row");
      out.resize(n, p);
      for (Index pp = 0; pp < p; ++pp)
        for (Index nn = 0; nn < n; ++nn) out(nn, pp) = t(index, nn, pp);
      break;
    }
    case Mode::column: {  // P x M
      check_index(index, n, "column");
      out.resize(p, m);
      for (Index mm = 0; mm < m; ++mm)
        for (Index pp = 0; pp < p; ++pp) out(pp, mm) = t(mm, index, pp);
      break;
    }
    case Mode::tube: {  // M x N
      check_index(index, p, "tube");
      out.resize(m, n);
      for (Index nn = 0; nn < n; ++nn)
        for (Index mm = 0; mm < m; ++mm) out(mm, nn) = t(mm, nn, index);
      break;
    }
  }
  return out;
}

Eigen::Map<const Eigen::MatrixXd> tube_unfolding_view(const Tensor3& t) {
  return Eigen::Map<const Eigen::MatrixXd>(t.values().data(), t.dim0(), t.dim1() * t.dim2());
}

Eigen::MatrixXd unfold_matrix(const Tensor3& t, Mode mode) {
  const Index m = t.dim0(), n = t.dim1(), p = t.dim2();
  switch (mode) {
    case Mode::tube:
      return tube_unfolding_view(t);
    case Mode::row: {  // N x (P*M), column m*P + p
      Eigen::MatrixXd out(n, p * m);
      for (Index mm = 0; mm < m; ++mm)
        for (Index pp = 0; pp < p; ++pp)
          for (Index nn = 0; nn < n; ++nn) out(nn, mm * p + pp) = t(mm, nn, pp);
      return out;
    }
    case Mode::column: {  // P x (M*N), column n*M + m
      Eigen::MatrixXd out(p, m * n);
      for (Index nn = 0; nn < n; ++nn)
        for (Index mm = 0; mm < m; ++mm)
          for (Index pp = 0; pp < p; ++pp) out(pp, nn * m + mm) = t(mm, nn, pp);
      return out;
    }
  }
  return {};
}

Unfolding unfold(const Tensor3& t, Mode mode) {
  return Unfolding{unfold_matrix(t, mode), mode, {t.dim0(), t.dim1(), t.dim2()}};
}

Eigen::MatrixXd unfold_mask(const Mask3& mask, Mode mode) {
  const Index m = mask.dim0(), n = mask.dim1(), p = mask.dim2();
  Tensor3 t(m, n, p);
  for (Index pp = 0; pp < p; ++pp)
    for (Index nn = 0; nn < n; ++nn)
      for (Index mm = 0; mm < m; ++mm) t(mm, nn, pp) = mask(mm, nn, pp);
  return unfold_matrix(t, mode);
}

Tensor3 refold(const Unfolding& u) {
  const Index m = u.dims[0], n = u.dims[1], p = u.dims[2];
  Tensor3 t(m, n, p);
  switch (u.mode) {
    case Mode::tube:
      if (u.matrix.rows() != m || u.matrix.cols() != n * p)
        throw shape_error("tube unfolding has wrong shape");
      for (Index pp = 0; pp < p; ++pp)
        for (Index nn = 0; nn < n; ++nn)
          for (Index mm = 0; mm < m; ++mm) t(mm, nn, pp) = u.matrix(mm, pp * n + nn);
      break;
    case Mode::row:
      if (u.matrix.rows() != n || u.matrix.cols() != p * m)
        throw shape_error("row unfolding has wrong shape");
      for (Index mm = 0; mm < m; ++mm)
        for (Index pp = 0; pp < p; ++pp)
          for (Index nn = 0; nn < n; ++nn) t(mm, nn, pp) = u.matrix(nn, mm * p + pp);
      break;
    case Mode::column:
      if (u.matrix.rows() != p || u.matrix.cols() != m * n)
        throw shape_error("column unfolding has wrong shape");
      for (Index nn = 0; nn < n; ++nn)
        for (Index mm = 0; mm < m; ++mm)
          for (Index pp = 0; pp < p; ++pp) t(mm, nn, pp) = u.matrix(pp, nn * m + mm);
      break;
  }
  return t;
}

Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.cols() != y.cols()) {
    throw shape_error("khatri_rao needs equal column counts, got " + std::to_string(x.cols()) +
                      " and " + std::to_string(y.cols()));
  }
  Eigen::MatrixXd out(x.rows() * y.rows(), x.cols());
  for (Index r = 0; r < x.cols(); ++r)
    for (Index i = 0; i < x.rows(); ++i) out.block(i * y.rows(), r, y.rows(), 1) = x(i, r) * y.col(r);
  return out;
}

Tensor3 parafac_reconstruct(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                            const Eigen::MatrixXd& c) {
  if (a.cols() != b.cols() || b.cols() != c.cols()) {
    throw shape_error("factor matrices must share a column count");
  }
  Tensor3 t(a.rows(), b.rows(), c.rows());
  // One tube slice at a time: X_p = A diag(C(p,:)) B^T.
  Eigen::Map<Eigen::MatrixXd> flat(t.values().data(), a.rows(), b.rows() * c.rows());
  for (Index p = 0; p < c.rows(); ++p) {
    flat.middleCols(p * b.rows(), b.rows()).noalias() =
        a * c.row(p).asDiagonal() * b.transpose();
  }
  return t;
}

double frobenius_sq(const Tensor3& t) {
  double total = 0.0;
  for (double v : t.values()) total += v * v;
  return total;
}

double frobenius_sq(const Tensor3& t, const Mask3& mask) {
  require_same_shape(t, mask);
  double total = 0.0;
  const auto& tv = t.values();
  const auto& mv = mask.values();
  for (std::size_t i = 0; i < tv.size(); ++i) {
    if (mv[i]) total += tv[i] * tv[i];
  }
  return total;
}

}  // namespace lrtc

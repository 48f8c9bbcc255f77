#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lrtc/errors.hpp"

namespace lrtc {

using Eigen::Index;

// The three ways of slicing an M x N x P tensor. A "row" slice fixes the first
// index (N x P matrix), a "column" slice fixes the second (P x M), and a
// "tube" slice fixes the third (M x N).
enum class Mode { row, column, tube };

const char* mode_name(Mode mode);

// Dense third-order tensor, entries addressed as (m, n, p). Storage is
// slice-major: tube slice p occupies a contiguous M x N column-major block,
// so the linear offset of (m, n, p) is (p * N + n) * M + m. Instances are
// safe to share across threads once filled.
class Tensor3 {
 public:
  Tensor3() : m_(0), n_(0), p_(0) {}
  Tensor3(Index m, Index n, Index p);  // zero-filled
  static Tensor3 from_values(Index m, Index n, Index p, std::vector<double> values);

  Index dim0() const { return m_; }
  Index dim1() const { return n_; }
  Index dim2() const { return p_; }
  Index extent(Mode mode) const;
  Index size() const { return m_ * n_ * p_; }

  double operator()(Index m, Index n, Index p) const { return values_[offset(m, n, p)]; }
  double& operator()(Index m, Index n, Index p) { return values_[offset(m, n, p)]; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  Index offset(Index m, Index n, Index p) const;

 private:
  Index m_, n_, p_;
  std::vector<double> values_;
};

// Binary observation pattern with the same storage layout as Tensor3.
// 1 marks an observed entry.
class Mask3 {
 public:
  Mask3() : m_(0), n_(0), p_(0) {}
  Mask3(Index m, Index n, Index p);  // all zero (nothing observed)
  static Mask3 ones(Index m, Index n, Index p);
  static Mask3 from_values(Index m, Index n, Index p, std::vector<std::uint8_t> values);

  Index dim0() const { return m_; }
  Index dim1() const { return n_; }
  Index dim2() const { return p_; }
  Index size() const { return m_ * n_ * p_; }

  std::uint8_t operator()(Index m, Index n, Index p) const { return values_[offset(m, n, p)]; }
  std::uint8_t& operator()(Index m, Index n, Index p) { return values_[offset(m, n, p)]; }

  Index count() const;  // number of observed entries

  const std::vector<std::uint8_t>& values() const { return values_; }
  std::vector<std::uint8_t>& values() { return values_; }

  Index offset(Index m, Index n, Index p) const;

 private:
  Index m_, n_, p_;
  std::vector<std::uint8_t> values_;
};

void require_same_shape(const Tensor3& t, const Mask3& mask);

// One mode-k unfolding together with enough bookkeeping to refold it.
// Conventions (slab = the slice owning a column block):
//   tube:   M x (N*P), entry (m, p*N + n)
//   row:    N x (P*M), entry (n, m*P + p)
//   column: P x (M*N), entry (p, n*M + m)
struct Unfolding {
  Eigen::MatrixXd matrix;
  Mode mode = Mode::tube;
  std::array<Index, 3> dims{0, 0, 0};  // original (M, N, P)
};

Eigen::MatrixXd slice(const Tensor3& t, Mode mode, Index index);
Unfolding unfold(const Tensor3& t, Mode mode);
Eigen::MatrixXd unfold_matrix(const Tensor3& t, Mode mode);
Eigen::MatrixXd unfold_mask(const Mask3& mask, Mode mode);  // 0/1 doubles
Tensor3 refold(const Unfolding& u);

// Zero-copy view of the tube unfolding (the storage layout is exactly that
// matrix in column-major order).
Eigen::Map<const Eigen::MatrixXd> tube_unfolding_view(const Tensor3& t);

// Columnwise Khatri-Rao product: (X kr Y)(i * Y.rows() + j, r) = X(i,r) Y(j,r).
Eigen::MatrixXd khatri_rao(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

// X(m,n,p) = sum_r A(m,r) B(n,r) C(p,r).
Tensor3 parafac_reconstruct(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                            const Eigen::MatrixXd& c);

double frobenius_sq(const Tensor3& t);
double frobenius_sq(const Tensor3& t, const Mask3& mask);

}  // namespace lrtc

#pragma once

// Energy-statistics algebra: pairwise distances, double and U-centering,
// distance covariance / variance / correlation, the inner product on
// U-centered matrices, orthogonal projection and partial distance
// correlation.
//
// The statistics (dcov2, dvar2, dcor, pdcor2) always use exact Euclidean
// distances. The eps-smoothed distances exist for the differentiable UniCAM
// path only.

#include <cstddef>
#include <span>
#include <vector>

#include "unicam/tensor.hpp"

namespace unicam {

/// n x n row-major matrix; the tag says which invariants hold.
template <typename Kind>
class PairMatrix {
 public:
  PairMatrix(std::size_t n, std::vector<double> values);
  static PairMatrix zeros(std::size_t n) { return PairMatrix(n, std::vector<double>(n * n, 0.0)); }

  std::size_t n() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  std::span<const double> values() const noexcept { return values_; }
  double max_abs() const noexcept;

 private:
  std::size_t n_;
  std::vector<double> values_;
};

struct DistanceKind {};
struct DoubleCenteredKind {};
struct UCenteredKind {};

// Symmetric, nonnegative, zero diagonal.
using DistMatrix = PairMatrix<DistanceKind>;
// Row, column and grand means vanish.
using CenteredMatrix = PairMatrix<DoubleCenteredKind>;
// Symmetric, zero diagonal, row and column sums vanish. Requires n >= 4.
using UCenteredMatrix = PairMatrix<UCenteredKind>;

extern template class PairMatrix<DistanceKind>;
extern template class PairMatrix<DoubleCenteredKind>;
extern template class PairMatrix<UCenteredKind>;

/// Rows of `x` (rank 1 is treated as [n,1], higher ranks are flattened) are
/// the samples. The diagonal is forced to exactly 0 even when eps > 0.
DistMatrix pairwise_distance(const Tensor& x, double eps = 0.0);

CenteredMatrix double_center(const DistMatrix& d);

/// Throws ContractError for n < 4.
UCenteredMatrix u_center(const DistMatrix& d);

/// Squared sample distance covariance from double-centered exact distances.
double dcov2(const Tensor& x, const Tensor& y);
double dvar2(const Tensor& x);

/// Squared distance correlation R^2 in [0, 1]; 0 when either distance
/// variance vanishes.
double dcor(const Tensor& x, const Tensor& y);

/// Result of dcor with the zero-variance branch made visible.
struct DcorValue {
  double value = 0.0;
  bool degenerate = false;  // V^2(x,x) * V^2(y,y) == 0
};
DcorValue dcor_checked(const Tensor& x, const Tensor& y);

/// (1 / (n(n-3))) * sum_{j != k} p_jk q_jk. Requires n >= 4.
double hilbert_inner(const UCenteredMatrix& p, const UCenteredMatrix& q);

/// Component of p orthogonal to q; p itself when <q,q> == 0.
UCenteredMatrix project_out(const UCenteredMatrix& p, const UCenteredMatrix& q);

/// Projection coefficient <p,q>/<q,q>, defined as 0 when <q,q> == 0.
double projection_coefficient(const UCenteredMatrix& p, const UCenteredMatrix& q);

/// p - c * q
UCenteredMatrix subtract_scaled(const UCenteredMatrix& p, double c, const UCenteredMatrix& q);

/// Partial distance correlation of x and y given z, in [-1, 1]; 0 when
/// either projected norm vanishes.
double pdcor2(const Tensor& x, const Tensor& y, const Tensor& z);

}  // namespace unicam

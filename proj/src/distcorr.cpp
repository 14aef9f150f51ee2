#include "unicam/distcorr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "unicam/errors.hpp"
#include "unicam/kernels.hpp"

namespace unicam {

template <typename Kind>
PairMatrix<Kind>::PairMatrix(std::size_t n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
  if (values_.size() != n_ * n_)
    throw ContractError("pair matrix of order " + std::to_string(n_) + " needs " +
                        std::to_string(n_ * n_) + " values, got " +
                        std::to_string(values_.size()));
}

template <typename Kind>
double PairMatrix<Kind>::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

template class PairMatrix<DistanceKind>;
template class PairMatrix<DoubleCenteredKind>;
template class PairMatrix<UCenteredKind>;

namespace {

// Projected norms below this fraction of the original norm count as zero.
constexpr double kResidualFloor = 1e-12;

void require_same_n(std::size_t a, std::size_t b, const char* op) {
  if (a != b)
    throw ContractError(std::string(op) + ": sample counts differ (" + std::to_string(a) +
                        " vs " + std::to_string(b) + ")");
}

void require_ucentered_n(std::size_t n, const char* op) {
  if (n < 4)
    throw ContractError(std::string(op) + ": U-centering requires n >= 4, got n = " +
                        std::to_string(n));
}

CenteredMatrix centered_exact(const Tensor& x) { return double_center(pairwise_distance(x, 0.0)); }

UCenteredMatrix ucentered_exact(const Tensor& x) { return u_center(pairwise_distance(x, 0.0)); }

double v2(const CenteredMatrix& a, const CenteredMatrix& b) {
  const double n = static_cast<double>(a.n());
  return kernels::omp::full_dot(a.values(), b.values(), a.n()) / (n * n);
}

}  // namespace

DistMatrix pairwise_distance(const Tensor& x, double eps) {
  if (!(eps >= 0.0)) throw ContractError("pairwise_distance: eps must be >= 0");
  const auto samples = as_samples(x);
  const auto n = samples.dim(0);
  if (n < 2) throw ContractError("pairwise_distance: need at least 2 samples, got 1");
  std::vector<double> out(n * n);
  kernels::omp::pairwise_distance(samples.data(), n, samples.dim(1), eps, out);
  return DistMatrix(n, std::move(out));
}

CenteredMatrix double_center(const DistMatrix& d) {
  std::vector<double> out(d.n() * d.n());
  kernels::omp::double_center(d.values(), d.n(), out);
  return CenteredMatrix(d.n(), std::move(out));
}

UCenteredMatrix u_center(const DistMatrix& d) {
  require_ucentered_n(d.n(), "u_center");
  std::vector<double> out(d.n() * d.n());
  kernels::omp::u_center(d.values(), d.n(), out);
  return UCenteredMatrix(d.n(), std::move(out));
}

double dcov2(const Tensor& x, const Tensor& y) {
  require_same_n(x.dim(0), y.dim(0), "dcov2");
  return v2(centered_exact(x), centered_exact(y));
}

double dvar2(const Tensor& x) {
  const auto a = centered_exact(x);
  return v2(a, a);
}

DcorValue dcor_checked(const Tensor& x, const Tensor& y) {
  require_same_n(x.dim(0), y.dim(0), "dcor");
  const auto a = centered_exact(x);
  const auto b = centered_exact(y);
  const double vxx = v2(a, a);
  const double vyy = v2(b, b);
  const double denom = vxx * vyy;
  if (!(denom > 0.0)) return {0.0, true};
  const double r2 = v2(a, b) / std::sqrt(denom);
  return {std::clamp(r2, 0.0, 1.0), false};
}

double dcor(const Tensor& x, const Tensor& y) { return dcor_checked(x, y).value; }

double hilbert_inner(const UCenteredMatrix& p, const UCenteredMatrix& q) {
  require_same_n(p.n(), q.n(), "hilbert_inner");
  require_ucentered_n(p.n(), "hilbert_inner");
  const double n = static_cast<double>(p.n());
  return kernels::omp::offdiag_dot(p.values(), q.values(), p.n()) / (n * (n - 3.0));
}

double projection_coefficient(const UCenteredMatrix& p, const UCenteredMatrix& q) {
  const double qq = hilbert_inner(q, q);
  if (!(qq > 0.0)) return 0.0;
  return hilbert_inner(p, q) / qq;
}

UCenteredMatrix subtract_scaled(const UCenteredMatrix& p, double c, const UCenteredMatrix& q) {
  require_same_n(p.n(), q.n(), "subtract_scaled");
  std::vector<double> out(p.values().begin(), p.values().end());
  const auto qv = q.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= c * qv[i];
  return UCenteredMatrix(p.n(), std::move(out));
}

UCenteredMatrix project_out(const UCenteredMatrix& p, const UCenteredMatrix& q) {
  require_same_n(p.n(), q.n(), "project_out");
  if (!(hilbert_inner(q, q) > 0.0)) return p;
  return subtract_scaled(p, projection_coefficient(p, q), q);
}

double pdcor2(const Tensor& x, const Tensor& y, const Tensor& z) {
  require_same_n(x.dim(0), y.dim(0), "pdcor2");
  require_same_n(x.dim(0), z.dim(0), "pdcor2");
  require_ucentered_n(x.dim(0), "pdcor2");
  const auto c = ucentered_exact(z);
  const auto ux = ucentered_exact(x), uy = ucentered_exact(y);
  const auto px = project_out(ux, c);
  const auto py = project_out(uy, c);
  const double xx = hilbert_inner(px, px), yy = hilbert_inner(py, py);
  // A residual at rounding level of its unprojected matrix is zero: z
  // explains x (or y) completely and the ratio below would be noise.
  constexpr double floor2 = kResidualFloor * kResidualFloor;
  if (!(xx > floor2 * hilbert_inner(ux, ux)) || !(yy > floor2 * hilbert_inner(uy, uy))) return 0.0;
  const double norm = std::sqrt(xx) * std::sqrt(yy);
  return std::clamp(hilbert_inner(px, py) / norm, -1.0, 1.0);
}

}  // namespace unicam

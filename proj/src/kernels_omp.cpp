#include <cmath>
#include <vector>

#include "unicam/kernels.hpp"

namespace unicam::kernels::omp {
namespace {

// Row sums, each accumulated left to right by one thread.
std::vector<double> row_sums(std::span<const double> a, std::size_t n) {
  std::vector<double> r(n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a[i * n + j];
    r[i] = s;
  }
  return r;
}

// Column sums, each accumulated top to bottom. For a symmetric matrix this
// reproduces row_sums bitwise, which keeps centered outputs exactly symmetric.
std::vector<double> col_sums(std::span<const double> a, std::size_t n) {
  std::vector<double> c(n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < sn; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i * n + j];
    c[j] = s;
  }
  return c;
}

double ordered_total(const std::vector<double>& partials) {
  double t = 0.0;
  for (double v : partials) t += v;
  return t;
}

}  // namespace

void pairwise_distance(std::span<const double> x, std::size_t n, std::size_t d, double eps,
                       std::span<double> out) {
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    const double* xi = x.data() + i * d;
    out[i * n + i] = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double* xj = x.data() + j * d;
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = xi[c] - xj[c];
        s += diff * diff;
      }
      const double v = std::sqrt(s + eps);
      out[i * n + j] = v;
      out[j * n + i] = v;
    }
  }
}

void double_center(std::span<const double> a, std::size_t n, std::span<double> out) {
  const auto r = row_sums(a, n);
  const auto c = col_sums(a, n);
  const double dn = static_cast<double>(n);
  const double grand = ordered_total(r) / (dn * dn);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < sn; ++j)
    for (std::size_t k = 0; k < n; ++k)
      out[j * n + k] = (a[j * n + k] + grand) - (r[j] / dn + c[k] / dn);
}

void u_center(std::span<const double> a, std::size_t n, std::span<double> out) {
  const auto r = row_sums(a, n);
  const auto c = col_sums(a, n);
  const double dn = static_cast<double>(n);
  const double grand = ordered_total(r) / ((dn - 1.0) * (dn - 2.0));
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < sn; ++j)
    for (std::size_t k = 0; k < n; ++k)
      out[j * n + k] = static_cast<std::size_t>(j) == k
                           ? 0.0
                           : (a[j * n + k] + grand) - (r[j] / (dn - 2.0) + c[k] / (dn - 2.0));
}

double offdiag_dot(std::span<const double> p, std::span<const double> q, std::size_t n) {
  std::vector<double> partial(n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < sn; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (static_cast<std::size_t>(j) != k) s += p[j * n + k] * q[j * n + k];
    partial[j] = s;
  }
  return ordered_total(partial);
}

double full_dot(std::span<const double> p, std::span<const double> q, std::size_t n) {
  std::vector<double> partial(n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < sn; ++j) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += p[j * n + k] * q[j * n + k];
    partial[j] = s;
  }
  return ordered_total(partial);
}

void u_center_adjoint(std::span<const double> g, std::size_t n, std::span<double> out) {
  // Only the off-diagonal of g carries sensitivity.
  std::vector<double> r(n), c(n);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    double rs = 0.0, cs = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (static_cast<std::size_t>(i) == j) continue;
      rs += g[i * n + j];
      cs += g[j * n + i];
    }
    r[i] = rs;
    c[i] = cs;
  }
  const double dn = static_cast<double>(n);
  const double grand = ordered_total(r) / ((dn - 1.0) * (dn - 2.0));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < sn; ++k)
    for (std::size_t l = 0; l < n; ++l) {
      const double own = static_cast<std::size_t>(k) == l ? 0.0 : g[k * n + l];
      out[k * n + l] = (own + grand) - (r[k] / (dn - 2.0) + c[l] / (dn - 2.0));
    }
}

void distance_adjoint(std::span<const double> x, std::size_t n, std::size_t d,
                      std::span<const double> dist, std::span<const double> grad_dist,
                      std::span<double> out) {
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    double* gi = out.data() + i * d;
    const double* xi = x.data() + i * d;
    for (std::size_t c = 0; c < d; ++c) gi[c] = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
      const double dil = dist[i * n + l];
      if (static_cast<std::size_t>(i) == l || dil == 0.0) continue;
      const double w = (grad_dist[i * n + l] + grad_dist[l * n + i]) / dil;
      const double* xl = x.data() + l * d;
      for (std::size_t c = 0; c < d; ++c) gi[c] += w * (xi[c] - xl[c]);
    }
  }
}

void channel_uniqueness(std::span<const double> g, std::size_t n, std::size_t c,
                        std::size_t hw, std::span<double> out) {
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    double mx = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double* gk = g.data() + (i * c + k) * hw;
      double s = 0.0;
      for (std::size_t p = 0; p < hw; ++p) s += std::abs(gk[p]);
      out[i * c + k] = s;
      if (s > mx) mx = s;
    }
    for (std::size_t k = 0; k < c; ++k) out[i * c + k] = mx > 0.0 ? out[i * c + k] / mx : 0.0;
  }
}

void cam_assemble(std::span<const double> acts, std::span<const double> grads,
                  std::span<const double> chan, std::size_t n, std::size_t c, std::size_t hw,
                  std::span<double> out) {
  const double area = static_cast<double>(hw);
  const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    double* map = out.data() + i * hw;
    for (std::size_t p = 0; p < hw; ++p) map[p] = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double* gk = grads.data() + (i * c + k) * hw;
      double s = 0.0;
      for (std::size_t p = 0; p < hw; ++p) s += gk[p];
      double w = s / area;
      if (!chan.empty()) w *= chan[i * c + k];
      const double* ak = acts.data() + (i * c + k) * hw;
      for (std::size_t p = 0; p < hw; ++p) map[p] += w * ak[p];
    }
    for (std::size_t p = 0; p < hw; ++p) map[p] = map[p] > 0.0 ? map[p] : 0.0;
  }
}

}  // namespace unicam::kernels::omp

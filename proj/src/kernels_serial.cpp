#include <algorithm>
#include <cmath>
#include <vector>

#include "unicam/kernels.hpp"

namespace unicam::kernels::serial {

void pairwise_distance(std::span<const double> x, std::size_t n, std::size_t d, double eps,
                       std::span<double> out) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        out[i * n + j] = 0.0;
        continue;
      }
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += (x[i * d + c] - x[j * d + c]) * (x[i * d + c] - x[j * d + c]);
      out[i * n + j] = std::sqrt(s + eps);
    }
}

void double_center(std::span<const double> a, std::size_t n, std::span<double> out) {
  std::vector<double> row(n, 0.0), col(n, 0.0);
  double grand = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      row[j] += a[j * n + k];
      col[k] += a[j * n + k];
      grand += a[j * n + k];
    }
  const double dn = static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      out[j * n + k] = a[j * n + k] - row[j] / dn - col[k] / dn + grand / (dn * dn);
}

void u_center(std::span<const double> a, std::size_t n, std::span<double> out) {
  std::vector<double> row(n, 0.0), col(n, 0.0);
  double grand = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      row[j] += a[j * n + k];
      col[k] += a[j * n + k];
      grand += a[j * n + k];
    }
  const double dn = static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      out[j * n + k] = j == k ? 0.0
                              : a[j * n + k] - row[j] / (dn - 2.0) - col[k] / (dn - 2.0) +
                                    grand / ((dn - 1.0) * (dn - 2.0));
}

double offdiag_dot(std::span<const double> p, std::span<const double> q, std::size_t n) {
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < n; ++k)
      if (j != k) s += p[j * n + k] * q[j * n + k];
  return s;
}

double full_dot(std::span<const double> p, std::span<const double> q, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n * n; ++i) s += p[i] * q[i];
  return s;
}

void u_center_adjoint(std::span<const double> g, std::size_t n, std::span<double> out) {
  std::vector<double> row(n, 0.0), col(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      row[i] += g[i * n + j];
      col[j] += g[i * n + j];
      total += g[i * n + j];
    }
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      out[k * n + l] = (k == l ? 0.0 : g[k * n + l]) - row[k] / (dn - 2.0) -
                       col[l] / (dn - 2.0) + total / ((dn - 1.0) * (dn - 2.0));
}

void distance_adjoint(std::span<const double> x, std::size_t n, std::size_t d,
                      std::span<const double> dist, std::span<const double> grad_dist,
                      std::span<double> out) {
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n * d), 0.0);
  // Scatter form: each pair (k, l) pushes into both endpoints.
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) {
      if (k == l || dist[k * n + l] == 0.0) continue;
      const double w = grad_dist[k * n + l] / dist[k * n + l];
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = x[k * d + c] - x[l * d + c];
        out[k * d + c] += w * diff;
        out[l * d + c] -= w * diff;
      }
    }
}

void channel_uniqueness(std::span<const double> g, std::size_t n, std::size_t c,
                        std::size_t hw, std::span<double> out) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < c; ++k) {
      double s = 0.0;
      for (std::size_t p = 0; p < hw; ++p) s += std::abs(g[(i * c + k) * hw + p]);
      out[i * c + k] = s;
    }
    const double mx = *std::max_element(out.begin() + static_cast<std::ptrdiff_t>(i * c),
                                        out.begin() + static_cast<std::ptrdiff_t>((i + 1) * c));
    for (std::size_t k = 0; k < c; ++k) out[i * c + k] = mx > 0.0 ? out[i * c + k] / mx : 0.0;
  }
}

void cam_assemble(std::span<const double> acts, std::span<const double> grads,
                  std::span<const double> chan, std::size_t n, std::size_t c, std::size_t hw,
                  std::span<double> out) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < hw; ++p) {
      double v = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        double beta = 0.0;
        for (std::size_t q = 0; q < hw; ++q) beta += grads[(i * c + k) * hw + q];
        beta /= static_cast<double>(hw);
        const double u = chan.empty() ? 1.0 : chan[i * c + k];
        v += beta * u * acts[(i * c + k) * hw + p];
      }
      out[i * hw + p] = std::max(v, 0.0);
    }
}

}  // namespace unicam::kernels::serial

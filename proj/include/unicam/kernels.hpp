#pragma once

// Low-level kernels behind distcorr and unicam. All matrices are n x n
// row-major; `x` is an n x d sample matrix.
//
// Two implementations with identical signatures:
//   kernels::omp    - OpenMP, used by the library. Every output element and
//                     every partial sum is produced by exactly one thread in
//                     a fixed order, so results are bit-identical for any
//                     thread count.
//   kernels::serial - plain loops, kept as a reference for tests and the
//                     benchmark. Agrees with omp to rounding, not bitwise.

#include <cstddef>
#include <span>

namespace unicam::kernels {

#define UNICAM_KERNEL_DECLS                                                                  \
  /* off-diagonal sqrt(|x_i - x_j|^2 + eps); diagonal exactly 0 */                          \
  void pairwise_distance(std::span<const double> x, std::size_t n, std::size_t d,          \
                         double eps, std::span<double> out);                               \
  /* a_jk - rowmean_j - colmean_k + grandmean */                                           \
  void double_center(std::span<const double> a, std::size_t n, std::span<double> out);     \
  /* U-centering; diagonal exactly 0 */                                                    \
  void u_center(std::span<const double> a, std::size_t n, std::span<double> out);          \
  /* sum over j != k of p_jk * q_jk */                                                     \
  double offdiag_dot(std::span<const double> p, std::span<const double> q, std::size_t n); \
  /* sum over all j, k of p_jk * q_jk */                                                   \
  double full_dot(std::span<const double> p, std::span<const double> q, std::size_t n);    \
  /* adjoint of u_center: maps dE/dP (off-diagonal used) to dE/dD */                       \
  void u_center_adjoint(std::span<const double> g, std::size_t n, std::span<double> out);  \
  /* dE/dx given dE/dD for D from pairwise_distance(x, eps) */                             \
  void distance_adjoint(std::span<const double> x, std::size_t n, std::size_t d,           \
                        std::span<const double> dist, std::span<const double> grad_dist,   \
                        std::span<double> out);                                            \
  /* u[i,k] = sum_p |g[i,k,p]| divided by max_k; zero rows stay zero */                    \
  void channel_uniqueness(std::span<const double> g, std::size_t n, std::size_t c,         \
                          std::size_t hw, std::span<double> out);                          \
  /* ReLU(sum_k mean_p(grads[i,k,:]) * chan[i,k] * acts[i,k,:]); empty chan means 1 */     \
  void cam_assemble(std::span<const double> acts, std::span<const double> grads,           \
                    std::span<const double> chan, std::size_t n, std::size_t c,            \
                    std::size_t hw, std::span<double> out);

namespace omp {
UNICAM_KERNEL_DECLS
}

namespace serial {
UNICAM_KERNEL_DECLS
}

#undef UNICAM_KERNEL_DECLS

}  // namespace unicam::kernels

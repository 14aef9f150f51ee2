#include "unicam/unicam.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "unicam/errors.hpp"
#include "unicam/kernels.hpp"

namespace unicam {

Mode parse_mode(std::string_view text) {
  if (text == "distilled") return Mode::Distilled;
  if (text == "residual") return Mode::Residual;
  throw ContractError("mode must be 'distilled' or 'residual', got '" + std::string(text) + "'");
}

const char* to_string(Mode mode) { return mode == Mode::Distilled ? "distilled" : "residual"; }

std::pair<UCenteredMatrix, double> unique_matrix(const UCenteredMatrix& p_s,
                                                 const UCenteredMatrix& p_b) {
  const double c = projection_coefficient(p_s, p_b);
  return {subtract_scaled(p_s, c, p_b), c};
}

namespace {

void require_finite(std::span<const double> v, const char* stage) {
  for (double x : v)
    if (!std::isfinite(x))
      throw std::runtime_error(std::string("unique energy: non-finite value in ") + stage);
}

}  // namespace

UniqueEnergy unique_energy_with_grad(const Tensor& mapped, const Tensor& reference, double eps) {
  if (!(eps >= 0.0)) throw ContractError("unique energy: eps must be >= 0");
  if (mapped.rank() < 2 || reference.rank() < 2)
    throw ContractError("unique energy: activations need a batch axis and features");
  const auto n = mapped.dim(0);
  if (reference.dim(0) != n)
    throw ContractError("unique energy: batch sizes differ (" + std::to_string(n) + " vs " +
                        std::to_string(reference.dim(0)) + ")");
  if (n < 4) throw ContractError("unique energy: U-centering requires n >= 4");

  const auto xm = flatten_batch(mapped);
  const auto xr = flatten_batch(reference);
  const auto d = xm.dim(1);

  const auto dist_m = pairwise_distance(xm, eps);
  const auto p_m = u_center(dist_m);
  const auto p_r = u_center(pairwise_distance(xr, eps));
  auto [x_u, coef] = unique_matrix(p_m, p_r);
  require_finite(x_u.values(), "projected matrix");

  const double nn = static_cast<double>(n) * (static_cast<double>(n) - 3.0);
  const double rr = hilbert_inner(p_r, p_r);
  const double mm = hilbert_inner(p_m, p_m);
  double ortho = 0.0;
  if (rr > 0.0 && mm > 0.0)
    ortho = std::abs(hilbert_inner(x_u, p_r)) / std::sqrt(mm * rr);
  assert(ortho <= 1e-10);

  UniqueEnergy out{0.0, std::vector<double>(n), Tensor::zeros(mapped.shape()), x_u, coef, ortho};
  const auto xv = x_u.values();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += xv[i * n + j] * xv[i * n + j];
    out.per_sample[i] = s;
    out.total += s;
  }

  // dE/dX = 2X. Through X = P_m - c(P_m) P_r:
  //   dE/dP_m = G - (<G, P_r>_F / (n(n-3) <P_r,P_r>)) P_r.
  // The second term vanishes analytically because X is orthogonal to P_r.
  std::vector<double> g(n * n);
  for (std::size_t i = 0; i < n * n; ++i) g[i] = 2.0 * xv[i];
  if (rr > 0.0) {
    const double k = kernels::omp::offdiag_dot(g, p_r.values(), n) / (nn * rr);
    assert(std::abs(k) * std::sqrt(rr) <= 2e-10 * std::sqrt(mm));
    const auto rv = p_r.values();
    for (std::size_t i = 0; i < n * n; ++i) g[i] -= k * rv[i];
  }

  std::vector<double> grad_dist(n * n);
  kernels::omp::u_center_adjoint(g, n, grad_dist);

  std::vector<double> grad(n * d);
  kernels::omp::distance_adjoint(xm.data(), n, d, dist_m.values(), grad_dist, grad);
  require_finite(grad, "activation gradient");
  out.grad = Tensor(mapped.shape(), std::move(grad));
  return out;
}

Tensor channel_uniqueness(const Tensor& grad) {
  if (grad.rank() < 2) throw ContractError("channel_uniqueness: need [n, C, ...]");
  const auto n = grad.dim(0), c = grad.dim(1);
  const auto hw = grad.size() / (n * c);
  std::vector<double> out(n * c);
  kernels::omp::channel_uniqueness(grad.data(), n, c, hw, out);
  return Tensor({n, c}, std::move(out));
}

Heatmap cam_assemble(const Tensor& acts, const Tensor& grads, const std::optional<Tensor>& chan_uniq) {
  if (acts.rank() != 4)
    throw ContractError("cam_assemble: activations must be [n,C,H,W], got " +
                        shape_str(acts.shape()));
  if (grads.shape() != acts.shape())
    throw ContractError("cam_assemble: gradient shape " + shape_str(grads.shape()) +
                        " differs from activation shape " + shape_str(acts.shape()));
  const auto n = acts.dim(0), c = acts.dim(1), h = acts.dim(2), w = acts.dim(3);
  if (chan_uniq && chan_uniq->shape() != Shape{n, c})
    throw ContractError("cam_assemble: channel weights must be [" + std::to_string(n) + "," +
                        std::to_string(c) + "], got " + shape_str(chan_uniq->shape()));
  std::vector<double> out(n * h * w);
  kernels::omp::cam_assemble(acts.data(), grads.data(),
                             chan_uniq ? chan_uniq->data() : std::span<const double>{}, n, c,
                             h * w, out);
  return {Tensor({n, h, w}, std::move(out)), false};
}

Heatmap gradcam(const ActivationBundle& bundle) {
  if (!bundle.grads) throw ContractError("gradcam: layer " + bundle.layer + " has no gradients");
  return cam_assemble(bundle.acts, *bundle.grads);
}

UniCamResult unicam(const ActivationBundle& student, const ActivationBundle& base, Mode mode,
                    double eps) {
  const auto& mapped = mode == Mode::Distilled ? student : base;
  const auto& reference = mode == Mode::Distilled ? base : student;
  if (!mapped.grads)
    throw ContractError(std::string("unicam (") + to_string(mode) + "): the " +
                        (mode == Mode::Distilled ? "student" : "base") +
                        " bundle must carry gradients");
  if (student.batch() != base.batch())
    throw ContractError("unicam: student batch " + std::to_string(student.batch()) +
                        " differs from base batch " + std::to_string(base.batch()));

  auto energy = unique_energy_with_grad(mapped.acts, reference.acts, eps);
  auto u = channel_uniqueness(energy.grad);
  auto heat = cam_assemble(mapped.acts, *mapped.grads, u);
  return {std::move(heat),
          {std::move(energy.x_unique), energy.coef, energy.total, std::move(energy.per_sample),
           std::move(u), energy.orthogonality}};
}

}  // namespace unicam

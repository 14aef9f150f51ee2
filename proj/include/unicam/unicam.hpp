#pragma once

// UniCAM: saliency for knowledge that one model holds and another lacks.
//
// Pipeline for the mapped model m against reference r (same batch, any
// layer shapes):
//   1. exact-diagonal, eps-smoothed distance matrices of the flattened
//      per-sample activations, U-centered -> P_m, P_r
//   2. X = P_m - c * P_r with c = <P_m,P_r> / <P_r,P_r>
//   3. per-sample unique energy e_i = sum_j X_ij^2 and its gradient with
//      respect to m's activations (hand-derived adjoint chain)
//   4. per-channel uniqueness u[i,k] = L1 mass of that gradient, scaled so
//      the strongest channel of each sample is 1
//   5. Grad-CAM assembly ReLU(sum_k beta_k * u_k * A_k), beta_k the spatial
//      mean of the class-score gradient
// Identical models give X = 0 and therefore all-zero maps.

#include <optional>
#include <utility>
#include <vector>

#include "unicam/bundle.hpp"
#include "unicam/distcorr.hpp"
#include "unicam/heatmap.hpp"
#include "unicam/tensor.hpp"

namespace unicam {

inline constexpr double kDefaultEps = 1e-9;

enum class Mode { Distilled, Residual };

Mode parse_mode(std::string_view text);
const char* to_string(Mode mode);

/// (p_s - c * p_b, c). c is 0 when <p_b, p_b> == 0.
std::pair<UCenteredMatrix, double> unique_matrix(const UCenteredMatrix& p_s,
                                                 const UCenteredMatrix& p_b);

struct UniqueEnergy {
  double total = 0.0;               // E = sum_i e_i
  std::vector<double> per_sample;   // e_i
  Tensor grad;                      // dE / d(mapped activations)
  UCenteredMatrix x_unique;
  double coef = 0.0;
  double orthogonality = 0.0;       // |<X, P_r>| / (|P_m| |P_r|), 0 if undefined
};

/// Requires equal batch n >= 4 and eps >= 0. With eps == 0, coincident
/// samples contribute no gradient.
UniqueEnergy unique_energy_with_grad(const Tensor& mapped, const Tensor& reference,
                                     double eps = kDefaultEps);

/// [n, C, ...] -> [n, C]
Tensor channel_uniqueness(const Tensor& grad);

/// chan_uniq absent is the Grad-CAM baseline.
Heatmap cam_assemble(const Tensor& acts, const Tensor& grads,
                     const std::optional<Tensor>& chan_uniq = std::nullopt);

Heatmap gradcam(const ActivationBundle& bundle);

struct UniqueDecomposition {
  UCenteredMatrix x_unique;
  double coef = 0.0;
  double total_energy = 0.0;
  std::vector<double> energy;
  Tensor chan_uniq;
  double orthogonality = 0.0;
};

struct UniCamResult {
  Heatmap heatmap;
  UniqueDecomposition decomposition;
};

/// Distilled: maps the student against the base. Residual: maps the base
/// against the student. The mapped side must carry gradients.
UniCamResult unicam(const ActivationBundle& student, const ActivationBundle& base, Mode mode,
                    double eps = kDefaultEps);

}  // namespace unicam

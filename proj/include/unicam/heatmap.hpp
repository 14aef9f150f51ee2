#pragma once

#include <cstddef>
#include <string>

#include "unicam/tensor.hpp"

namespace unicam {

/// Per-sample nonnegative saliency maps [n, H, W].
struct Heatmap {
  Tensor maps;
  bool normalized = false;
};

/// Corner-aligned bilinear resize to (out_h, out_w), then per-sample
/// min-max normalization to [0, 1]. Constant maps become all-zero.
Heatmap postprocess(const Heatmap& h, std::size_t out_h, std::size_t out_w);

/// True when every map is within [0, 1] with max in {0, 1} and min 0.
bool looks_normalized(const Tensor& maps);

/// Share of squared map mass that falls where mask > 0.5, pooled over the
/// batch. maps and mask are both [n, H, W]. Returns 0 for all-zero maps.
double energy_fraction_in_mask(const Tensor& maps, const Tensor& mask);

/// Binary PGM (P5) of one [H, W] map with values in [0, 1];
/// pixel = round(255 * v), half away from zero.
std::string encode_pgm(std::span<const double> map, std::size_t h, std::size_t w);

}  // namespace unicam

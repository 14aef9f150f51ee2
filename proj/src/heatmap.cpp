#include "unicam/heatmap.hpp"

#include <algorithm>
#include <cmath>

#include "unicam/errors.hpp"

namespace unicam {
namespace {

// Source coordinate for output index i under corner alignment.
double source_coord(std::size_t i, std::size_t in, std::size_t out) {
  if (out == 1 || in == 1) return 0.0;
  return static_cast<double>(i * (in - 1)) / static_cast<double>(out - 1);
}

}  // namespace

Heatmap postprocess(const Heatmap& h, std::size_t out_h, std::size_t out_w) {
  if (out_h < 1 || out_w < 1) throw ContractError("postprocess: output size must be >= 1x1");
  if (h.maps.rank() != 3)
    throw ContractError("postprocess: heatmaps must be [n,H,W], got " + shape_str(h.maps.shape()));
  const auto n = h.maps.dim(0), in_h = h.maps.dim(1), in_w = h.maps.dim(2);
  const auto src = h.maps.data();
  std::vector<double> out(n * out_h * out_w);
  const auto sn = static_cast<std::ptrdiff_t>(n);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sn; ++i) {
    const double* m = src.data() + i * in_h * in_w;
    double* o = out.data() + i * out_h * out_w;
    for (std::size_t y = 0; y < out_h; ++y) {
      const double sy = source_coord(y, in_h, out_h);
      const auto y0 = static_cast<std::size_t>(sy);
      const auto y1 = std::min(y0 + 1, in_h - 1);
      const double fy = sy - static_cast<double>(y0);
      for (std::size_t x = 0; x < out_w; ++x) {
        const double sx = source_coord(x, in_w, out_w);
        const auto x0 = static_cast<std::size_t>(sx);
        const auto x1 = std::min(x0 + 1, in_w - 1);
        const double fx = sx - static_cast<double>(x0);
        const double top = m[y0 * in_w + x0] * (1.0 - fx) + m[y0 * in_w + x1] * fx;
        const double bot = m[y1 * in_w + x0] * (1.0 - fx) + m[y1 * in_w + x1] * fx;
        o[y * out_w + x] = top * (1.0 - fy) + bot * fy;
      }
    }
    const auto [lo, hi] = std::minmax_element(o, o + out_h * out_w);
    const double mn = *lo, range = *hi - *lo;
    for (std::size_t p = 0; p < out_h * out_w; ++p) o[p] = range > 0.0 ? (o[p] - mn) / range : 0.0;
  }
  return {Tensor({n, out_h, out_w}, std::move(out)), true};
}

bool looks_normalized(const Tensor& maps) {
  if (maps.rank() != 3) return false;
  const auto per = maps.dim(1) * maps.dim(2);
  for (std::size_t i = 0; i < maps.dim(0); ++i) {
    const auto m = maps.data().subspan(i * per, per);
    const auto [lo, hi] = std::minmax_element(m.begin(), m.end());
    if (*lo != 0.0 || (*hi != 0.0 && *hi != 1.0)) return false;
  }
  return true;
}

double energy_fraction_in_mask(const Tensor& maps, const Tensor& mask) {
  if (maps.shape() != mask.shape())
    throw ContractError("energy_fraction_in_mask: map shape " + shape_str(maps.shape()) +
                        " differs from mask shape " + shape_str(mask.shape()));
  double inside = 0.0, total = 0.0;
  for (std::size_t p = 0; p < maps.size(); ++p) {
    const double e = maps[p] * maps[p];
    total += e;
    if (mask[p] > 0.5) inside += e;
  }
  return total > 0.0 ? inside / total : 0.0;
}

std::string encode_pgm(std::span<const double> map, std::size_t h, std::size_t w) {
  if (map.size() != h * w) throw ContractError("encode_pgm: map size does not match h*w");
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.reserve(out.size() + map.size());
  for (double v : map) {
    if (!(v >= 0.0 && v <= 1.0))
      throw ContractError("encode_pgm: value " + std::to_string(v) + " outside [0, 1]");
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::round(v * 255.0))));
  }
  return out;
}

}  // namespace unicam

#pragma once

#include <cstdint>
#include <vector>

#include "unicam/kd_metrics.hpp"
#include "unicam/tensor.hpp"

namespace unicam::testkit {

struct ToyNetDims {
  std::size_t in = 1, c1 = 4, c2 = 8, classes = 2;
};

/// conv3x3(in -> c1) -> ReLU -> conv3x3(c1 -> c2) -> ReLU -> global average
/// pool -> linear(c2 -> classes). Zero padding keeps the spatial size.
/// All parameters live in one flat vector so finite differences can poke
/// any of them.
class ToyNet : public FeatureExtractor {
 public:
  using Dims = ToyNetDims;

  enum class FeatureLayer { Conv1, Conv2, Pooled };

  ToyNet(Dims dims, std::vector<double> params);

  /// Uniform(-0.5, 0.5) weights, zero biases.
  static ToyNet random(std::uint64_t seed, Dims dims = ToyNetDims{});

  const Dims& dims() const noexcept { return dims_; }
  const std::vector<double>& params() const noexcept { return params_; }
  std::size_t param_count() const noexcept { return params_.size(); }

  // Parameter blocks, in storage order.
  std::size_t w1_offset() const noexcept { return 0; }
  std::size_t b1_offset() const noexcept { return dims_.c1 * dims_.in * 9; }
  std::size_t w2_offset() const noexcept { return b1_offset() + dims_.c1; }
  std::size_t b2_offset() const noexcept { return w2_offset() + dims_.c2 * dims_.c1 * 9; }
  std::size_t head_w_offset() const noexcept { return b2_offset() + dims_.c2; }
  std::size_t head_b_offset() const noexcept { return head_w_offset() + dims_.classes * dims_.c2; }
  static std::size_t param_count(const Dims& d);

  struct Activations {
    std::vector<double> pre1, conv1;  // [c1, h, w]
    std::vector<double> pre2, conv2;  // [c2, h, w]
    std::vector<double> pooled;       // [c2]
    std::vector<double> scores;       // [classes]
    std::size_t h = 0, w = 0;
  };

  /// image is [in, h, w].
  Activations forward(const Tensor& image) const;

  /// d scores[cls] / d conv2 activations, as [c2, h, w].
  std::vector<double> score_grad_conv2(const Activations& a, std::size_t cls) const;

  struct Gradients {
    std::vector<double> params;  // same layout as params()
    std::vector<double> input;   // [in, h, w]
  };
  Gradients backward(const Tensor& image, const Activations& a, std::size_t cls) const;

  void set_feature_layer(FeatureLayer layer) { feature_layer_ = layer; }

  /// Per-image features of the chosen layer, flattened: [n, d].
  Tensor features(const Tensor& images) const override;

 private:
  Dims dims_;
  std::vector<double> params_;
  FeatureLayer feature_layer_ = FeatureLayer::Conv2;
};

}  // namespace unicam::testkit

#include "unicam/testkit/toy_net.hpp"

#include <string>

#include "unicam/errors.hpp"
#include "unicam/rng.hpp"

namespace unicam::testkit {
namespace {

// out[co] = b[co] + sum_ci sum_{3x3} w[co,ci] * in[ci] with zero padding.
void conv3x3(const double* in, std::size_t ci, std::size_t h, std::size_t w, const double* weights,
             const double* bias, std::size_t co, double* out) {
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        double s = bias[o];
        for (std::size_t c = 0; c < ci; ++c)
          for (std::size_t dy = 0; dy < 3; ++dy) {
            const auto sy = static_cast<std::ptrdiff_t>(y + dy) - 1;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t dx = 0; dx < 3; ++dx) {
              const auto sx = static_cast<std::ptrdiff_t>(x + dx) - 1;
              if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
              s += weights[((o * ci + c) * 3 + dy) * 3 + dx] * in[(c * h + sy) * w + sx];
            }
          }
        out[(o * h + y) * w + x] = s;
      }
}

// Accumulates input, weight and bias gradients of conv3x3 given d_out.
void conv3x3_backward(const double* in, std::size_t ci, std::size_t h, std::size_t w,
                      const double* weights, std::size_t co, const double* d_out, double* d_in,
                      double* d_weights, double* d_bias) {
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double g = d_out[(o * h + y) * w + x];
        if (g == 0.0) continue;
        d_bias[o] += g;
        for (std::size_t c = 0; c < ci; ++c)
          for (std::size_t dy = 0; dy < 3; ++dy) {
            const auto sy = static_cast<std::ptrdiff_t>(y + dy) - 1;
            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t dx = 0; dx < 3; ++dx) {
              const auto sx = static_cast<std::ptrdiff_t>(x + dx) - 1;
              if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
              const auto wi = ((o * ci + c) * 3 + dy) * 3 + dx;
              const auto ii = (c * h + sy) * w + sx;
              d_weights[wi] += g * in[ii];
              if (d_in) d_in[ii] += g * weights[wi];
            }
          }
      }
}

}  // namespace

std::size_t ToyNet::param_count(const Dims& d) {
  return d.c1 * d.in * 9 + d.c1 + d.c2 * d.c1 * 9 + d.c2 + d.classes * d.c2 + d.classes;
}

ToyNet::ToyNet(Dims dims, std::vector<double> params) : dims_(dims), params_(std::move(params)) {
  if (params_.size() != param_count(dims_))
    throw ContractError("ToyNet: expected " + std::to_string(param_count(dims_)) +
                        " parameters, got " + std::to_string(params_.size()));
}

ToyNet ToyNet::random(std::uint64_t seed, Dims dims) {
  SplitMix64 rng(seed);
  ToyNet net(dims, std::vector<double>(param_count(dims), 0.0));
  auto fill = [&](std::size_t from, std::size_t to) {
    for (auto i = from; i < to; ++i) net.params_[i] = rng.uniform(-0.5, 0.5);
  };
  fill(net.w1_offset(), net.b1_offset());
  fill(net.w2_offset(), net.b2_offset());
  fill(net.head_w_offset(), net.head_b_offset());
  return net;
}

ToyNet::Activations ToyNet::forward(const Tensor& image) const {
  if (image.rank() != 3 || image.dim(0) != dims_.in)
    throw ContractError("ToyNet: image must be [" + std::to_string(dims_.in) + ",h,w], got " +
                        shape_str(image.shape()));
  Activations a;
  a.h = image.dim(1);
  a.w = image.dim(2);
  const auto hw = a.h * a.w;
  const double* p = params_.data();

  a.pre1.resize(dims_.c1 * hw);
  conv3x3(image.data().data(), dims_.in, a.h, a.w, p + w1_offset(), p + b1_offset(), dims_.c1,
          a.pre1.data());
  a.conv1.resize(a.pre1.size());
  for (std::size_t i = 0; i < a.pre1.size(); ++i) a.conv1[i] = a.pre1[i] > 0.0 ? a.pre1[i] : 0.0;

  a.pre2.resize(dims_.c2 * hw);
  conv3x3(a.conv1.data(), dims_.c1, a.h, a.w, p + w2_offset(), p + b2_offset(), dims_.c2,
          a.pre2.data());
  a.conv2.resize(a.pre2.size());
  for (std::size_t i = 0; i < a.pre2.size(); ++i) a.conv2[i] = a.pre2[i] > 0.0 ? a.pre2[i] : 0.0;

  a.pooled.assign(dims_.c2, 0.0);
  for (std::size_t k = 0; k < dims_.c2; ++k) {
    double s = 0.0;
    for (std::size_t q = 0; q < hw; ++q) s += a.conv2[k * hw + q];
    a.pooled[k] = s / static_cast<double>(hw);
  }
  a.scores.assign(dims_.classes, 0.0);
  for (std::size_t c = 0; c < dims_.classes; ++c) {
    double s = p[head_b_offset() + c];
    for (std::size_t k = 0; k < dims_.c2; ++k) s += p[head_w_offset() + c * dims_.c2 + k] * a.pooled[k];
    a.scores[c] = s;
  }
  return a;
}

std::vector<double> ToyNet::score_grad_conv2(const Activations& a, std::size_t cls) const {
  if (cls >= dims_.classes) throw ContractError("ToyNet: class index out of range");
  const auto hw = a.h * a.w;
  std::vector<double> g(dims_.c2 * hw);
  for (std::size_t k = 0; k < dims_.c2; ++k) {
    const double v = params_[head_w_offset() + cls * dims_.c2 + k] / static_cast<double>(hw);
    for (std::size_t q = 0; q < hw; ++q) g[k * hw + q] = v;
  }
  return g;
}

ToyNet::Gradients ToyNet::backward(const Tensor& image, const Activations& a,
                                   std::size_t cls) const {
  const auto hw = a.h * a.w;
  Gradients g{std::vector<double>(params_.size(), 0.0), std::vector<double>(image.size(), 0.0)};
  double* gp = g.params.data();

  gp[head_b_offset() + cls] = 1.0;
  for (std::size_t k = 0; k < dims_.c2; ++k) gp[head_w_offset() + cls * dims_.c2 + k] = a.pooled[k];

  auto d_pre2 = score_grad_conv2(a, cls);
  for (std::size_t i = 0; i < d_pre2.size(); ++i)
    if (!(a.pre2[i] > 0.0)) d_pre2[i] = 0.0;

  std::vector<double> d_conv1(dims_.c1 * hw, 0.0);
  conv3x3_backward(a.conv1.data(), dims_.c1, a.h, a.w, params_.data() + w2_offset(), dims_.c2,
                   d_pre2.data(), d_conv1.data(), gp + w2_offset(), gp + b2_offset());

  for (std::size_t i = 0; i < d_conv1.size(); ++i)
    if (!(a.pre1[i] > 0.0)) d_conv1[i] = 0.0;
  conv3x3_backward(image.data().data(), dims_.in, a.h, a.w, params_.data() + w1_offset(),
                   dims_.c1, d_conv1.data(), g.input.data(), gp + w1_offset(), gp + b1_offset());
  return g;
}

Tensor ToyNet::features(const Tensor& images) const {
  if (images.rank() != 4) throw ContractError("ToyNet: images must be [n,c,h,w]");
  const auto n = images.dim(0);
  const Shape one(images.shape().begin() + 1, images.shape().end());
  std::vector<double> out;
  std::size_t d = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = images.row(i);
    const auto a = forward(Tensor(one, std::vector<double>(r.begin(), r.end())));
    const auto& f = feature_layer_ == FeatureLayer::Conv1   ? a.conv1
                    : feature_layer_ == FeatureLayer::Conv2 ? a.conv2
                                                            : a.pooled;
    d = f.size();
    out.insert(out.end(), f.begin(), f.end());
  }
  return Tensor({n, d}, std::move(out));
}

}  // namespace unicam::testkit

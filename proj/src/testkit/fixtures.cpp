#include "unicam/testkit/fixtures.hpp"

#include <fstream>

#include "unicam/digest.hpp"
#include "unicam/errors.hpp"
#include "unicam/json_out.hpp"
#include "unicam/manifest.hpp"
#include "unicam/npy.hpp"
#include "unicam/rng.hpp"
#include "unicam/unicam.hpp"

namespace unicam::testkit {
namespace {

constexpr std::size_t kS = kFixtureSize;

// Shared weights. conv1 channels 0..2 are dark-region detectors (negative
// smoothing filters) that a bright line cannot excite; channel 3 is a
// thresholded vertical-edge filter. conv2 channels other than the planted
// one read only the dark-region channels.
ToyNet make_net(SplitMix64& rng, bool planted) {
  ToyNet::Dims dims;
  std::vector<double> p(ToyNet::param_count(dims), 0.0);
  ToyNet layout(dims, p);

  auto w1 = [&](std::size_t o, std::size_t t) -> double& { return p[layout.w1_offset() + o * 9 + t]; };
  const double binomial[9] = {1, 2, 1, 2, 4, 2, 1, 2, 1};
  const double sobel_x[9] = {-1, 0, 1, -2, 0, 2, -1, 0, 1};
  for (std::size_t t = 0; t < 9; ++t) {
    w1(0, t) = -1.0 / 9.0 + rng.uniform(-0.02, 0.02);
    w1(1, t) = -binomial[t] / 16.0 + rng.uniform(-0.02, 0.02);
    w1(2, t) = -0.1 + rng.uniform(-0.05, 0.05);
    w1(3, t) = sobel_x[t] / 4.0;
  }
  p[layout.b1_offset() + 3] = -0.4;

  auto w2 = [&](std::size_t o, std::size_t c, std::size_t t) -> double& {
    return p[layout.w2_offset() + (o * dims.c1 + c) * 9 + t];
  };
  for (std::size_t o = 0; o < dims.c2; ++o) {
    if (o == kPlantedChannel) continue;
    for (std::size_t t = 0; t < 9; ++t) {
      w2(o, 0, t) = rng.uniform(0.0, 0.3);
      w2(o, 1, t) = rng.uniform(0.0, 0.3);
      w2(o, 2, t) = rng.uniform(-0.1, 0.1);
    }
    p[layout.b2_offset() + o] = rng.uniform(-0.05, 0.05);
  }
  // Drawn for both nets so the streams stay aligned; only the student keeps them.
  for (std::size_t t = 0; t < 9; ++t) {
    const double v = (t == 4 ? 2.0 : 0.0) + rng.uniform(0.0, 0.2);
    w2(kPlantedChannel, 3, t) = planted ? v : 0.0;
  }

  for (std::size_t i = 0; i < dims.classes * dims.c2; ++i)
    p[layout.head_w_offset() + i] = rng.uniform(0.2, 1.0);
  return ToyNet(dims, std::move(p));
}

}  // namespace

ActivationBundle record_bundle(const ToyNet& net, const Tensor& images, const Tensor& labels) {
  const auto n = images.dim(0);
  const auto cls = label_indices(labels);
  const Shape one(images.shape().begin() + 1, images.shape().end());
  std::vector<double> acts, grads;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = images.row(i);
    const auto a = net.forward(Tensor(one, std::vector<double>(r.begin(), r.end())));
    acts.insert(acts.end(), a.conv2.begin(), a.conv2.end());
    const auto g = net.score_grad_conv2(a, cls[i]);
    grads.insert(grads.end(), g.begin(), g.end());
  }
  const Shape shape{n, net.dims().c2, images.dim(2), images.dim(3)};
  return {kFixtureLayer, Tensor(shape, std::move(acts)), Tensor(shape, std::move(grads)), labels};
}

FixtureSet gen_fixtures(std::uint64_t seed, std::size_t n, FixtureOptions options) {
  if (n < 8) throw ContractError("gen_fixtures: n must be >= 8, got " + std::to_string(n));
  SplitMix64 rng(seed);

  std::vector<double> images(n * kS * kS, 0.0), mask(n * kS * kS, 0.0), labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    double* img = images.data() + i * kS * kS;
    const double cy = 7.5 + rng.uniform(-1.0, 1.0);
    const double cx = 5.5 + rng.uniform(-1.0, 1.0);
    const double radius = 3.0 + rng.uniform(0.0, 1.0);
    const double blob_amp = 1.0 + rng.uniform(0.0, 0.5);
    const std::size_t line_col = 10 + i % 5;
    const double line_amp = 1.5 + rng.uniform(0.0, 1.0);
    labels[i] = line_col >= 12 ? 1.0 : 0.0;

    for (std::size_t y = 0; y < kS; ++y)
      for (std::size_t x = 0; x < kS; ++x) {
        const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
        const double q = (dy * dy + dx * dx) / (radius * radius);
        double v = q < 1.0 ? -blob_amp * (1.0 - q) * (1.0 - q) : 0.0;
        if (x == line_col) v += line_amp;
        img[y * kS + x] = v + rng.uniform(-0.05, 0.05);
        if (x + 1 >= line_col && x <= line_col + 1) mask[(i * kS + y) * kS + x] = 1.0;
      }
  }

  std::vector<double> emb(2 * 8);
  for (auto& v : emb) v = rng.uniform(-1.0, 1.0);

  // Both nets consume identical streams so they share every weight drawn.
  const auto net_seed = rng.next();
  SplitMix64 student_rng(net_seed), base_rng(net_seed);
  auto student_net = make_net(student_rng, options.plant_edge_channel);
  auto base_net = make_net(base_rng, false);

  Tensor img_t({n, 1, kS, kS}, std::move(images));
  Tensor label_t({n}, std::move(labels));
  auto student = record_bundle(student_net, img_t, label_t);
  auto base = record_bundle(base_net, img_t, label_t);
  return FixtureSet{seed,
                    std::move(img_t),
                    label_t,
                    Tensor({2, 8}, std::move(emb)),
                    Tensor({n, kS, kS}, std::move(mask)),
                    std::move(student_net),
                    std::move(base_net),
                    std::move(student),
                    std::move(base)};
}

ScenarioMeasure measure_scenario(const FixtureSet& f, double eps) {
  const auto base_map = gradcam(f.student);
  const auto distilled = unicam(f.student, f.base, Mode::Distilled, eps);
  const auto residual = unicam(f.student, f.base, Mode::Residual, eps);
  return {energy_fraction_in_mask(base_map.maps, f.region_mask),
          energy_fraction_in_mask(distilled.heatmap.maps, f.region_mask),
          energy_fraction_in_mask(residual.heatmap.maps, f.region_mask),
          distilled.decomposition.total_energy, residual.decomposition.total_energy};
}

void write_fixtures(const FixtureSet& f, const std::filesystem::path& dir, double eps) {
  std::filesystem::create_directories(dir);
  auto put = [&](const Tensor& t, const char* name) { write_tensor(t, dir / name); };
  put(f.images, "images.npy");
  put(f.labels, "labels.npy");
  put(f.embeddings, "embeddings.npy");
  put(f.region_mask, "region_mask.npy");
  put(f.student.acts, "student_acts.npy");
  put(*f.student.grads, "student_grads.npy");
  put(f.base.acts, "base_acts.npy");
  put(*f.base.grads, "base_grads.npy");
  write_manifest(kFixtureLayer, {{"student_acts.npy", "student_grads.npy", "labels.npy"}},
                 dir / "student.json");
  write_manifest(kFixtureLayer, {{"base_acts.npy", "base_grads.npy", "labels.npy"}},
                 dir / "base.json");

  // Features of the images masked by the normalized distilled map.
  const auto distilled = unicam(f.student, f.base, Mode::Distilled, eps);
  const auto heat = postprocess(distilled.heatmap, f.images.dim(2), f.images.dim(3));
  put(heat.maps, "distilled_maps.npy");
  put(extract_features(&f.student_net, f.images, heat), "student_perturbed.npy");
  put(extract_features(&f.base_net, f.images, heat), "base_perturbed.npy");
  write_manifest(kFixtureLayer, {{"student_perturbed.npy", std::nullopt, "labels.npy"}},
                 dir / "student_feats.json");
  write_manifest(kFixtureLayer, {{"base_perturbed.npy", std::nullopt, "labels.npy"}},
                 dir / "base_feats.json");

  const auto m = measure_scenario(f, eps);
  nlohmann::json doc;
  doc["seed"] = f.seed;
  doc["n"] = f.images.dim(0);
  doc["eps"] = eps;
  doc["gradcam_fraction"] = m.gradcam_fraction;
  doc["distilled_fraction"] = m.distilled_fraction;
  doc["residual_fraction"] = m.residual_fraction;
  doc["distilled_energy"] = m.distilled_energy;
  doc["residual_energy"] = m.residual_energy;
  doc["distilled_margin_over_gradcam"] = m.distilled_fraction - m.gradcam_fraction;
  doc["distilled_margin_over_residual"] = m.distilled_fraction - m.residual_fraction;
  doc["images_digest"] = sha256_file(dir / "images.npy");
  std::ofstream(dir / "scenario.json") << dump_json(doc);
}

}  // namespace unicam::testkit

#pragma once

#include <cstdint>
#include <filesystem>

#include "unicam/bundle.hpp"
#include "unicam/testkit/toy_net.hpp"

namespace unicam::testkit {

inline constexpr std::size_t kFixtureSize = 16;
inline constexpr std::size_t kPlantedChannel = 7;
inline constexpr const char* kFixtureLayer = "conv2";

/// Synthetic student/base pair. Images hold a dark blob left of center
/// plus a thin bright vertical line in the right half. Both nets share every weight except
/// conv2 channel kPlantedChannel, which the student wires to the
/// vertical-edge filter of conv1 and the base leaves at zero.
struct FixtureSet {
  std::uint64_t seed = 0;
  Tensor images;       // [n, 1, 16, 16]
  Tensor labels;       // [n], 1 when the line sits at column >= 12
  Tensor embeddings;   // [2, 8]
  Tensor region_mask;  // [n, 16, 16], 1 on the three columns around the line
  ToyNet student_net;
  ToyNet base_net;
  ActivationBundle student;  // conv2 activations + ground-truth score gradients
  ActivationBundle base;
};

struct FixtureOptions {
  // false: the student's planted channel is zeroed, making it the base.
  bool plant_edge_channel = true;
};

/// Bit-reproducible from the seed: only +, -, *, / and sqrt are involved.
FixtureSet gen_fixtures(std::uint64_t seed, std::size_t n = 8, FixtureOptions options = {});

/// Runs `net` on every image and records activations of conv2 plus the
/// gradient of the labelled class score with respect to them.
ActivationBundle record_bundle(const ToyNet& net, const Tensor& images, const Tensor& labels);

/// In-mask energy fractions behind the directional scenario.
struct ScenarioMeasure {
  double gradcam_fraction = 0.0;
  double distilled_fraction = 0.0;
  double residual_fraction = 0.0;
  double distilled_energy = 0.0;
  double residual_energy = 0.0;
};

ScenarioMeasure measure_scenario(const FixtureSet& f, double eps);

/// Writes tensors, the two layer manifests (student.json, base.json),
/// perturbed-feature manifests (student_feats.json, base_feats.json) and
/// scenario.json into `dir`.
void write_fixtures(const FixtureSet& f, const std::filesystem::path& dir, double eps);

}  // namespace unicam::testkit

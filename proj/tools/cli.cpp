#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "unicam/bundle.hpp"
#include "unicam/digest.hpp"
#include "unicam/distcorr.hpp"
#include "unicam/errors.hpp"
#include "unicam/heatmap.hpp"
#include "unicam/json_out.hpp"
#include "unicam/kd_metrics.hpp"
#include "unicam/manifest.hpp"
#include "unicam/npy.hpp"
#include "unicam/parallel.hpp"
#include "unicam/testkit/fixtures.hpp"
#include "unicam/unicam.hpp"

namespace unicam::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunConfig {
  int threads = 1;
  bool timestamp = false;
};

void emit_json(json doc, const std::string& out, const RunConfig& cfg) {
  if (cfg.timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    doc["timestamp"] = buf;
  }
  const auto text = dump_json(doc);
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::trunc);
  if (!f) throw std::runtime_error(out + ": cannot open for writing");
  f << text;
}

void warn_all(const std::vector<std::string>& warnings, const fs::path& origin) {
  for (const auto& w : warnings) std::cerr << "warning: " << origin.string() << ": " << w << '\n';
}

bool is_manifest(const std::string& path) { return fs::path(path).extension() == ".json"; }

std::vector<std::string> manifest_digests(const BatchManifest& m) {
  std::vector<std::string> out;
  for (const auto& e : m.entries) {
    out.push_back(sha256_file(e.acts));
    if (e.grads) out.push_back(sha256_file(*e.grads));
    if (e.labels) out.push_back(sha256_file(*e.labels));
  }
  return out;
}

BatchManifest checked_manifest(const std::string& path) {
  auto m = load_manifest(path);
  warn_all(m.warnings, path);
  return m;
}

std::vector<Tensor> manifest_acts(const BatchManifest& m) {
  std::vector<Tensor> out;
  for (const auto& e : m.entries) out.push_back(load_tensor(e.acts));
  return out;
}

void render_maps(const Heatmap& h, const fs::path& dir, std::size_t out_h, std::size_t out_w) {
  fs::create_directories(dir);
  const auto norm = postprocess(h, out_h, out_w);
  const auto per = out_h * out_w;
  for (std::size_t i = 0; i < norm.maps.dim(0); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "map_%04zu.pgm", i);
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error((dir / name).string() + ": cannot open for writing");
    f << encode_pgm(norm.maps.data().subspan(i * per, per), out_h, out_w);
  }
}

// ---- dcor / pdcor ---------------------------------------------------------

struct StatOptions {
  std::string x, y, z, out;
  bool sqrt = false;
};

int cmd_dcor(const StatOptions& o, const RunConfig& cfg) {
  json doc;
  if (is_manifest(o.x) != is_manifest(o.y))
    throw ContractError("dcor: --x and --y must both be tensors or both be manifests");
  if (!is_manifest(o.x)) {
    const auto v = dcor_checked(load_tensor(o.x), load_tensor(o.y));
    doc["dcor2"] = v.value;
    if (o.sqrt) doc["dcor"] = std::sqrt(v.value);
    doc["degenerate"] = v.degenerate;
    doc["input_digests"] = {sha256_file(o.x), sha256_file(o.y)};
    emit_json(doc, o.out, cfg);
    return 0;
  }
  const auto mx = checked_manifest(o.x), my = checked_manifest(o.y);
  if (mx.entries.size() != my.entries.size())
    throw ContractError("dcor: " + o.x + " and " + o.y + " have different batch counts");
  MetricReport r;
  r.metric = MetricKind::DCOR;
  r.layer = mx.layer;
  const auto xs = manifest_acts(mx), ys = manifest_acts(my);
  double total = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const auto v = dcor_checked(xs[j], ys[j]);
    r.per_batch.push_back(o.sqrt ? std::sqrt(v.value) : v.value);
    if (v.degenerate) r.degenerate_batches.push_back(j);
    total += r.per_batch.back();
  }
  r.mean = total / static_cast<double>(xs.size());
  r.manifest_digests = manifest_digests(mx);
  const auto dy = manifest_digests(my);
  r.manifest_digests.insert(r.manifest_digests.end(), dy.begin(), dy.end());
  doc = r.to_json();
  doc["statistic"] = o.sqrt ? "dcor" : "dcor2";
  emit_json(doc, o.out, cfg);
  return 0;
}

int cmd_pdcor(const StatOptions& o, const RunConfig& cfg) {
  json doc;
  doc["pdcor2"] = pdcor2(load_tensor(o.x), load_tensor(o.y), load_tensor(o.z));
  doc["input_digests"] = {sha256_file(o.x), sha256_file(o.y), sha256_file(o.z)};
  emit_json(doc, o.out, cfg);
  return 0;
}

// ---- unicam / gradcam -----------------------------------------------------

struct MapOptions {
  std::string student, base, manifest, mode = "distilled", out, render, report;
  double eps = kDefaultEps;
  std::vector<std::size_t> size;
};

std::pair<std::size_t, std::size_t> render_size(const MapOptions& o, const Tensor& maps) {
  if (o.size.empty()) return {maps.dim(1), maps.dim(2)};
  if (o.size.size() != 2 || o.size[0] < 1 || o.size[1] < 1)
    throw ContractError("--size expects two positive integers H W");
  return {o.size[0], o.size[1]};
}

void finish_maps(const MapOptions& o, const std::vector<Tensor>& parts) {
  const Heatmap all{concat_batches(parts), false};
  write_tensor(all.maps, o.out);
  if (!o.render.empty()) {
    const auto [h, w] = render_size(o, all.maps);
    render_maps(all, o.render, h, w);
  }
}

int cmd_unicam(const MapOptions& o, const RunConfig& cfg) {
  const auto mode = parse_mode(o.mode);
  const auto ms = checked_manifest(o.student), mb = checked_manifest(o.base);
  if (ms.entries.size() != mb.entries.size())
    throw ContractError("unicam: " + o.student + " has " + std::to_string(ms.entries.size()) +
                        " batches but " + o.base + " has " + std::to_string(mb.entries.size()));
  std::vector<Tensor> parts;
  json batches = json::array();
  for (std::size_t j = 0; j < ms.entries.size(); ++j) {
    const auto s = load_bundle(ms, j);
    const auto b = load_bundle(mb, j);
    auto r = unicam::unicam(s, b, mode, o.eps);
    batches.push_back({{"energy", r.decomposition.total_energy},
                       {"coef", r.decomposition.coef},
                       {"orthogonality", r.decomposition.orthogonality}});
    parts.push_back(std::move(r.heatmap.maps));
  }
  finish_maps(o, parts);

  json doc;
  doc["command"] = "unicam";
  doc["mode"] = to_string(mode);
  doc["layer"] = ms.layer;
  doc["eps"] = o.eps;
  doc["per_batch"] = batches;
  doc["maps_digest"] = sha256_file(o.out);
  auto digests = manifest_digests(ms);
  const auto db = manifest_digests(mb);
  digests.insert(digests.end(), db.begin(), db.end());
  doc["manifest_digests"] = digests;
  emit_json(doc, o.report, cfg);
  return 0;
}

int cmd_gradcam(const MapOptions& o, const RunConfig& cfg) {
  const auto m = checked_manifest(o.manifest);
  std::vector<Tensor> parts;
  for (std::size_t j = 0; j < m.entries.size(); ++j)
    parts.push_back(gradcam(load_bundle(m, j)).maps);
  finish_maps(o, parts);
  json doc;
  doc["command"] = "gradcam";
  doc["layer"] = m.layer;
  doc["maps_digest"] = sha256_file(o.out);
  doc["manifest_digests"] = manifest_digests(m);
  emit_json(doc, o.report, cfg);
  return 0;
}

// ---- fss / rs -------------------------------------------------------------

struct MetricOptions {
  std::string student, base, feats, table, out, source = "manifest";
};

int cmd_fss(const MetricOptions& o, const RunConfig& cfg) {
  const auto ms = checked_manifest(o.student), mb = checked_manifest(o.base);
  auto r = fss(manifest_acts(ms), manifest_acts(mb));
  r.layer = ms.layer;
  r.manifest_digests = manifest_digests(ms);
  const auto db = manifest_digests(mb);
  r.manifest_digests.insert(r.manifest_digests.end(), db.begin(), db.end());
  auto doc = r.to_json();
  doc["feature_source"] = o.source;
  emit_json(doc, o.out, cfg);
  return 0;
}

int cmd_rs(const MetricOptions& o, const RunConfig& cfg) {
  const auto m = checked_manifest(o.feats);
  std::vector<Tensor> labels;
  for (std::size_t j = 0; j < m.entries.size(); ++j) {
    if (!m.entries[j].labels)
      throw ContractError(o.feats + ": entry " + std::to_string(j) + " has no labels");
    labels.push_back(load_tensor(*m.entries[j].labels));
  }
  const EmbeddingTable table(load_tensor(o.table));
  warn_all(table.warnings(), o.table);
  auto r = rs(manifest_acts(m), labels, table);
  r.layer = m.layer;
  r.manifest_digests = manifest_digests(m);
  r.manifest_digests.push_back(sha256_file(o.table));
  auto doc = r.to_json();
  doc["feature_source"] = o.source;
  emit_json(doc, o.out, cfg);
  return 0;
}

// ---- perturb --------------------------------------------------------------

struct PerturbOptions {
  std::string images, heatmaps, out, features_out, net, layer = "conv2";
  std::uint64_t fixture_seed = 0;
  std::size_t fixture_n = 8;
  bool normalize = false;
};

int cmd_perturb(const PerturbOptions& o, const RunConfig&) {
  const auto images = load_tensor(o.images);
  if (images.rank() != 4) throw ContractError(o.images + ": images must be [n,c,h,w]");
  Heatmap heat{load_tensor(o.heatmaps), false};
  if (o.normalize) {
    heat = postprocess(heat, images.dim(2), images.dim(3));
  } else if (!looks_normalized(heat.maps)) {
    throw ContractError(o.heatmaps +
                        ": heatmaps are not normalized to [0,1]; pass --normalize or run render");
  } else {
    heat.normalized = true;
  }
  write_tensor(perturb_batch(images, heat), o.out);

  if (!o.features_out.empty()) {
    std::optional<testkit::ToyNet> net;
    if (o.net == "student" || o.net == "base") {
      auto f = testkit::gen_fixtures(o.fixture_seed, o.fixture_n);
      net = o.net == "student" ? f.student_net : f.base_net;
      net->set_feature_layer(o.layer == "conv1"    ? testkit::ToyNet::FeatureLayer::Conv1
                             : o.layer == "pooled" ? testkit::ToyNet::FeatureLayer::Pooled
                                                   : testkit::ToyNet::FeatureLayer::Conv2);
    }
    write_tensor(extract_features(net ? &*net : nullptr, images, heat), o.features_out);
  }
  return 0;
}

// ---- fixtures / render ----------------------------------------------------

struct FixtureOptionsCli {
  std::uint64_t seed = 0;
  std::size_t n = 8;
  std::string out;
  double eps = kDefaultEps;
};

int cmd_fixtures(const FixtureOptionsCli& o, const RunConfig&) {
  testkit::write_fixtures(testkit::gen_fixtures(o.seed, o.n), o.out, o.eps);
  return 0;
}

struct RenderOptions {
  std::string maps, out, normalized_out;
  std::vector<std::size_t> size;
};

int cmd_render(const RenderOptions& o, const RunConfig&) {
  const Heatmap h{load_tensor(o.maps), false};
  if (h.maps.rank() != 3) throw ContractError(o.maps + ": heatmaps must be [n,H,W]");
  if (std::ranges::any_of(h.maps.data(), [](double v) { return v < 0.0; }))
    throw ContractError(o.maps + ": heatmaps must be nonnegative");
  std::size_t out_h = h.maps.dim(1), out_w = h.maps.dim(2);
  if (!o.size.empty()) {
    if (o.size.size() != 2 || o.size[0] < 1 || o.size[1] < 1)
      throw ContractError("--size expects two positive integers H W");
    out_h = o.size[0];
    out_w = o.size[1];
  }
  render_maps(h, o.out, out_h, out_w);
  if (!o.normalized_out.empty()) write_tensor(postprocess(h, out_h, out_w).maps, o.normalized_out);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Unique-feature saliency maps and distance-correlation metrics for comparing a "
               "distilled student model with its base model."};
  app.require_subcommand(1);
  RunConfig cfg;
  app.add_option("--threads", cfg.threads, "OpenMP threads; results do not depend on it")
      ->check(CLI::PositiveNumber);
  app.add_flag("--timestamp", cfg.timestamp, "Embed a UTC timestamp in JSON reports");

  std::function<int()> action;

  StatOptions dc;
  auto* dcor_cmd = app.add_subcommand(
      "dcor", "Squared distance correlation R^2 = V^2(x,y) / sqrt(V^2(x,x) V^2(y,y)) from "
              "double-centered exact distances; 0 when either variance vanishes. Tensors give "
              "one value, manifests give a per-batch report.");
  dcor_cmd->add_option("--x", dc.x, "First sample tensor (.npy) or manifest (.json)")->required()->check(CLI::ExistingFile);
  dcor_cmd->add_option("--y", dc.y, "Second sample tensor (.npy) or manifest (.json)")->required()->check(CLI::ExistingFile);
  dcor_cmd->add_flag("--sqrt", dc.sqrt, "Also report the unsquared statistic");
  dcor_cmd->add_option("--out", dc.out, "Write JSON here instead of stdout");
  dcor_cmd->callback([&] { action = [&] { return cmd_dcor(dc, cfg); }; });

  StatOptions pd;
  auto* pdcor_cmd = app.add_subcommand(
      "pdcor", "Partial distance correlation of x and y given z: inner product of the "
               "U-centered distance matrices of x and y after projecting out z's, divided by "
               "their norms.");
  pdcor_cmd->add_option("--x", pd.x)->required()->check(CLI::ExistingFile);
  pdcor_cmd->add_option("--y", pd.y)->required()->check(CLI::ExistingFile);
  pdcor_cmd->add_option("--z", pd.z)->required()->check(CLI::ExistingFile);
  pdcor_cmd->add_option("--out", pd.out, "Write JSON here instead of stdout");
  pdcor_cmd->callback([&] { action = [&] { return cmd_pdcor(pd, cfg); }; });

  MapOptions uc;
  auto* unicam_cmd = app.add_subcommand(
      "unicam", "UniCAM maps. Projects the base's U-centered distance matrix out of the "
                "student's (distilled) or vice versa (residual), weights channels by the L1 "
                "mass of the unique-energy gradient, and assembles ReLU(sum_k beta_k u_k A_k) "
                "with beta_k the spatial mean of the class-score gradient.");
  unicam_cmd->add_option("--student", uc.student, "Student layer manifest")->required()->check(CLI::ExistingFile);
  unicam_cmd->add_option("--base", uc.base, "Base layer manifest")->required()->check(CLI::ExistingFile);
  unicam_cmd->add_option("--mode", uc.mode, "distilled | residual")->check(CLI::IsMember({"distilled", "residual"}));
  unicam_cmd->add_option("--eps", uc.eps, "Distance smoothing inside the square root")->check(CLI::NonNegativeNumber);
  unicam_cmd->add_option("--out", uc.out, "Raw maps [N,H,W] (.npy)")->required();
  unicam_cmd->add_option("--render", uc.render, "Directory for normalized PGM renders");
  unicam_cmd->add_option("--size", uc.size, "Render size H W (default: map size)")->expected(2);
  unicam_cmd->add_option("--report", uc.report, "Write the JSON report here instead of stdout");
  unicam_cmd->callback([&] { action = [&] { return cmd_unicam(uc, cfg); }; });

  MapOptions gc;
  auto* gradcam_cmd = app.add_subcommand(
      "gradcam", "Grad-CAM baseline: ReLU(sum_k beta_k A_k), beta_k the spatial mean of the "
                 "class-score gradient.");
  gradcam_cmd->add_option("--manifest", gc.manifest, "Layer manifest with gradients")->required()->check(CLI::ExistingFile);
  gradcam_cmd->add_option("--out", gc.out, "Raw maps [N,H,W] (.npy)")->required();
  gradcam_cmd->add_option("--render", gc.render, "Directory for normalized PGM renders");
  gradcam_cmd->add_option("--size", gc.size, "Render size H W (default: map size)")->expected(2);
  gradcam_cmd->add_option("--report", gc.report, "Write the JSON report here instead of stdout");
  gradcam_cmd->callback([&] { action = [&] { return cmd_gradcam(gc, cfg); }; });

  MetricOptions fs_opt;
  auto* fss_cmd = app.add_subcommand(
      "fss", "Feature Similarity Score: mean over batches of the squared distance correlation "
             "between student and base features.");
  fss_cmd->add_option("--student", fs_opt.student, "Student feature manifest")->required()->check(CLI::ExistingFile);
  fss_cmd->add_option("--base", fs_opt.base, "Base feature manifest")->required()->check(CLI::ExistingFile);
  fss_cmd->add_option("--source", fs_opt.source, "Label recorded for where the features came from");
  fss_cmd->add_option("--out", fs_opt.out, "Write JSON here instead of stdout");
  fss_cmd->callback([&] { action = [&] { return cmd_fss(fs_opt, cfg); }; });

  MetricOptions rs_opt;
  auto* rs_cmd = app.add_subcommand(
      "rs", "Relevance Score: mean over batches of the squared distance correlation between "
            "features and the label-embedding rows of each sample.");
  rs_cmd->add_option("--feats", rs_opt.feats, "Feature manifest whose entries carry labels")->required()->check(CLI::ExistingFile);
  rs_cmd->add_option("--table", rs_opt.table, "Embedding table [classes, dim] (.npy)")->required()->check(CLI::ExistingFile);
  rs_cmd->add_option("--source", rs_opt.source, "Label recorded for where the features came from");
  rs_cmd->add_option("--out", rs_opt.out, "Write JSON here instead of stdout");
  rs_cmd->callback([&] { action = [&] { return cmd_rs(rs_opt, cfg); }; });

  PerturbOptions pt;
  auto* perturb_cmd = app.add_subcommand(
      "perturb", "Masks images with normalized heatmaps (image * heat, broadcast over "
                 "channels) and optionally extracts features with a built-in fixture network.");
  perturb_cmd->add_option("--images", pt.images, "Images [n,c,h,w]")->required()->check(CLI::ExistingFile);
  perturb_cmd->add_option("--heatmaps", pt.heatmaps, "Heatmaps [n,h,w]")->required()->check(CLI::ExistingFile);
  perturb_cmd->add_option("--out", pt.out, "Perturbed images (.npy)")->required();
  perturb_cmd->add_flag("--normalize", pt.normalize, "Resize and min-max normalize raw maps first");
  perturb_cmd->add_option("--features-out", pt.features_out, "Also write extracted features [n,d]");
  perturb_cmd->add_option("--net", pt.net, "Fixture network: student | base")->check(CLI::IsMember({"student", "base"}));
  perturb_cmd->add_option("--fixture-seed", pt.fixture_seed, "Seed of the fixture networks");
  perturb_cmd->add_option("--fixture-n", pt.fixture_n, "Batch size the fixtures were generated with");
  perturb_cmd->add_option("--layer", pt.layer, "conv1 | conv2 | pooled")->check(CLI::IsMember({"conv1", "conv2", "pooled"}));
  perturb_cmd->callback([&] { action = [&] { return cmd_perturb(pt, cfg); }; });

  FixtureOptionsCli fx;
  auto* fixtures_cmd = app.add_subcommand("fixtures", "Synthetic test fixtures");
  fixtures_cmd->require_subcommand(1);
  auto* generate_cmd = fixtures_cmd->add_subcommand(
      "generate", "Write images, student/base bundles, manifests, perturbed features and "
                  "measured scenario values to a directory");
  generate_cmd->add_option("--seed", fx.seed, "PRNG seed")->required();
  generate_cmd->add_option("--n", fx.n, "Batch size (>= 8)");
  generate_cmd->add_option("--out", fx.out, "Output directory")->required();
  generate_cmd->add_option("--eps", fx.eps, "Distance smoothing for the recorded maps")->check(CLI::NonNegativeNumber);
  generate_cmd->callback([&] { action = [&] { return cmd_fixtures(fx, cfg); }; });

  RenderOptions rd;
  auto* render_cmd = app.add_subcommand(
      "render", "Bilinear resize, per-map min-max normalization and 8-bit PGM output "
                "(pixel = round(255 v)).");
  render_cmd->add_option("--maps", rd.maps, "Heatmaps [n,H,W] (.npy)")->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--out", rd.out, "Output directory")->required();
  render_cmd->add_option("--size", rd.size, "Output size H W")->expected(2);
  render_cmd->add_option("--normalized-out", rd.normalized_out, "Also write normalized maps (.npy)");
  render_cmd->callback([&] { action = [&] { return cmd_render(rd, cfg); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    set_num_threads(cfg.threads);
    return action ? action() : 2;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace unicam::cli

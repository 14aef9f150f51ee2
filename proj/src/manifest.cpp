#include "unicam/manifest.hpp"

#include <fstream>
#include <json.hpp>

#include "unicam/errors.hpp"
#include "unicam/npy.hpp"

namespace unicam {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

[[noreturn]] void fail(const fs::path& manifest, const std::string& what) {
  throw ContractError(manifest.string() + ": " + what);
}

std::optional<fs::path> optional_path(const json& entry, const char* key, const fs::path& base,
                                      const fs::path& manifest) {
  if (!entry.contains(key) || entry[key].is_null()) return std::nullopt;
  if (!entry[key].is_string()) fail(manifest, std::string("'") + key + "' must be a string or null");
  return base / entry[key].get<std::string>();
}

fs::path require_file(const fs::path& p, const fs::path& manifest) {
  if (!fs::is_regular_file(p)) fail(manifest, "referenced file does not exist: " + p.string());
  return p;
}

}  // namespace

BatchManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError(path.string() + ": cannot open manifest");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(path, "manifest must be a JSON object");
  if (!doc.contains("layer") || !doc["layer"].is_string()) fail(path, "missing string 'layer'");
  if (!doc.contains("entries") || !doc["entries"].is_array() || doc["entries"].empty())
    fail(path, "'entries' must be a non-empty array");

  BatchManifest m;
  m.layer = doc["layer"].get<std::string>();
  m.source = path;
  const auto base = path.parent_path();

  for (std::size_t i = 0; i < doc["entries"].size(); ++i) {
    const auto& e = doc["entries"][i];
    const auto where = "entry " + std::to_string(i);
    if (!e.is_object() || !e.contains("acts") || !e["acts"].is_string())
      fail(path, where + ": 'acts' must be a string path");

    ManifestEntry entry;
    entry.acts = require_file(base / e["acts"].get<std::string>(), path);
    entry.grads = optional_path(e, "grads", base, path);
    entry.labels = optional_path(e, "labels", base, path);

    const auto acts = read_npy_header(entry.acts);
    const std::size_t n = acts.shape[0];
    const Shape sample(acts.shape.begin() + 1, acts.shape.end());
    if (i == 0) {
      m.sample_shape = sample;
    } else if (sample != m.sample_shape) {
      fail(path, where + ": per-sample shape " + shape_str(sample) + " differs from entry 0's " +
                     shape_str(m.sample_shape));
    }
    if (entry.grads) {
      require_file(*entry.grads, path);
      if (read_npy_header(*entry.grads).shape != acts.shape)
        fail(path, where + ": grads shape differs from acts shape " + shape_str(acts.shape));
    }
    if (entry.labels) {
      require_file(*entry.labels, path);
      if (read_npy_header(*entry.labels).shape != Shape{n})
        fail(path, where + ": labels must have shape [" + std::to_string(n) + "]");
    }
    if (n < kMinUCenteredBatch)
      m.warnings.push_back(where + ": batch size " + std::to_string(n) +
                           " < 4; U-centered operations will reject it");
    m.batch_sizes.push_back(n);
    m.entries.push_back(std::move(entry));
  }
  return m;
}

void write_manifest(const std::string& layer, const std::vector<ManifestEntry>& entries,
                    const fs::path& path) {
  json doc;
  doc["layer"] = layer;
  doc["entries"] = json::array();
  for (const auto& e : entries) {
    json j;
    j["acts"] = e.acts.generic_string();
    j["grads"] = e.grads ? json(e.grads->generic_string()) : json(nullptr);
    j["labels"] = e.labels ? json(e.labels->generic_string()) : json(nullptr);
    doc["entries"].push_back(std::move(j));
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << doc.dump(2) << '\n';
}

}  // namespace unicam

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "unicam/tensor.hpp"

namespace unicam {

struct ManifestEntry {
  std::filesystem::path acts;
  std::optional<std::filesystem::path> grads;
  std::optional<std::filesystem::path> labels;
};

/// One layer's batches, in file order. Paths are resolved against the
/// manifest's directory at load time.
struct BatchManifest {
  std::string layer;
  std::vector<ManifestEntry> entries;
  Shape sample_shape;                   // per-sample shape after the batch axis
  std::vector<std::size_t> batch_sizes;  // leading axis of each entry's acts
  std::vector<std::string> warnings;    // e.g. batches too small for U-centering
  std::filesystem::path source;
};

// U-centering and the Hilbert inner product are undefined below this.
inline constexpr std::size_t kMinUCenteredBatch = 4;

BatchManifest load_manifest(const std::filesystem::path& path);

/// Writes entries as given (callers pass paths relative to the manifest).
void write_manifest(const std::string& layer, const std::vector<ManifestEntry>& entries,
                    const std::filesystem::path& path);

}  // namespace unicam

#pragma once

// Knowledge-transfer metrics on per-batch feature matrices.
//   FSS: mean over batches of dcor(student features, base features)
//   RS:  mean over batches of dcor(features, label embeddings)
// dcor here is the squared statistic R^2 (see distcorr.hpp).

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "unicam/heatmap.hpp"
#include "unicam/tensor.hpp"

namespace unicam {

/// One embedding row per class. Duplicate rows are allowed but reported.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(Tensor rows);

  std::size_t num_classes() const noexcept { return rows_.dim(0); }
  std::size_t dim() const noexcept { return rows_.dim(1); }
  const Tensor& rows() const noexcept { return rows_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  /// [n, dim] matrix of the rows selected by `labels`.
  Tensor gather(const std::vector<std::size_t>& labels) const;

 private:
  Tensor rows_;
  std::vector<std::string> warnings_;
};

enum class MetricKind { FSS, RS, DCOR, PDCOR };
const char* to_string(MetricKind kind);

struct MetricReport {
  MetricKind metric = MetricKind::FSS;
  std::string layer;
  std::vector<double> per_batch;
  double mean = 0.0;
  std::vector<std::size_t> degenerate_batches;  // zero-variance branch taken
  std::vector<std::string> manifest_digests;

  nlohmann::json to_json() const;
};

/// out[c,p,q] = image[c,p,q] * heat[p,q]. `heats` must be normalized;
/// `index` selects the map.
Tensor perturb(const Tensor& image, const Heatmap& heats, std::size_t index);

/// Applies perturb to every sample of images [n,c,h,w].
Tensor perturb_batch(const Tensor& images, const Heatmap& heats);

/// Anything that maps an image batch [n,c,h,w] to features [n,d].
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual Tensor features(const Tensor& images) const = 0;
};

/// Row i = f(perturb(images[i], heats[i])). Throws ContractError when no
/// extractor is available.
Tensor extract_features(const FeatureExtractor* model, const Tensor& images, const Heatmap& heats);

MetricReport fss(const std::vector<Tensor>& student_feats, const std::vector<Tensor>& base_feats);

MetricReport rs(const std::vector<Tensor>& feats, const std::vector<Tensor>& labels,
                const EmbeddingTable& table);

}  // namespace unicam

#include "unicam/kd_metrics.hpp"

#include <algorithm>

#include "unicam/bundle.hpp"
#include "unicam/distcorr.hpp"
#include "unicam/errors.hpp"

namespace unicam {

EmbeddingTable::EmbeddingTable(Tensor rows) : rows_(std::move(rows)) {
  if (rows_.rank() != 2)
    throw ContractError("embedding table must be 2-D [num_classes, dim], got " +
                        shape_str(rows_.shape()));
  if (rows_.dim(0) < 2) throw ContractError("embedding table needs at least 2 classes");
  if (!rows_.all_finite()) throw ContractError("embedding table has non-finite values");
  for (std::size_t a = 0; a < num_classes(); ++a)
    for (std::size_t b = a + 1; b < num_classes(); ++b)
      if (std::ranges::equal(rows_.row(a), rows_.row(b)))
        warnings_.push_back("classes " + std::to_string(a) + " and " + std::to_string(b) +
                            " have identical embeddings");
}

Tensor EmbeddingTable::gather(const std::vector<std::size_t>& labels) const {
  std::vector<double> out;
  out.reserve(labels.size() * dim());
  for (auto c : labels) {
    if (c >= num_classes())
      throw ContractError("label " + std::to_string(c) + " out of range for " +
                          std::to_string(num_classes()) + "-class embedding table");
    const auto r = rows_.row(c);
    out.insert(out.end(), r.begin(), r.end());
  }
  return Tensor({labels.size(), dim()}, std::move(out));
}

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::FSS: return "FSS";
    case MetricKind::RS: return "RS";
    case MetricKind::DCOR: return "DCOR";
    case MetricKind::PDCOR: return "PDCOR";
  }
  return "?";
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["metric"] = to_string(metric);
  j["layer"] = layer;
  j["per_batch"] = per_batch;
  j["mean"] = mean;
  j["degenerate_batches"] = degenerate_batches;
  j["manifest_digests"] = manifest_digests;
  return j;
}

Tensor perturb(const Tensor& image, const Heatmap& heats, std::size_t index) {
  if (!heats.normalized)
    throw ContractError("perturb: heatmaps must be normalized (run postprocess first)");
  if (image.rank() != 3) throw ContractError("perturb: image must be [c,h,w]");
  if (heats.maps.rank() != 3 || index >= heats.maps.dim(0))
    throw ContractError("perturb: heatmap index out of range");
  const auto c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (heats.maps.dim(1) != h || heats.maps.dim(2) != w)
    throw ContractError("perturb: heatmap is " + std::to_string(heats.maps.dim(1)) + "x" +
                        std::to_string(heats.maps.dim(2)) + " but image is " +
                        std::to_string(h) + "x" + std::to_string(w));
  const auto heat = heats.maps.data().subspan(index * h * w, h * w);
  if (std::ranges::any_of(heat, [](double v) { return !(v >= 0.0 && v <= 1.0); }))
    throw ContractError("perturb: heatmap values must lie in [0, 1]");
  std::vector<double> out(image.size());
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t p = 0; p < h * w; ++p) out[ch * h * w + p] = image[ch * h * w + p] * heat[p];
  return Tensor(image.shape(), std::move(out));
}

Tensor perturb_batch(const Tensor& images, const Heatmap& heats) {
  if (images.rank() != 4) throw ContractError("perturb: images must be [n,c,h,w]");
  if (heats.maps.rank() != 3 || heats.maps.dim(0) != images.dim(0))
    throw ContractError("perturb: need one heatmap per image");
  const Shape one(images.shape().begin() + 1, images.shape().end());
  std::vector<Tensor> parts;
  parts.reserve(images.dim(0));
  for (std::size_t i = 0; i < images.dim(0); ++i) {
    const auto r = images.row(i);
    Tensor img(one, std::vector<double>(r.begin(), r.end()));
    parts.push_back(perturb(img, heats, i).reshape([&] {
      Shape s{1};
      s.insert(s.end(), one.begin(), one.end());
      return s;
    }()));
  }
  return concat_batches(parts);
}

Tensor extract_features(const FeatureExtractor* model, const Tensor& images, const Heatmap& heats) {
  if (!model)
    throw ContractError("extract_features: no feature extractor and no precomputed features");
  auto feats = model->features(perturb_batch(images, heats));
  if (feats.dim(0) != images.dim(0))
    throw std::runtime_error("extract_features: extractor changed the batch size");
  return as_samples(feats);
}

namespace {

MetricReport finish(MetricReport r) {
  if (r.per_batch.empty()) throw ContractError("metrics need at least one batch");
  double s = 0.0;
  for (double v : r.per_batch) s += v;
  r.mean = s / static_cast<double>(r.per_batch.size());
  return r;
}

}  // namespace

MetricReport fss(const std::vector<Tensor>& student_feats, const std::vector<Tensor>& base_feats) {
  if (student_feats.size() != base_feats.size())
    throw ContractError("fss: student has " + std::to_string(student_feats.size()) +
                        " batches, base has " + std::to_string(base_feats.size()));
  MetricReport r;
  r.metric = MetricKind::FSS;
  for (std::size_t j = 0; j < student_feats.size(); ++j) {
    const auto& s = student_feats[j];
    const auto& b = base_feats[j];
    if (s.dim(0) != b.dim(0))
      throw ContractError("fss: batch " + std::to_string(j) + " sizes differ (" +
                          std::to_string(s.dim(0)) + " vs " + std::to_string(b.dim(0)) + ")");
    if (s.dim(0) < 2) throw ContractError("fss: batch " + std::to_string(j) + " has < 2 samples");
    const auto v = dcor_checked(s, b);
    r.per_batch.push_back(v.value);
    if (v.degenerate) r.degenerate_batches.push_back(j);
  }
  return finish(std::move(r));
}

MetricReport rs(const std::vector<Tensor>& feats, const std::vector<Tensor>& labels,
                const EmbeddingTable& table) {
  if (feats.size() != labels.size())
    throw ContractError("rs: " + std::to_string(feats.size()) + " feature batches but " +
                        std::to_string(labels.size()) + " label batches");
  MetricReport r;
  r.metric = MetricKind::RS;
  for (std::size_t j = 0; j < feats.size(); ++j) {
    const auto idx = label_indices(labels[j]);
    if (idx.size() != feats[j].dim(0))
      throw ContractError("rs: batch " + std::to_string(j) + " has " +
                          std::to_string(feats[j].dim(0)) + " samples but " +
                          std::to_string(idx.size()) + " labels");
    if (idx.size() < 2) throw ContractError("rs: batch " + std::to_string(j) + " has < 2 samples");
    const auto v = dcor_checked(feats[j], table.gather(idx));
    r.per_batch.push_back(v.value);
    if (v.degenerate) r.degenerate_batches.push_back(j);
  }
  return finish(std::move(r));
}

}  // namespace unicam

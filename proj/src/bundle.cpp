#include "unicam/bundle.hpp"

#include <cmath>

#include "unicam/errors.hpp"
#include "unicam/npy.hpp"

namespace unicam {

std::vector<std::size_t> label_indices(const Tensor& labels) {
  if (labels.rank() != 1) throw ContractError("labels must be a 1-D tensor");
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (double v : labels.data()) {
    if (v < 0.0 || std::floor(v) != v)
      throw ContractError("labels must hold nonnegative integral values, got " +
                          std::to_string(v));
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void ActivationBundle::validate() const {
  if (acts.rank() != 4)
    throw ContractError("layer " + layer + ": activations must be [n,C,H,W], got " +
                        shape_str(acts.shape()));
  if (grads && grads->shape() != acts.shape())
    throw ContractError("layer " + layer + ": gradient shape " + shape_str(grads->shape()) +
                        " differs from activation shape " + shape_str(acts.shape()));
  if (labels) {
    if (labels->shape() != Shape{acts.dim(0)})
      throw ContractError("layer " + layer + ": labels must have shape [" +
                          std::to_string(acts.dim(0)) + "]");
    label_indices(*labels);
  }
}

ActivationBundle load_bundle(const BatchManifest& manifest, std::size_t entry) {
  if (entry >= manifest.entries.size())
    throw ContractError(manifest.source.string() + ": no entry " + std::to_string(entry));
  const auto& e = manifest.entries[entry];
  ActivationBundle b{manifest.layer, load_tensor(e.acts), std::nullopt, std::nullopt};
  if (e.grads) b.grads = load_tensor(*e.grads);
  if (e.labels) b.labels = load_tensor(*e.labels);
  try {
    b.validate();
  } catch (const ContractError& err) {
    throw ContractError(manifest.source.string() + " entry " + std::to_string(entry) + ": " +
                        err.what());
  }
  return b;
}

}  // namespace unicam

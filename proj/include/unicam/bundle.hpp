#pragma once

#include <optional>
#include <string>

#include "unicam/manifest.hpp"
#include "unicam/tensor.hpp"

namespace unicam {

/// One batch of one layer of one model: activations [n,C,H,W], class-score
/// gradients of the same shape (optional) and integral labels [n] (optional).
struct ActivationBundle {
  std::string layer;
  Tensor acts;
  std::optional<Tensor> grads;
  std::optional<Tensor> labels;

  std::size_t batch() const { return acts.dim(0); }

  // Throws ContractError when the shape or label invariants are broken.
  void validate() const;
};

ActivationBundle load_bundle(const BatchManifest& manifest, std::size_t entry);

/// Labels as class indices; throws unless every value is a nonnegative integer.
std::vector<std::size_t> label_indices(const Tensor& labels);

}  // namespace unicam

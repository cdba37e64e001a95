#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cmgn/numerics.hpp"

namespace cmgn {

enum class Activation : std::uint8_t { Identity = 0, ReLU = 1 };

struct DenseLayer {
  Matrix weights;               // out x in
  std::vector<double> biases;   // out
  Activation activation = Activation::Identity;

  std::size_t in_dim() const noexcept { return weights.cols(); }
  std::size_t out_dim() const noexcept { return weights.rows(); }
  bool operator==(const DenseLayer&) const = default;
};

// Embedding MLP followed by the unit-column classifier head.
struct ModelParams {
  std::vector<DenseLayer> layers;
  ClassifierMatrix classifier;

  std::size_t input_dim() const;
  std::size_t embedding_dim() const;
  std::size_t num_classes() const noexcept { return classifier.num_classes(); }
  // Throws ShapeError when consecutive layers or the classifier disagree.
  void validate() const;
  bool operator==(const ModelParams&) const = default;
};

// Same shapes as ModelParams with an unconstrained classifier; holds
// gradients and optimizer velocity.
struct ModelTensors {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  Matrix classifier;

  static ModelTensors zeros_like(const ModelParams& params);
  bool all_finite() const;
  bool operator==(const ModelTensors&) const = default;
};

struct ModelShape {
  std::vector<std::size_t> hidden_dims;  // ReLU layers
  std::size_t embedding_dim = 16;        // final identity layer
};

// He-normal weights, zero biases, Gaussian classifier columns normalized.
ModelParams init_model(const ModelShape& shape, std::size_t input_dim, std::size_t num_classes,
                       std::uint64_t seed);

// Intermediate values needed for backpropagation.
struct EmbedCache {
  std::vector<Matrix> layer_inputs;  // input to each layer
  std::vector<Matrix> pre_activations;
  Matrix raw;                         // last layer output before normalization
  std::vector<double> raw_norms;
  Matrix embeddings;                  // row-normalized raw
};

// MLP forward then row-wise l2 normalization. Throws DegenerateInputError
// naming the sample if an embedding has zero norm.
Matrix forward_embed(const ModelParams& params, const Matrix& inputs);
EmbedCache forward_embed_cached(const ModelParams& params, const Matrix& inputs);

// Backpropagates dL/d(embeddings) through the normalization and the MLP.
// The classifier slot of the result is left zero.
ModelTensors backprop_embed(const ModelParams& params, const EmbedCache& cache,
                            const Matrix& grad_embeddings);

// Argmax over raw cosines (no margin) for each input row.
std::vector<std::size_t> predict(const ModelParams& params, const Matrix& inputs);

}  // namespace cmgn

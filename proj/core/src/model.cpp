#include "cmgn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "cmgn/error.hpp"

namespace cmgn {

std::size_t ModelParams::input_dim() const {
  return layers.empty() ? classifier.dim() : layers.front().in_dim();
}

std::size_t ModelParams::embedding_dim() const {
  return layers.empty() ? classifier.dim() : layers.back().out_dim();
}

void ModelParams::validate() const {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].biases.size() != layers[l].out_dim()) {
      throw ShapeError("layer " + std::to_string(l) + ": bias length mismatch");
    }
    if (l > 0 && layers[l].in_dim() != layers[l - 1].out_dim()) {
      throw ShapeError("layer " + std::to_string(l) + ": input dim does not match previous layer");
    }
  }
  if (embedding_dim() != classifier.dim()) {
    throw ShapeError("embedding dim " + std::to_string(embedding_dim()) + " vs classifier dim " +
                     std::to_string(classifier.dim()));
  }
}

ModelTensors ModelTensors::zeros_like(const ModelParams& params) {
  ModelTensors t;
  for (const auto& layer : params.layers) {
    t.weights.emplace_back(layer.weights.rows(), layer.weights.cols());
    t.biases.emplace_back(layer.biases.size(), 0.0);
  }
  t.classifier = Matrix(params.classifier.dim(), params.classifier.num_classes());
  return t;
}

bool ModelTensors::all_finite() const {
  for (const auto& w : weights) {
    if (!cmgn::all_finite(w.data())) return false;
  }
  for (const auto& b : biases) {
    if (!cmgn::all_finite(b)) return false;
  }
  return cmgn::all_finite(classifier.data());
}

ModelParams init_model(const ModelShape& shape, std::size_t input_dim, std::size_t num_classes,
                       std::uint64_t seed) {
  if (input_dim == 0 || shape.embedding_dim == 0 || num_classes < 2) {
    throw ValidationError("init_model: dimensions must be positive and num_classes >= 2");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  ModelParams params;
  std::vector<std::size_t> dims = shape.hidden_dims;
  dims.push_back(shape.embedding_dim);
  std::size_t fan_in = input_dim;
  for (std::size_t l = 0; l < dims.size(); ++l) {
    if (dims[l] == 0) throw ValidationError("init_model: zero-width layer");
    DenseLayer layer;
    layer.weights = Matrix(dims[l], fan_in);
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& w : layer.weights.data()) w = stddev * gauss(rng);
    layer.biases.assign(dims[l], 0.0);
    layer.activation = (l + 1 < dims.size()) ? Activation::ReLU : Activation::Identity;
    params.layers.push_back(std::move(layer));
    fan_in = dims[l];
  }
  Matrix w(shape.embedding_dim, num_classes);
  for (double& x : w.data()) x = gauss(rng);
  params.classifier = ClassifierMatrix(std::move(w));
  return params;
}

EmbedCache forward_embed_cached(const ModelParams& params, const Matrix& inputs) {
  if (inputs.cols() != params.input_dim()) {
    throw ShapeError("forward_embed: input dim " + std::to_string(inputs.cols()) + " vs model " +
                     std::to_string(params.input_dim()));
  }
  if (!all_finite(inputs.data())) throw ValidationError("forward_embed: non-finite input");
  EmbedCache cache;
  Matrix current = inputs;
  for (const auto& layer : params.layers) {
    cache.layer_inputs.push_back(current);
    Matrix pre(current.rows(), layer.out_dim());
    for (std::size_t i = 0; i < current.rows(); ++i) {
      const auto x = current.row(i);
      auto z = pre.row(i);
      for (std::size_t o = 0; o < layer.out_dim(); ++o) z[o] = dot(layer.weights.row(o), x) + layer.biases[o];
    }
    Matrix post = pre;
    if (layer.activation == Activation::ReLU) {
      for (double& v : post.data()) v = std::max(v, 0.0);
    }
    cache.pre_activations.push_back(std::move(pre));
    current = std::move(post);
  }
  cache.raw = current;
  cache.raw_norms.resize(current.rows());
  for (std::size_t i = 0; i < current.rows(); ++i) {
    const double n = norm2(current.row(i));
    if (!std::isfinite(n)) throw NumericalError("forward_embed: non-finite embedding for sample " + std::to_string(i));
    if (!(n > 0.0)) throw DegenerateInputError("forward_embed: zero-norm embedding for sample " + std::to_string(i));
    cache.raw_norms[i] = n;
    for (double& v : current.row(i)) v /= n;
  }
  cache.embeddings = std::move(current);
  return cache;
}

Matrix forward_embed(const ModelParams& params, const Matrix& inputs) {
  return forward_embed_cached(params, inputs).embeddings;
}

ModelTensors backprop_embed(const ModelParams& params, const EmbedCache& cache,
                            const Matrix& grad_embeddings) {
  const std::size_t b = cache.embeddings.rows();
  if (grad_embeddings.rows() != b || grad_embeddings.cols() != cache.embeddings.cols()) {
    throw ShapeError("backprop_embed: gradient shape mismatch");
  }
  ModelTensors grads = ModelTensors::zeros_like(params);

  // Through x = z / ||z||: dL/dz = (g - x <x, g>) / ||z||.
  Matrix delta(b, grad_embeddings.cols());
  for (std::size_t i = 0; i < b; ++i) {
    const auto x = cache.embeddings.row(i);
    const auto g = grad_embeddings.row(i);
    const double proj = dot(x, g);
    auto d = delta.row(i);
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = (g[k] - x[k] * proj) / cache.raw_norms[i];
  }

  for (std::size_t l = params.layers.size(); l-- > 0;) {
    const auto& layer = params.layers[l];
    if (layer.activation == Activation::ReLU) {
      const Matrix& pre = cache.pre_activations[l];
      for (std::size_t idx = 0; idx < delta.size(); ++idx) {
        if (!(pre.data()[idx] > 0.0)) delta.data()[idx] = 0.0;
      }
    }
    const Matrix& input = cache.layer_inputs[l];
    Matrix& gw = grads.weights[l];
    auto& gb = grads.biases[l];
    for (std::size_t i = 0; i < b; ++i) {
      const auto di = delta.row(i);
      const auto xi = input.row(i);
      for (std::size_t o = 0; o < di.size(); ++o) {
        if (di[o] == 0.0) continue;
        gb[o] += di[o];
        auto gwo = gw.row(o);
        for (std::size_t k = 0; k < xi.size(); ++k) gwo[k] += di[o] * xi[k];
      }
    }
    if (l == 0) break;
    Matrix next(b, layer.in_dim());
    for (std::size_t i = 0; i < b; ++i) {
      const auto di = delta.row(i);
      auto ni = next.row(i);
      for (std::size_t o = 0; o < di.size(); ++o) {
        if (di[o] == 0.0) continue;
        const auto wo = layer.weights.row(o);
        for (std::size_t k = 0; k < ni.size(); ++k) ni[k] += di[o] * wo[k];
      }
    }
    delta = std::move(next);
  }
  return grads;
}

std::vector<std::size_t> predict(const ModelParams& params, const Matrix& inputs) {
  const Matrix cos = cosine_batch(forward_embed(params, inputs), params.classifier);
  std::vector<std::size_t> out(cos.rows());
  for (std::size_t i = 0; i < cos.rows(); ++i) {
    const auto row = cos.row(i);
    out[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace cmgn

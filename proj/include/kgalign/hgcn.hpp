#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/graph_prep.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/random.hpp"
#include "kgalign/tape.hpp"

namespace kgalign {

enum class WeightInit { GlorotUniform };

struct HgcnConfig {
  std::size_t num_layers = 2;
  /// Feature sizes d^(0..L); d^(0) must match the feature table.
  std::vector<std::size_t> dims{300, 300, 300};
  /// m, the relation vector size.
  std::size_t relation_dim = 300;
  double gate_bias_init = -1.0;
  WeightInit weight_init = WeightInit::GlorotUniform;
  /// Layer-wise highway gates; off reproduces the plain GCN variants.
  bool highway = true;
  /// ReLU on the last layer's propagation output.
  bool relu_last_layer = true;
  std::uint64_t rng_seed = 0;

  std::size_t input_dim() const { return dims.front(); }
  std::size_t output_dim() const { return dims.back(); }

  void validate() const {
    if (num_layers < 1) throw ConfigError("num_layers must be at least 1");
    if (dims.size() != num_layers + 1)
      throw ConfigError("dims must list num_layers + 1 sizes, got " + std::to_string(dims.size()));
    for (auto d : dims)
      if (d == 0) throw ConfigError("layer dimensions must be positive");
    if (relation_dim == 0) throw ConfigError("relation_dim must be positive");
    if (highway) {
      for (std::size_t l = 0; l < num_layers; ++l)
        if (dims[l] != dims[l + 1])
          throw ConfigError("highway gates need equal layer dims, layer " + std::to_string(l) + " maps " +
                            std::to_string(dims[l]) + " -> " + std::to_string(dims[l + 1]));
    }
  }

  friend bool operator==(const HgcnConfig&, const HgcnConfig&) = default;
};

template <typename T>
struct LayerParams {
  DenseMatrix<T> weight;       // d^(l) × d^(l+1)
  DenseMatrix<T> gate_weight;  // d^(l) × d^(l); empty without highway
  DenseMatrix<T> gate_bias;    // 1 × d^(l); empty without highway

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

template <typename T>
struct ModelParams {
  std::vector<LayerParams<T>> layers;
  /// W_R (2d̃ × m); created when the joint stage starts.
  std::optional<DenseMatrix<T>> relation_transform;

  /// Every trainable tensor with a stable name, in a fixed order.
  std::vector<std::pair<std::string, DenseMatrix<T>*>> tensors() {
    std::vector<std::pair<std::string, DenseMatrix<T>*>> out;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      out.emplace_back("W" + std::to_string(l), &layers[l].weight);
      if (!layers[l].gate_weight.empty()) {
        out.emplace_back("WT" + std::to_string(l), &layers[l].gate_weight);
        out.emplace_back("bT" + std::to_string(l), &layers[l].gate_bias);
      }
    }
    if (relation_transform) out.emplace_back("WR", &*relation_transform);
    return out;
  }

  template <typename U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    for (const auto& l : layers)
      out.layers.push_back({l.weight.template cast<U>(), l.gate_weight.template cast<U>(),
                            l.gate_bias.template cast<U>()});
    if (relation_transform) out.relation_transform = relation_transform->template cast<U>();
    return out;
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

namespace detail {
template <typename T>
DenseMatrix<T> glorot_uniform(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  DenseMatrix<T> m(fan_in, fan_out);
  for (auto& v : m.data()) v = static_cast<T>((2.0 * Gaussian::uniform01(rng) - 1.0) * bound);
  return m;
}
}  // namespace detail

/// Glorot-uniform weights and constant gate biases, seeded from config.rng_seed.
template <typename T>
ModelParams<T> init_params(const HgcnConfig& config) {
  config.validate();
  Rng rng(derive_seed(config.rng_seed, "hgcn_init"));
  ModelParams<T> params;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    LayerParams<T> layer;
    layer.weight = detail::glorot_uniform<T>(config.dims[l], config.dims[l + 1], rng);
    if (config.highway) {
      layer.gate_weight = detail::glorot_uniform<T>(config.dims[l], config.dims[l], rng);
      layer.gate_bias = DenseMatrix<T>(1, config.dims[l], static_cast<T>(config.gate_bias_init));
    }
    params.layers.push_back(std::move(layer));
  }
  return params;
}

/// W_R ∈ R^{2d̃ × m}, from its own seed stream.
template <typename T>
DenseMatrix<T> init_relation_transform(const HgcnConfig& config) {
  Rng rng(derive_seed(config.rng_seed, "relation_transform"));
  return detail::glorot_uniform<T>(2 * config.output_dim(), config.relation_dim, rng);
}

/// ReLU(Â · x · w), or without the ReLU when apply_relu is false.
template <typename T>
Var gcn_layer(Tape<T>& tape, Var x, const NormalizedAdjacency<T>& adj, Var w, bool apply_relu = true) {
  if (tape.value(x).rows() != adj.matrix.rows())
    throw ShapeError("gcn_layer: feature rows " + std::to_string(tape.value(x).rows()) +
                     " do not match adjacency size " + std::to_string(adj.matrix.rows()));
  // (Â x) w and Â (x w) are equal; propagate first when it is the narrower side.
  const Var propagated = tape.value(w).rows() <= tape.value(w).cols()
                             ? tape.matmul(tape.spmm(adj.matrix, x), w)
                             : tape.spmm(adj.matrix, tape.matmul(x, w));
  return apply_relu ? tape.relu(propagated) : propagated;
}

/// T = σ(x_in·w_t + b_t);  out = T ⊙ x_new + (1 − T) ⊙ x_in.
template <typename T>
Var highway_combine(Tape<T>& tape, Var x_in, Var x_new, Var w_t, Var b_t) {
  const auto& in = tape.value(x_in);
  const auto& nw = tape.value(x_new);
  if (in.rows() != nw.rows() || in.cols() != nw.cols())
    throw ConfigError("highway gate needs equal input/output shapes, got " + shape_string(in) + " and " +
                      shape_string(nw));
  const Var gate = tape.sigmoid(tape.add_row(tape.matmul(x_in, w_t), b_t));
  const Var carry = tape.affine(gate, T{-1}, T{1});
  return tape.add(tape.mul(gate, x_new), tape.mul(carry, x_in));
}

/// Model parameters registered on a tape.
struct BoundParams {
  std::vector<Var> weights;
  std::vector<Var> gate_weights;
  std::vector<Var> gate_biases;
  std::optional<Var> relation_transform;

  /// Same order as ModelParams::tensors().
  std::vector<Var> all() const {
    std::vector<Var> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      out.push_back(weights[l]);
      if (l < gate_weights.size()) {
        out.push_back(gate_weights[l]);
        out.push_back(gate_biases[l]);
      }
    }
    if (relation_transform) out.push_back(*relation_transform);
    return out;
  }
};

template <typename T>
BoundParams bind_params(Tape<T>& tape, const ModelParams<T>& params, bool trainable = true) {
  BoundParams b;
  auto reg = [&](const DenseMatrix<T>& m, std::string label) {
    return trainable ? tape.variable(m, std::move(label)) : tape.constant(m, std::move(label));
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    b.weights.push_back(reg(layer.weight, "W" + std::to_string(l)));
    if (!layer.gate_weight.empty()) {
      b.gate_weights.push_back(reg(layer.gate_weight, "WT" + std::to_string(l)));
      b.gate_biases.push_back(reg(layer.gate_bias, "bT" + std::to_string(l)));
    }
  }
  if (params.relation_transform) b.relation_transform = reg(*params.relation_transform, "WR");
  return b;
}

/// Stacked layers: propagation, then the highway mix with the layer input.
template <typename T>
Var hgcn_forward(Tape<T>& tape, const HgcnConfig& config, const BoundParams& params, Var features,
                 const NormalizedAdjacency<T>& adj) {
  if (tape.value(features).cols() != config.input_dim())
    throw ShapeError("feature dimension " + std::to_string(tape.value(features).cols()) +
                     " does not match d^(0) = " + std::to_string(config.input_dim()));
  if (params.weights.size() != config.num_layers) throw ShapeError("parameter layer count mismatch");
  const bool gated = config.highway && params.gate_weights.size() == config.num_layers;
  Var x = features;
  for (std::size_t l = 0; l < config.num_layers; ++l) {
    const bool relu = l + 1 < config.num_layers || config.relu_last_layer;
    const Var next = gcn_layer(tape, x, adj, params.weights[l], relu);
    x = gated ? highway_combine(tape, x, next, params.gate_weights[l], params.gate_biases[l]) : next;
  }
  return x;
}

/// X′ without gradient bookkeeping.
template <typename T>
DenseMatrix<T> hgcn_forward(const HgcnConfig& config, const ModelParams<T>& params, const DenseMatrix<T>& features,
                            const NormalizedAdjacency<T>& adj) {
  Tape<T> tape;
  const auto bound = bind_params(tape, params, false);
  const Var x = hgcn_forward(tape, config, bound, tape.constant(features, "features"), adj);
  return tape.value(x);
}

}  // namespace kgalign

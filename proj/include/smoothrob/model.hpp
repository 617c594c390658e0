#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smoothrob/error.hpp"
#include "smoothrob/rng.hpp"
#include "smoothrob/tensor.hpp"

namespace smoothrob {

enum class Activation : std::uint8_t { relu = 0, identity = 1 };

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

/// Fully connected layer `y = act(W x + b)` with W stored row-major (out x in).
struct DenseLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  std::vector<double> weight;
  std::vector<double> bias;
  Activation activation = Activation::relu;

  ConstMatrixMap w() const { return {weight.data(), Eigen::Index(out_dim), Eigen::Index(in_dim)}; }
  MatrixMap w() { return {weight.data(), Eigen::Index(out_dim), Eigen::Index(in_dim)}; }
  ConstVectorMap b() const { return {bias.data(), Eigen::Index(out_dim)}; }
  VectorMap b() { return {bias.data(), Eigen::Index(out_dim)}; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Feed-forward classifier: a chain of dense layers whose last layer emits raw logits.
class Model {
 public:
  Model() = default;

  explicit Model(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { validate(); }

  /// All-zero model with the given layer widths, e.g. {784, 128, 10}.
  static Model zeros(const std::vector<std::size_t>& widths) {
    if (widths.size() < 2) throw ShapeError("model: need at least input and output width");
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
      DenseLayer l;
      l.in_dim = widths[i];
      l.out_dim = widths[i + 1];
      l.weight.assign(l.in_dim * l.out_dim, 0.0);
      l.bias.assign(l.out_dim, 0.0);
      l.activation = (i + 2 == widths.size()) ? Activation::identity : Activation::relu;
      layers.push_back(std::move(l));
    }
    return Model(std::move(layers));
  }

  /// Uniform(-s, s) weights with s = sqrt(6 / (fan_in + fan_out)), zero biases.
  static Model glorot_uniform(const std::vector<std::size_t>& widths, std::uint64_t seed) {
    Model m = zeros(widths);
    Rng rng(seed);
    for (auto& l : m.layers_) {
      const double s = std::sqrt(6.0 / double(l.in_dim + l.out_dim));
      for (auto& w : l.weight) w = rng.uniform(-s, s);
    }
    return m;
  }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases alike.
  static Model fan_in_uniform(const std::vector<std::size_t>& widths, std::uint64_t seed) {
    Model m = zeros(widths);
    Rng rng(seed);
    for (auto& l : m.layers_) {
      const double s = 1.0 / std::sqrt(double(l.in_dim));
      for (auto& w : l.weight) w = rng.uniform(-s, s);
      for (auto& b : l.bias) b = rng.uniform(-s, s);
    }
    return m;
  }

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& mutable_layers() noexcept { return layers_; }

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim; }
  std::size_t num_classes() const { return layers_.empty() ? 0 : layers_.back().out_dim; }

  std::vector<std::size_t> widths() const {
    std::vector<std::size_t> w;
    if (layers_.empty()) return w;
    w.push_back(input_dim());
    for (const auto& l : layers_) w.push_back(l.out_dim);
    return w;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
  }

  bool is_linear() const { return layers_.size() == 1; }

  void validate() const {
    if (layers_.empty()) throw ShapeError("model: no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      if (l.in_dim == 0 || l.out_dim == 0) throw ShapeError("model: zero-width layer");
      if (l.weight.size() != l.in_dim * l.out_dim || l.bias.size() != l.out_dim) {
        throw ShapeError("model: layer " + std::to_string(i) + " buffer sizes do not match dims");
      }
      if (i > 0 && layers_[i - 1].out_dim != l.in_dim) {
        throw ShapeError("model: layer " + std::to_string(i) + " input does not chain");
      }
    }
    if (layers_.back().activation != Activation::identity) {
      throw ShapeError("model: final layer must be identity (raw logits)");
    }
  }

  friend bool operator==(const Model&, const Model&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

enum class InitScheme { glorot_uniform, fan_in_uniform };

inline const char* to_string(InitScheme s) {
  return s == InitScheme::glorot_uniform ? "glorot_uniform" : "fan_in_uniform";
}

inline InitScheme init_scheme_from_string(const std::string& s) {
  if (s == "glorot_uniform" || s == "glorot") return InitScheme::glorot_uniform;
  if (s == "fan_in_uniform" || s == "fan_in") return InitScheme::fan_in_uniform;
  throw ParameterError("unknown init scheme '" + s + "'");
}

inline Model make_model(const std::vector<std::size_t>& widths, InitScheme scheme, std::uint64_t seed) {
  return scheme == InitScheme::glorot_uniform ? Model::glorot_uniform(widths, seed)
                                              : Model::fan_in_uniform(widths, seed);
}

/// Per-parameter gradient laid out exactly like Model::layers().
struct ParamGradient {
  std::vector<std::vector<double>> weight;
  std::vector<std::vector<double>> bias;

  static ParamGradient zeros_like(const Model& m) {
    ParamGradient g;
    for (const auto& l : m.layers()) {
      g.weight.emplace_back(l.weight.size(), 0.0);
      g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
  }
};

struct Gradients {
  ParamGradient params;
  Tensor input;
};

namespace detail {

inline void check_input(const Model& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw ShapeError("forward: input has " + std::to_string(x.size()) + " entries, model expects " +
                     std::to_string(model.input_dim()));
  }
}

inline void apply(Activation a, Eigen::VectorXd& v) {
  if (a == Activation::relu) v = v.cwiseMax(0.0);
}

/// Post-activation outputs of every layer; acts[0] is the input.
inline std::vector<Eigen::VectorXd> forward_trace(const Model& model, std::span<const double> x) {
  check_input(model, x);
  std::vector<Eigen::VectorXd> acts;
  acts.reserve(model.layers().size() + 1);
  acts.emplace_back(ConstVectorMap(x.data(), Eigen::Index(x.size())));
  for (const auto& l : model.layers()) {
    Eigen::VectorXd h = l.w() * acts.back() + l.b();
    apply(l.activation, h);
    acts.push_back(std::move(h));
  }
  return acts;
}

/// Reverse pass given the trace. Parameter gradients are skipped when `params` is null.
inline Eigen::VectorXd backward_trace(const Model& model, const std::vector<Eigen::VectorXd>& acts,
                                      std::span<const double> grad_z, ParamGradient* params) {
  const auto& layers = model.layers();
  if (grad_z.size() != model.num_classes()) {
    throw ShapeError("backward: loss gradient has " + std::to_string(grad_z.size()) +
                     " entries, model has " + std::to_string(model.num_classes()) + " classes");
  }
  Eigen::VectorXd delta = ConstVectorMap(grad_z.data(), Eigen::Index(grad_z.size()));
  for (std::size_t i = layers.size(); i-- > 0;) {
    const auto& l = layers[i];
    if (l.activation == Activation::relu) {
      // acts[i + 1] is the post-ReLU output; its zero pattern is the ReLU mask.
      for (Eigen::Index j = 0; j < delta.size(); ++j) {
        if (acts[i + 1][j] <= 0.0) delta[j] = 0.0;
      }
    }
    if (params != nullptr) {
      MatrixMap gw(params->weight[i].data(), Eigen::Index(l.out_dim), Eigen::Index(l.in_dim));
      gw.noalias() += delta * acts[i].transpose();
      VectorMap(params->bias[i].data(), Eigen::Index(l.out_dim)) += delta;
    }
    delta = l.w().transpose() * delta;
  }
  return delta;
}

}  // namespace detail

/// Raw logits f(x). `x` may have any shape whose element count equals input_dim.
inline Tensor forward(const Model& model, const Tensor& x) {
  auto acts = detail::forward_trace(model, x.values());
  const auto& z = acts.back();
  return Tensor::vector(std::vector<double>(z.data(), z.data() + z.size()));
}

/// Exact gradients of a scalar loss whose logit gradient is `loss_grad_z`, with
/// respect to every weight, bias and the input.
inline Gradients backward(const Model& model, const Tensor& x, const Tensor& loss_grad_z) {
  auto acts = detail::forward_trace(model, x.values());
  Gradients g{ParamGradient::zeros_like(model), Tensor(x.shape())};
  Eigen::VectorXd gi = detail::backward_trace(model, acts, loss_grad_z.values(), &g.params);
  std::copy(gi.data(), gi.data() + gi.size(), g.input.data());
  return g;
}

/// Input gradient only; skips the parameter accumulators.
inline Tensor input_gradient(const Model& model, const Tensor& x, const Tensor& loss_grad_z) {
  auto acts = detail::forward_trace(model, x.values());
  Eigen::VectorXd gi = detail::backward_trace(model, acts, loss_grad_z.values(), nullptr);
  Tensor out(x.shape());
  std::copy(gi.data(), gi.data() + gi.size(), out.data());
  return out;
}

}  // namespace smoothrob

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "smoothrob/error.hpp"
#include "smoothrob/model.hpp"
#include "smoothrob/tensor.hpp"

namespace smoothrob {

/// Target distribution y_k = onehot_k (1 - alpha) + alpha / K.
struct LabelVector {
  std::size_t num_classes = 0;
  std::size_t true_class = 0;
  double alpha = 0.0;
  std::vector<double> values;
};

struct LossValue {
  double loss = 0.0;
  Tensor grad_z;
};

namespace detail {

inline void check_class(std::size_t t, std::size_t k) {
  if (t >= k) {
    throw IndexError("class index " + std::to_string(t) + " out of range for " + std::to_string(k) +
                     " classes");
  }
}

/// log(1 + sum_{i != t} exp(z_i - z_t)), evaluated as a shifted log-sum-exp.
inline double ce_tail(std::span<const double> z, std::size_t t) {
  double top = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i != t) top = std::max(top, z[i] - z[t]);
  }
  double s = std::exp(-top);
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i != t) s += std::exp(z[i] - z[t] - top);
  }
  return top + std::log(s);
}

}  // namespace detail

/// Numerically stable softmax (max subtraction).
inline Tensor softmax(const Tensor& z) {
  if (z.empty()) throw ShapeError("softmax: empty logits");
  const auto v = z.values();
  const double top = *std::max_element(v.begin(), v.end());
  std::vector<double> s(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) total += (s[i] = std::exp(v[i] - top));
  for (auto& e : s) e /= total;
  return Tensor::vector(std::move(s));
}

inline LabelVector smooth_labels(std::size_t t, std::size_t k, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ParameterError("smoothing factor must lie in [0, 1], got " + std::to_string(alpha));
  }
  if (k == 0) throw ParameterError("number of classes must be positive");
  detail::check_class(t, k);
  LabelVector y{k, t, alpha, std::vector<double>(k, alpha / double(k))};
  y.values[t] = 1.0 - alpha + alpha / double(k);
  return y;
}

/// Hard-label cross entropy in margin form: log(1 + sum_{i != t} e^{z_i - z_t}).
inline LossValue ce_loss_onehot(const Tensor& z, std::size_t t) {
  detail::check_class(t, z.size());
  LossValue out{detail::ce_tail(z.values(), t), softmax(z)};
  out.grad_z[t] -= 1.0;
  return out;
}

/// Smoothed-label cross entropy:
/// (alpha/K) sum_{i != t} (z_t - z_i) + log(1 + sum_{i != t} e^{z_i - z_t}).
inline LossValue ce_loss_smoothed(const Tensor& z, const LabelVector& label) {
  if (label.num_classes != z.size() || label.values.size() != z.size()) {
    throw ShapeError("ce_loss_smoothed: label has " + std::to_string(label.num_classes) +
                     " classes, logits have " + std::to_string(z.size()));
  }
  const auto v = z.values();
  const std::size_t t = label.true_class;
  double spread = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i != t) spread += v[t] - v[i];
  }
  LossValue out{label.alpha / double(v.size()) * spread + detail::ce_tail(v, t), softmax(z)};
  for (std::size_t i = 0; i < v.size(); ++i) out.grad_z[i] -= label.values[i];
  return out;
}

/// Index of the largest logit other than `t`; ties go to the lowest index.
inline std::size_t runner_up(std::span<const double> z, std::size_t t) {
  std::size_t best = (t == 0) ? 1 : 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i != t && z[i] > z[best]) best = i;
  }
  return best;
}

/// -z_t + max_{i != t} z_i. Positive exactly when some other class beats t.
inline LossValue margin_loss(const Tensor& z, std::size_t t) {
  if (z.size() < 2) throw ParameterError("margin_loss needs at least two classes");
  detail::check_class(t, z.size());
  const std::size_t j = runner_up(z.values(), t);
  LossValue out{z[j] - z[t], Tensor({z.size()})};
  out.grad_z[t] = -1.0;
  out.grad_z[j] = 1.0;
  return out;
}

/// z_target - z_t: the per-target margin used by multi-targeted restarts.
inline LossValue targeted_margin_loss(const Tensor& z, std::size_t t, std::size_t target) {
  detail::check_class(t, z.size());
  detail::check_class(target, z.size());
  if (target == t) throw ParameterError("targeted margin: target equals true class");
  LossValue out{z[target] - z[t], Tensor({z.size()})};
  out.grad_z[t] = -1.0;
  out.grad_z[target] = 1.0;
  return out;
}

/// d . z: surrogate objective for output-diversified starts.
inline LossValue logit_dot_loss(const Tensor& z, std::span<const double> direction) {
  if (direction.size() != z.size()) throw ShapeError("logit_dot: direction length mismatch");
  LossValue out{0.0, Tensor::vector(std::vector<double>(direction.begin(), direction.end()))};
  for (std::size_t i = 0; i < z.size(); ++i) out.loss += direction[i] * z[i];
  return out;
}

/// Smoothed cross entropy written over the K-1 margins M_i = z_t - z_i:
/// (alpha/K) sum M_i + log(1 + sum e^{-M_i}).
inline double smoothed_ce_from_margins(std::span<const double> margins, double alpha, std::size_t k) {
  double lin = 0.0;
  double low = 0.0;
  for (double m : margins) {
    lin += m;
    low = std::min(low, m);
  }
  double s = std::exp(low);
  for (double m : margins) s += std::exp(low - m);
  return alpha / double(k) * lin + (std::log(s) - low);
}

/// d loss / d M_u = alpha/K - e^{-M_u} / (1 + sum_i e^{-M_i}).
inline double margin_grad(std::span<const double> margins, double alpha, std::size_t k, std::size_t u) {
  if (margins.size() + 1 != k) {
    throw ShapeError("margin_grad: expected " + std::to_string(k - 1) + " margins");
  }
  detail::check_class(u, margins.size());
  double low = 0.0;
  for (double m : margins) low = std::min(low, m);
  double denom = std::exp(low);
  for (double m : margins) denom += std::exp(low - m);
  return alpha / double(k) - std::exp(low - margins[u]) / denom;
}

/// Symmetric stationary margin m* = ln((K - alpha (K - 1)) / alpha).
///
/// With hard labels (alpha == 0) the margin gradient never vanishes, so there
/// is no finite optimum and a ParameterError is raised.
inline double optimal_margin(double alpha, std::size_t k) {
  if (k < 2) throw ParameterError("optimal_margin: need K >= 2");
  if (alpha == 0.0) throw ParameterError("optimal_margin: alpha = 0 has unbounded margin");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("optimal_margin: alpha must lie in (0, 1]");
  const double kd = double(k);
  return std::log((kd - alpha * (kd - 1.0)) / alpha);
}

/// Lowest reachable smoothed cross entropy: the loss at M_i = m* for all i.
inline double smoothed_ce_floor(double alpha, std::size_t k) {
  const double m = optimal_margin(alpha, k);
  return alpha / double(k) * double(k - 1) * m + std::log1p(double(k - 1) * std::exp(-m));
}

struct MarginStats {
  std::vector<double> margins;  // z_t - z_i over i != t, in class order
  double logit_min = 0.0;
  double logit_max = 0.0;
  double mean_margin = 0.0;
  double min_margin = 0.0;
};

inline MarginStats margin_stats_from_logits(const Tensor& z, std::size_t t) {
  detail::check_class(t, z.size());
  MarginStats s;
  const auto v = z.values();
  s.logit_min = *std::min_element(v.begin(), v.end());
  s.logit_max = *std::max_element(v.begin(), v.end());
  s.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i == t) continue;
    s.margins.push_back(v[t] - v[i]);
    s.mean_margin += s.margins.back();
    s.min_margin = std::min(s.min_margin, s.margins.back());
  }
  if (!s.margins.empty()) s.mean_margin /= double(s.margins.size());
  return s;
}

inline MarginStats margin_stats(const Model& model, const Tensor& x, std::size_t t) {
  return margin_stats_from_logits(forward(model, x), t);
}

}  // namespace smoothrob

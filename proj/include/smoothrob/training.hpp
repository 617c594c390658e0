#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "smoothrob/batch.hpp"
#include "smoothrob/dataset.hpp"
#include "smoothrob/losses.hpp"
#include "smoothrob/model.hpp"
#include "smoothrob/rng.hpp"

namespace smoothrob {

enum class LabelMode { hard, smoothed, adversarial };

inline const char* to_string(LabelMode m) {
  switch (m) {
    case LabelMode::hard: return "hard";
    case LabelMode::smoothed: return "smoothed";
    case LabelMode::adversarial: return "adversarial";
  }
  return "?";
}

inline LabelMode label_mode_from_string(const std::string& s) {
  if (s == "hard") return LabelMode::hard;
  if (s == "smoothed") return LabelMode::smoothed;
  if (s == "adversarial") return LabelMode::adversarial;
  throw ParameterError("unknown label mode '" + s + "'");
}

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  double momentum = 0.9;
  LabelMode label_mode = LabelMode::hard;
  double alpha = 0.0;  // smoothing factor, used in smoothed mode
  // Madry-style inner attack, used in adversarial mode: L-inf PGD, random start.
  double adv_eps = 0.3;
  std::size_t adv_steps = 7;
  double adv_step_size = 0.075;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ParameterError("learning rate must be positive");
    if (epochs < 1) throw ParameterError("epochs must be >= 1");
    if (batch_size < 1) throw ParameterError("batch size must be >= 1");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
    if (label_mode == LabelMode::smoothed && !(alpha >= 0.0 && alpha <= 1.0)) {
      throw ParameterError("smoothing factor must lie in [0, 1]");
    }
    if (label_mode == LabelMode::adversarial && (!(adv_eps > 0.0) || adv_steps < 1 || !(adv_step_size > 0.0))) {
      throw ParameterError("adversarial training needs eps > 0, steps >= 1, step size > 0");
    }
  }

  /// Smoothing factor the loss actually uses (hard and adversarial modes use one-hot targets).
  double effective_alpha() const { return label_mode == LabelMode::smoothed ? alpha : 0.0; }
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;  // NaN when no held-out set was given
};

struct TrainResult {
  Model model;
  std::vector<EpochRecord> log;
};

/// One record per line: `epoch=3 loss=0.4123 train_acc=91.20 test_acc=90.10`.
inline std::string format_log(const std::vector<EpochRecord>& log) {
  std::ostringstream os;
  os.precision(6);
  for (const auto& r : log) {
    os << "epoch=" << r.epoch << " loss=" << r.loss << " train_acc=" << r.train_acc
       << " test_acc=" << r.test_acc << '\n';
  }
  return os.str();
}

namespace detail {

/// Target rows y^LS for a batch.
inline RowMatrix smoothed_targets(const std::vector<std::size_t>& labels, std::size_t k, double alpha) {
  RowMatrix y = RowMatrix::Constant(Eigen::Index(labels.size()), Eigen::Index(k), alpha / double(k));
  for (std::size_t r = 0; r < labels.size(); ++r) {
    y(Eigen::Index(r), Eigen::Index(labels[r])) = 1.0 - alpha + alpha / double(k);
  }
  return y;
}

/// Batched L-inf PGD on the hard-label cross entropy with a uniform random start.
/// Every row of the result lies in the eps-ball around its source row and in [0,1].
inline RowMatrix pgd_batch(const Model& model, const RowMatrix& x, const std::vector<std::size_t>& labels,
                           double eps, std::size_t steps, double step, Rng& rng) {
  const auto k = model.num_classes();
  const RowMatrix lo = (x.array() - eps).cwiseMax(0.0);
  const RowMatrix hi = (x.array() + eps).cwiseMin(1.0);
  RowMatrix xa(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) xa.data()[i] = x.data()[i] + rng.uniform(-eps, eps);
  xa = xa.cwiseMax(lo).cwiseMin(hi);
  const RowMatrix onehot = smoothed_targets(labels, k, 0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    auto acts = batch::forward_trace(model, xa);
    RowMatrix g = batch::backward_trace(model, acts, batch::softmax_rows(acts.back()) - onehot, nullptr);
    xa = (xa.array() + step * g.array().sign()).matrix().cwiseMax(lo).cwiseMin(hi);
  }
  return xa;
}

}  // namespace detail

/// Mini-batch SGD with momentum on hard, smoothed, or adversarial targets.
///
/// Fully determined by `cfg.seed`: the batch order comes from a seeded shuffle
/// per epoch and all reductions run in a fixed order. In adversarial mode each
/// batch is replaced by PGD examples crafted against the current weights before
/// the gradient step. `test` is optional and only feeds the log.
inline TrainResult train(Model model, const Dataset& data, const TrainConfig& cfg, const Dataset* test = nullptr) {
  cfg.validate();
  if (data.empty()) throw ParameterError("train: empty dataset");
  if (data.dim() != model.input_dim() || data.num_classes() != model.num_classes()) {
    throw ShapeError("train: dataset does not match model dimensions");
  }
  const std::size_t k = model.num_classes();
  const double alpha = cfg.effective_alpha();
  Rng order_rng(derive_seed(cfg.seed, 1));
  Rng attack_rng(derive_seed(cfg.seed, 2));

  ParamGradient velocity = ParamGradient::zeros_like(model);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - first);
      std::span<const std::size_t> idx(order.data() + first, n);
      std::vector<std::size_t> labels(n);
      for (std::size_t r = 0; r < n; ++r) labels[r] = data.label(idx[r]);

      RowMatrix x = batch::gather(data, idx);
      if (cfg.label_mode == LabelMode::adversarial) {
        x = detail::pgd_batch(model, x, labels, cfg.adv_eps, cfg.adv_steps, cfg.adv_step_size, attack_rng);
      }
      auto acts = batch::forward_trace(model, x);
      const RowMatrix& z = acts.back();
      const RowMatrix y = detail::smoothed_targets(labels, k, alpha);
      RowMatrix s = batch::softmax_rows(z);

      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const auto t = Eigen::Index(labels[std::size_t(r)]);
        const double top = z.row(r).maxCoeff();
        const double lse = top + std::log((z.row(r).array() - top).exp().sum());
        loss_sum += -(y.row(r).array() * (z.row(r).array() - lse)).sum();
        Eigen::Index j;
        z.row(r).maxCoeff(&j);
        hits += (j == t);
      }
      if (!std::isfinite(loss_sum)) {
        throw DivergenceError("train: loss became non-finite in epoch " + std::to_string(epoch));
      }

      ParamGradient grad = ParamGradient::zeros_like(model);
      batch::backward_trace(model, acts, (s - y) / double(n), &grad);

      auto& layers = model.mutable_layers();
      for (std::size_t li = 0; li < layers.size(); ++li) {
        auto step = [&](std::vector<double>& p, std::vector<double>& v, const std::vector<double>& g) {
          for (std::size_t e = 0; e < p.size(); ++e) {
            v[e] = cfg.momentum * v[e] + g[e];
            p[e] -= cfg.learning_rate * v[e];
          }
        };
        step(layers[li].weight, velocity.weight[li], grad.weight[li]);
        step(layers[li].bias, velocity.bias[li], grad.bias[li]);
      }
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / double(data.size());
    rec.train_acc = 100.0 * double(hits) / double(data.size());
    rec.test_acc = (test != nullptr) ? batch::accuracy(model, *test) : std::nan("");
    result.log.push_back(rec);
  }
  result.model = std::move(model);
  return result;
}

/// Pooled logit statistics over a dataset.
struct LogitRangeStats {
  double min = 0.0;
  double max = 0.0;
  double p01 = 0.0;  // 1st percentile of all logits
  double p99 = 0.0;  // 99th percentile of all logits
  double mean_margin = 0.0;          // mean of z_t - z_i over correctly classified examples
  double mean_margin_all = 0.0;      // same, over every example
  double mean_example_range = 0.0;   // mean of (max_i z_i - min_i z_i) per example
  std::size_t count = 0;

  double width() const { return p99 - p01; }
};

inline LogitRangeStats logit_range_stats(const Model& model, const Dataset& data) {
  if (data.empty()) throw ParameterError("logit_range_stats: empty dataset");
  LogitRangeStats st;
  st.count = data.size();
  std::vector<double> all;
  all.reserve(data.size() * model.num_classes());
  double margin_ok = 0.0;
  std::size_t n_ok = 0;
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const RowMatrix z = batch::logits(model, batch::gather(data, idx));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::vector<double> row(z.row(Eigen::Index(i)).data(), z.row(Eigen::Index(i)).data() + z.cols());
    all.insert(all.end(), row.begin(), row.end());
    const auto ms = margin_stats_from_logits(Tensor::vector(row), data.label(i));
    st.mean_margin_all += ms.mean_margin;
    st.mean_example_range += ms.logit_max - ms.logit_min;
    if (ms.min_margin > 0.0) {
      margin_ok += ms.mean_margin;
      ++n_ok;
    }
  }
  st.mean_margin_all /= double(data.size());
  st.mean_example_range /= double(data.size());
  st.mean_margin = n_ok > 0 ? margin_ok / double(n_ok) : 0.0;
  std::sort(all.begin(), all.end());
  st.min = all.front();
  st.max = all.back();
  auto pct = [&](double p) {
    const double pos = p * double(all.size() - 1);
    const auto lo = std::size_t(std::floor(pos));
    const auto hi = std::min(lo + 1, all.size() - 1);
    return all[lo] + (pos - double(lo)) * (all[hi] - all[lo]);
  };
  st.p01 = pct(0.01);
  st.p99 = pct(0.99);
  return st;
}

}  // namespace smoothrob

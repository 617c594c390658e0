#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "smoothrob/dataset.hpp"
#include "smoothrob/model.hpp"

namespace smoothrob::batch {

/// Post-activation outputs of every layer for a batch; acts[0] is the input block (n x d).
inline std::vector<RowMatrix> forward_trace(const Model& model, const RowMatrix& x) {
  if (std::size_t(x.cols()) != model.input_dim()) throw ShapeError("batch forward: input width mismatch");
  std::vector<RowMatrix> acts;
  acts.reserve(model.layers().size() + 1);
  acts.push_back(x);
  for (const auto& l : model.layers()) {
    RowMatrix h = acts.back() * l.w().transpose();
    h.rowwise() += l.b().transpose();
    if (l.activation == Activation::relu) h = h.cwiseMax(0.0);
    acts.push_back(std::move(h));
  }
  return acts;
}

inline RowMatrix logits(const Model& model, const RowMatrix& x) {
  return std::move(forward_trace(model, x).back());
}

/// Reverse pass for a batch. `grad_z` is (n x K); parameter gradients are
/// accumulated (summed over rows) into `params` when non-null. Returns dL/dX.
inline RowMatrix backward_trace(const Model& model, const std::vector<RowMatrix>& acts, RowMatrix grad_z,
                                ParamGradient* params) {
  const auto& layers = model.layers();
  RowMatrix delta = std::move(grad_z);
  for (std::size_t i = layers.size(); i-- > 0;) {
    const auto& l = layers[i];
    if (l.activation == Activation::relu) {
      delta = (acts[i + 1].array() > 0.0).select(delta, 0.0);
    }
    if (params != nullptr) {
      MatrixMap gw(params->weight[i].data(), Eigen::Index(l.out_dim), Eigen::Index(l.in_dim));
      gw.noalias() += delta.transpose() * acts[i];
      VectorMap(params->bias[i].data(), Eigen::Index(l.out_dim)) += delta.colwise().sum().transpose();
    }
    if (i > 0 || params == nullptr) {
      RowMatrix next = delta * l.w();
      delta = std::move(next);
    }
  }
  return delta;
}

/// Copies rows `idx` of a dataset into a dense block.
inline RowMatrix gather(const Dataset& d, std::span<const std::size_t> idx) {
  RowMatrix x(Eigen::Index(idx.size()), Eigen::Index(d.dim()));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    auto row = d.row(idx[r]);
    std::copy(row.begin(), row.end(), x.row(Eigen::Index(r)).data());
  }
  return x;
}

/// Row-wise softmax of a logit block.
inline RowMatrix softmax_rows(const RowMatrix& z) {
  RowMatrix s = (z.colwise() - z.rowwise().maxCoeff()).array().exp();
  s.array().colwise() /= s.rowwise().sum().array();
  return s;
}

/// Predicted classes for every example, in order, chunked to bound memory.
inline std::vector<std::size_t> predict(const Model& model, const Dataset& d, std::size_t chunk = 512) {
  std::vector<std::size_t> out;
  out.reserve(d.size());
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < d.size(); first += chunk) {
    idx.clear();
    for (std::size_t i = first; i < std::min(d.size(), first + chunk); ++i) idx.push_back(i);
    RowMatrix z = logits(model, gather(d, idx));
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      Eigen::Index j;
      z.row(r).maxCoeff(&j);
      out.push_back(std::size_t(j));
    }
  }
  return out;
}

/// Percentage of correctly classified examples.
inline double accuracy(const Model& model, const Dataset& d) {
  if (d.empty()) return 0.0;
  const auto pred = predict(model, d);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < d.size(); ++i) hit += pred[i] == d.label(i);
  return 100.0 * double(hit) / double(d.size());
}

}  // namespace smoothrob::batch

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "smoothrob/error.hpp"
#include "smoothrob/losses.hpp"
#include "smoothrob/model.hpp"
#include "smoothrob/rng.hpp"
#include "smoothrob/tensor.hpp"

namespace smoothrob {

enum class Norm { linf, l2 };
enum class InitKind { original, random_in_ball, odi, zero_image };
enum class AttackLoss { cross_entropy, margin, targeted_margin, logit_dot };
enum class StepSizeMode { fixed, automatic };

inline const char* to_string(Norm n) { return n == Norm::linf ? "linf" : "l2"; }

inline const char* to_string(InitKind k) {
  switch (k) {
    case InitKind::original: return "original";
    case InitKind::random_in_ball: return "random";
    case InitKind::odi: return "odi";
    case InitKind::zero_image: return "zero";
  }
  return "?";
}

inline const char* to_string(AttackLoss l) {
  switch (l) {
    case AttackLoss::cross_entropy: return "ce";
    case AttackLoss::margin: return "margin";
    case AttackLoss::targeted_margin: return "targeted-margin";
    case AttackLoss::logit_dot: return "logit-dot";
  }
  return "?";
}

/// Settings shared by the PGD-like family (FGSM, PGD^k, PGD-CW, MT, ODI, APGD-CE).
struct AttackConfig {
  Norm norm = Norm::linf;
  double eps = 0.3;
  std::size_t steps = 20;
  double step_size = 0.03;
  std::size_t restarts = 1;
  InitKind init = InitKind::random_in_ball;
  std::size_t odi_steps = 2;
  double odi_step = -1.0;  // negative: use eps
  AttackLoss loss = AttackLoss::cross_entropy;
  std::size_t target_class = 0;   // targeted_margin only
  std::vector<double> direction;  // logit_dot only
  StepSizeMode step_size_mode = StepSizeMode::fixed;
  bool early_stop = true;  // stop at the first misclassifying iterate
  std::uint64_t seed = 0;

  double resolved_odi_step() const { return odi_step < 0.0 ? eps : odi_step; }

  /// eps == 0 is accepted so that a zero budget can be used as a sanity probe.
  void validate() const {
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw ParameterError("attack: eps must be >= 0");
    if (steps < 1) throw ParameterError("attack: steps must be >= 1");
    if (restarts < 1) throw ParameterError("attack: restarts must be >= 1");
    if (!(step_size > 0.0) && step_size_mode == StepSizeMode::fixed) {
      throw ParameterError("attack: step size must be positive");
    }
    if (init == InitKind::zero_image) {
      throw ParameterError("attack: zero_image start is only meaningful for cw_l2");
    }
  }
};

struct AttackDiagnostics {
  bool zero_gradient = false;    // gradient vanished at the start point
  bool saturated_tanh = false;   // some |w| > 20 in a tanh-parameterized attack
  std::size_t step_halvings = 0; // automatic step-size schedule
};

struct AttackOutcome {
  Tensor x_adv;
  bool success = false;        // model argmax on x_adv != true class
  double norm = 0.0;           // ||x_adv - x_orig|| in the attack's norm
  bool within_budget = true;   // norm <= eps (only informative for cw_l2)
  double best_loss = -std::numeric_limits<double>::infinity();
  std::vector<double> loss_trace;
  std::size_t restarts_used = 0;
  std::size_t first_success_step = 0;  // 1-based step index of first success; 0 if never
  AttackDiagnostics diagnostics;
};

// ---------------------------------------------------------------------------
// Projection

/// Nearest point of B_eps^p(x_orig) intersected with [0,1]^n.
///
/// L-inf is a per-coordinate clamp. For L2 the nearest point has the form
/// clamp((x + lambda x_orig) / (1 + lambda), 0, 1) for the smallest lambda >= 0
/// that lands inside the ball; lambda is found by bisection.
inline Tensor project_ball(const Tensor& x, const Tensor& x_orig, double eps, Norm p) {
  if (x.size() != x_orig.size()) throw ShapeError("project_ball: shape mismatch");
  Tensor out = x;
  const std::size_t n = x.size();
  if (p == Norm::linf) {
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = std::max(x_orig[i] - eps, 0.0);
      const double hi = std::min(x_orig[i] + eps, 1.0);
      out[i] = std::clamp(x[i], lo, hi);
    }
    return out;
  }
  auto candidate = [&](double lambda, Tensor& y) {
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = std::clamp((x[i] + lambda * x_orig[i]) / (1.0 + lambda), 0.0, 1.0);
    }
    return l2_distance(y.values(), x_orig.values());
  };
  if (candidate(0.0, out) <= eps) return out;
  double lo = 0.0, hi = 1.0;
  Tensor y = out;
  while (candidate(hi, y) > eps) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (candidate(mid, y) > eps ? lo : hi) = mid;
  }
  candidate(hi, out);
  return out;
}

/// Uniform sample of the L-inf ball (or a uniform-radius L2 sample), projected into the box.
inline Tensor random_in_ball(const Tensor& x_orig, double eps, Norm p, Rng& rng) {
  Tensor out = x_orig;
  if (p == Norm::linf) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += rng.uniform(-eps, eps);
  } else {
    std::vector<double> d(out.size());
    double norm = 0.0;
    for (auto& v : d) {
      v = rng.normal();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    const double r = eps * std::pow(rng.uniform(), 1.0 / double(out.size()));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += norm > 0.0 ? r * d[i] / norm : 0.0;
  }
  return project_ball(out, x_orig, eps, p);
}

inline double perturbation_norm(const Tensor& x_adv, const Tensor& x_orig, Norm p) {
  return p == Norm::linf ? linf_distance(x_adv.values(), x_orig.values())
                         : l2_distance(x_adv.values(), x_orig.values());
}

/// True when x_adv is in [0,1]^n and within eps (+ tol) of x_orig.
inline bool feasible(const Tensor& x_adv, const Tensor& x_orig, double eps, Norm p, double tol = 1e-9) {
  for (double v : x_adv.values()) {
    if (!(v >= -1e-12 && v <= 1.0 + 1e-12)) return false;
  }
  return perturbation_norm(x_adv, x_orig, p) <= eps + tol;
}

// ---------------------------------------------------------------------------
// Shared machinery

namespace detail {

struct Probe {
  Tensor z;
  double loss = 0.0;
  Tensor grad;  // d loss / d x
};

using LossFn = std::function<LossValue(const Tensor& z)>;

inline Probe probe(const Model& model, const Tensor& x, const LossFn& loss) {
  auto acts = detail::forward_trace(model, x.values());
  Probe p;
  p.z = Tensor::vector(std::vector<double>(acts.back().data(), acts.back().data() + acts.back().size()));
  LossValue lv = loss(p.z);
  p.loss = lv.loss;
  Eigen::VectorXd g = detail::backward_trace(model, acts, lv.grad_z.values(), nullptr);
  p.grad = Tensor(x.shape(), std::vector<double>(g.data(), g.data() + g.size()));
  return p;
}

inline bool all_zero(const Tensor& g) {
  return std::all_of(g.values().begin(), g.values().end(), [](double v) { return v == 0.0; });
}

inline double sgn(double v) { return double(v > 0.0) - double(v < 0.0); }

/// x + step * direction(g): sign(g) for L-inf, g / ||g||_2 for L2.
inline Tensor ascend(const Tensor& x, const Tensor& g, double step, Norm p) {
  Tensor out = x;
  if (p == Norm::linf) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += step * sgn(g[i]);
  } else {
    double n = 0.0;
    for (double v : g.values()) n += v * v;
    n = std::sqrt(n);
    if (n > 0.0) {
      for (std::size_t i = 0; i < x.size(); ++i) out[i] += step * g[i] / n;
    }
  }
  return out;
}

inline LossFn make_loss(AttackLoss kind, std::size_t t, std::size_t target, std::vector<double> direction) {
  switch (kind) {
    case AttackLoss::cross_entropy:
      return [t](const Tensor& z) { return ce_loss_onehot(z, t); };
    case AttackLoss::margin:
      return [t](const Tensor& z) { return margin_loss(z, t); };
    case AttackLoss::targeted_margin:
      return [t, target](const Tensor& z) { return targeted_margin_loss(z, t, target); };
    case AttackLoss::logit_dot:
      return [d = std::move(direction)](const Tensor& z) { return logit_dot_loss(z, d); };
  }
  throw ParameterError("unknown attack loss");
}

/// Keeps the best iterate: any misclassifying point beats any correct one,
/// otherwise the larger score wins. Ties keep the earlier iterate.
struct BestTracker {
  Tensor x;
  double score = -std::numeric_limits<double>::infinity();
  bool success = false;
  bool empty = true;

  bool offer(const Tensor& cand, double cand_score, bool cand_success) {
    const bool better = empty || (cand_success && !success) ||
                        (cand_success == success && cand_score > score);
    if (better) {
      x = cand;
      score = cand_score;
      success = cand_success;
      empty = false;
    }
    return better;
  }
};

struct RestartPlan {
  InitKind init = InitKind::random_in_ball;
  AttackLoss loss = AttackLoss::cross_entropy;
  std::size_t target = 0;
};

}  // namespace detail

/// Output-diversified start: ascend d . f(x) for a random d ~ U[-1,1]^K with
/// `n_steps` sign steps of size `step`, projecting onto the ball after each.
inline Tensor odi_init(const Model& model, const Tensor& x, double eps, std::size_t n_steps, double step, Rng& rng,
                       Norm p = Norm::linf) {
  std::vector<double> d(model.num_classes());
  for (auto& v : d) v = rng.uniform(-1.0, 1.0);
  const auto loss = detail::make_loss(AttackLoss::logit_dot, 0, 0, d);
  Tensor cur = x;
  for (std::size_t i = 0; i < n_steps; ++i) {
    const auto pr = detail::probe(model, cur, loss);
    cur = project_ball(detail::ascend(cur, pr.grad, step, p), x, eps, p);
  }
  return cur;
}

namespace detail {

inline Tensor start_point(const Model& model, const Tensor& x, const AttackConfig& cfg, InitKind init, Rng& rng) {
  switch (init) {
    case InitKind::original: return x;
    case InitKind::random_in_ball: return random_in_ball(x, cfg.eps, cfg.norm, rng);
    case InitKind::odi: return odi_init(model, x, cfg.eps, cfg.odi_steps, cfg.resolved_odi_step(), rng, cfg.norm);
    case InitKind::zero_image: break;
  }
  throw ParameterError("zero_image start is only valid for cw_l2");
}

/// Fixed-step projected ascent with restarts. `plan(r)` chooses the start and
/// loss of restart r; `score` ranks iterates across restarts.
inline AttackOutcome run_pgd(const Model& model, const Tensor& x, std::size_t t, const AttackConfig& cfg,
                             const std::function<RestartPlan(std::size_t)>& plan,
                             const std::function<double(const Tensor& z, double loss)>& score) {
  cfg.validate();
  if (x.size() != model.input_dim()) throw ShapeError("attack: input does not match model");
  detail::check_class(t, model.num_classes());
  AttackOutcome out;
  BestTracker best;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Rng rng(derive_seed(cfg.seed, r));
    const RestartPlan pl = plan(r);
    const auto loss = make_loss(pl.loss, t, pl.target, cfg.direction);
    Tensor cur = start_point(model, x, cfg, pl.init, rng);
    out.restarts_used = r + 1;
    for (std::size_t k = 0;; ++k) {
      const Probe pr = probe(model, cur, loss);
      const bool hit = argmax(pr.z.values()) != t;
      out.loss_trace.push_back(pr.loss);
      best.offer(cur, score(pr.z, pr.loss), hit);
      if (hit && out.first_success_step == 0) out.first_success_step = r * cfg.steps + std::max<std::size_t>(k, 1);
      if (r == 0 && k == 0 && all_zero(pr.grad)) out.diagnostics.zero_gradient = true;
      if ((hit && cfg.early_stop) || k == cfg.steps) break;
      cur = project_ball(ascend(cur, pr.grad, cfg.step_size, cfg.norm), x, cfg.eps, cfg.norm);
    }
    if (best.success && cfg.early_stop) break;
  }
  out.x_adv = best.x;
  out.success = best.success;
  out.best_loss = best.score;
  out.norm = perturbation_norm(out.x_adv, x, cfg.norm);
  out.within_budget = out.norm <= cfg.eps + 1e-9;
  return out;
}

inline double loss_score(const Tensor&, double loss) { return loss; }

}  // namespace detail

// ---------------------------------------------------------------------------
// PGD-like family

/// Projected sign-gradient ascent, x_{k+1} = Pi(x_k + eta sign(grad L)).
/// Keeps the best iterate over all restarts.
inline AttackOutcome pgd(const Model& model, const Tensor& x, std::size_t t, const AttackConfig& cfg) {
  if (cfg.step_size_mode == StepSizeMode::automatic) {
    throw ParameterError("pgd: automatic step size belongs to apgd_ce");
  }
  return detail::run_pgd(
      model, x, t, cfg, [&](std::size_t) { return detail::RestartPlan{cfg.init, cfg.loss, cfg.target_class}; },
      detail::loss_score);
}

/// One step of size 2 eps from x_orig along sign(grad CE), then projection.
inline AttackOutcome fgsm(const Model& model, const Tensor& x, std::size_t t, double eps, Norm p = Norm::linf) {
  AttackConfig cfg;
  cfg.norm = p;
  cfg.eps = eps;
  cfg.steps = 1;
  cfg.step_size = eps > 0.0 ? 2.0 * eps : 1.0;
  cfg.init = InitKind::original;
  cfg.loss = AttackLoss::cross_entropy;
  return pgd(model, x, t, cfg);
}

/// PGD on the margin loss.
inline AttackOutcome pgd_cw(const Model& model, const Tensor& x, std::size_t t, AttackConfig cfg) {
  cfg.loss = AttackLoss::margin;
  return pgd(model, x, t, cfg);
}

/// Restarts cycle over the wrong classes j != t in index order, each maximizing
/// z_j - z_t from a fresh random start. Iterates are ranked by the untargeted margin.
inline AttackOutcome multitargeted(const Model& model, const Tensor& x, std::size_t t, const AttackConfig& cfg) {
  const std::size_t k = model.num_classes();
  if (k < 2) throw ParameterError("multitargeted: need K >= 2");
  std::vector<std::size_t> targets;
  for (std::size_t j = 0; j < k; ++j) {
    if (j != t) targets.push_back(j);
  }
  const InitKind init = cfg.init == InitKind::original ? InitKind::original : InitKind::random_in_ball;
  return detail::run_pgd(
      model, x, t, cfg,
      [&](std::size_t r) {
        return detail::RestartPlan{init, AttackLoss::targeted_margin, targets[r % targets.size()]};
      },
      [t](const Tensor& z, double) { return margin_loss(z, t).loss; });
}

/// PGD on the margin loss where every restart starts from an output-diversified point.
inline AttackOutcome odi_pgd(const Model& model, const Tensor& x, std::size_t t, AttackConfig cfg) {
  cfg.init = InitKind::odi;
  cfg.loss = AttackLoss::margin;
  return pgd(model, x, t, cfg);
}

/// Auto-step-size PGD on cross entropy.
///
/// Starts at eta = 2 eps. Every ceil(steps/10) iterations, if fewer than 75% of
/// the steps since the previous checkpoint kept the loss from decreasing, eta is
/// halved and the iterate jumps back to the best point found so far. Updates mix
/// the new projected step with the previous displacement:
///   x_{k+1} = Pi(x_k + 0.75 (z_{k+1} - x_k) + 0.25 (x_k - x_{k-1})).
inline AttackOutcome apgd_ce(const Model& model, const Tensor& x, std::size_t t, AttackConfig cfg) {
  cfg.step_size_mode = StepSizeMode::automatic;
  cfg.validate();
  if (x.size() != model.input_dim()) throw ShapeError("attack: input does not match model");
  detail::check_class(t, model.num_classes());
  constexpr double kMomentum = 0.75;
  constexpr double kRho = 0.75;
  const std::size_t period = std::max<std::size_t>(1, (cfg.steps + 9) / 10);
  const auto loss = detail::make_loss(AttackLoss::cross_entropy, t, 0, {});

  AttackOutcome out;
  detail::BestTracker best;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Rng rng(derive_seed(cfg.seed, r));
    double eta = 2.0 * cfg.eps;
    Tensor cur = detail::start_point(model, x, cfg, cfg.init == InitKind::original ? InitKind::original : InitKind::random_in_ball, rng);
    Tensor prev = cur;
    detail::Probe pr = detail::probe(model, cur, loss);
    Tensor best_x = cur;
    detail::Probe best_pr = pr;
    if (r == 0 && detail::all_zero(pr.grad)) out.diagnostics.zero_gradient = true;
    std::size_t ok_steps = 0;
    out.restarts_used = r + 1;
    for (std::size_t k = 0;; ++k) {
      const bool hit = argmax(pr.z.values()) != t;
      out.loss_trace.push_back(pr.loss);
      best.offer(cur, pr.loss, hit);
      if (hit && out.first_success_step == 0) out.first_success_step = r * cfg.steps + std::max<std::size_t>(k, 1);
      if (pr.loss > best_pr.loss) {
        best_x = cur;
        best_pr = pr;
      }
      if ((hit && cfg.early_stop) || k + 1 == cfg.steps) break;
      if (k > 0 && k % period == 0) {
        if (double(ok_steps) < kRho * double(period)) {
          eta /= 2.0;
          ++out.diagnostics.step_halvings;
          cur = best_x;
          prev = best_x;
          pr = best_pr;
        }
        ok_steps = 0;
      }
      const Tensor z = project_ball(detail::ascend(cur, pr.grad, eta, cfg.norm), x, cfg.eps, cfg.norm);
      Tensor next = cur;
      if (k == 0) {
        next = z;
      } else {
        for (std::size_t i = 0; i < next.size(); ++i) {
          next[i] = cur[i] + kMomentum * (z[i] - cur[i]) + (1.0 - kMomentum) * (cur[i] - prev[i]);
        }
        next = project_ball(next, x, cfg.eps, cfg.norm);
      }
      const double before = pr.loss;
      prev = std::move(cur);
      cur = std::move(next);
      pr = detail::probe(model, cur, loss);
      if (pr.loss >= before) ++ok_steps;
    }
    if (best.success && cfg.early_stop) break;
  }
  out.x_adv = best.x;
  out.success = best.success;
  out.best_loss = best.score;
  out.norm = perturbation_norm(out.x_adv, x, cfg.norm);
  out.within_budget = out.norm <= cfg.eps + 1e-9;
  return out;
}

// ---------------------------------------------------------------------------
// Carlini-Wagner L2

enum class CWStart { original, zero_image };

struct CWConfig {
  double c = 0.1;
  double kappa = 0.0;  // confidence; the margin term is max(z_t - max_{i!=t} z_i, -kappa)
  std::size_t steps = 1000;
  double learning_rate = 0.01;
  CWStart start = CWStart::original;
  double eps = 140.0 / 255.0;  // budget for success accounting only
  bool early_stop = false;     // stop at the first iterate that is adversarial and within eps

  void validate() const {
    if (!(c > 0.0)) throw ParameterError("cw: c must be positive");
    if (steps < 1) throw ParameterError("cw: steps must be >= 1");
    if (!(learning_rate > 0.0)) throw ParameterError("cw: learning rate must be positive");
  }
};

/// Box-free CW-L2: x + delta = (tanh(w) + 1) / 2, minimizing
/// ||delta||_2 + c * max(z_t - max_{i!=t} z_i, -kappa) with Adam.
///
/// Returns the lowest-norm misclassifying iterate if there is one, otherwise the
/// iterate with the lowest objective. `within_budget` records ||delta||_2 <= eps.
inline AttackOutcome cw_l2(const Model& model, const Tensor& x, std::size_t t, const CWConfig& cw) {
  cw.validate();
  if (x.size() != model.input_dim()) throw ShapeError("attack: input does not match model");
  detail::check_class(t, model.num_classes());
  const std::size_t n = x.size();
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kAdamEps = 1e-8;
  constexpr double kEdge = 1.0 - 1e-6;

  std::vector<double> w(n), m(n, 0.0), v(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = cw.start == CWStart::zero_image ? 0.0 : x[i];
    w[i] = std::atanh(std::clamp(2.0 * x0 - 1.0, -kEdge, kEdge));
  }
  auto image = [&](Tensor& a) {
    for (std::size_t i = 0; i < n; ++i) a[i] = 0.5 * (std::tanh(w[i]) + 1.0);
  };

  AttackOutcome out;
  out.restarts_used = 1;
  Tensor a(x.shape());
  Tensor best_succ, best_any;
  double best_succ_norm = std::numeric_limits<double>::infinity();
  double best_obj = std::numeric_limits<double>::infinity();
  const auto margin = detail::make_loss(AttackLoss::margin, t, 0, {});

  for (std::size_t k = 0; k <= cw.steps; ++k) {
    image(a);
    auto acts = detail::forward_trace(model, a.values());
    const Tensor z = Tensor::vector(std::vector<double>(acts.back().data(), acts.back().data() + acts.back().size()));
    // f = max(z_t - max_{i!=t} z_i, -kappa) = max(-margin_loss, -kappa)
    const LossValue ml = margin(z);
    const double f_raw = -ml.loss;
    const bool clamped = f_raw < -cw.kappa;
    const double f = clamped ? -cw.kappa : f_raw;
    const double dist = l2_distance(a.values(), x.values());
    const double obj = dist + cw.c * f;
    const bool hit = argmax(z.values()) != t;
    out.loss_trace.push_back(obj);
    if (obj < best_obj) {
      best_obj = obj;
      best_any = a;
    }
    if (hit && dist < best_succ_norm) {
      best_succ_norm = dist;
      best_succ = a;
      if (out.first_success_step == 0) out.first_success_step = std::max<std::size_t>(k, 1);
      if (cw.early_stop && dist <= cw.eps) break;
    }
    if (k == cw.steps) break;

    Tensor grad_z({z.size()});
    if (!clamped) {
      for (std::size_t i = 0; i < z.size(); ++i) grad_z[i] = -cw.c * ml.grad_z[i];
    }
    Eigen::VectorXd g = detail::backward_trace(model, acts, grad_z.values(), nullptr);
    const double t_step = double(k + 1);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = a[i] - x[i];
      double gi = g[Eigen::Index(i)] + (dist > 0.0 ? d / dist : 0.0);
      const double th = std::tanh(w[i]);
      gi *= 0.5 * (1.0 - th * th);
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * gi;
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * gi * gi;
      const double mh = m[i] / (1.0 - std::pow(kBeta1, t_step));
      const double vh = v[i] / (1.0 - std::pow(kBeta2, t_step));
      w[i] -= cw.learning_rate * mh / (std::sqrt(vh) + kAdamEps);
    }
  }
  out.success = !best_succ.empty();
  out.x_adv = out.success ? best_succ : best_any;
  out.norm = l2_distance(out.x_adv.values(), x.values());
  out.within_budget = out.success && out.norm <= cw.eps + 1e-12;
  out.best_loss = best_obj;
  for (double wi : w) {
    if (std::abs(wi) > 20.0) out.diagnostics.saturated_tanh = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// tanh-reparameterized L-inf attack

struct TanhAttackConfig {
  double eps = 0.3;
  std::size_t steps = 500;
  double step_size = 0.1;
  bool early_stop = false;
};

/// Per-pixel bounds lo = max(x - eps, 0), hi = min(x + eps, 1).
struct PixelBounds {
  std::vector<double> lo, hi;
};

inline PixelBounds pixel_bounds(const Tensor& x, double eps) {
  PixelBounds b{std::vector<double>(x.size()), std::vector<double>(x.size())};
  for (std::size_t i = 0; i < x.size(); ++i) {
    b.lo[i] = std::max(x[i] - eps, 0.0);
    b.hi[i] = std::min(x[i] + eps, 1.0);
  }
  return b;
}

/// a = (hi - lo) * (tanh(w) + 1) / 2 + lo, so a always stays in [lo, hi].
inline Tensor tanh_image(const PixelBounds& b, std::span<const double> w, const std::vector<std::size_t>& shape) {
  Tensor a(shape);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = (b.hi[i] - b.lo[i]) * 0.5 * (std::tanh(w[i]) + 1.0) + b.lo[i];
  return a;
}

/// L-inf attack by change of variables: the eps-ball and the pixel box are folded
/// into a = (hi - lo)(tanh(w) + 1)/2 + lo, and w starts at 0 and follows plain
/// gradient steps that increase the margin loss. No projection is ever applied.
/// The returned point is the iterate with the largest margin loss (x itself if
/// no iterate beats it).
inline AttackOutcome tanh_linf_attack(const Model& model, const Tensor& x, std::size_t t, const TanhAttackConfig& cfg) {
  if (!(cfg.eps > 0.0)) throw ParameterError("tanh attack: eps must be positive");
  if (x.size() != model.input_dim()) throw ShapeError("attack: input does not match model");
  detail::check_class(t, model.num_classes());
  const auto b = pixel_bounds(x, cfg.eps);
  const auto margin = detail::make_loss(AttackLoss::margin, t, 0, {});
  std::vector<double> w(x.size(), 0.0);

  AttackOutcome out;
  out.restarts_used = 1;
  const auto p0 = detail::probe(model, x, margin);
  Tensor best = x;
  double best_loss = p0.loss;
  out.loss_trace.push_back(p0.loss);

  Tensor a = tanh_image(b, w, x.shape());
  detail::Probe pr = detail::probe(model, a, margin);
  if (detail::all_zero(pr.grad)) out.diagnostics.zero_gradient = true;
  out.loss_trace.push_back(pr.loss);
  if (best_loss < pr.loss) {
    best = a;
    best_loss = pr.loss;
  }
  // w = 0 is the midpoint of [lo, hi], which differs from x at clipped pixels
  const bool start_hit = argmax(pr.z.values()) != t;
  if (start_hit) out.first_success_step = 1;
  for (std::size_t k = 1; k <= cfg.steps && !(start_hit && cfg.early_stop); ++k) {
    // w <- w - eta * d(-margin)/dw
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double th = std::tanh(w[i]);
      w[i] += cfg.step_size * pr.grad[i] * (b.hi[i] - b.lo[i]) * 0.5 * (1.0 - th * th);
    }
    a = tanh_image(b, w, x.shape());
    pr = detail::probe(model, a, margin);
    out.loss_trace.push_back(pr.loss);
    if (best_loss < pr.loss) {
      best = a;
      best_loss = pr.loss;
    }
    if (argmax(pr.z.values()) != t && out.first_success_step == 0) {
      out.first_success_step = k;
      if (cfg.early_stop) break;
    }
  }
  for (double wi : w) {
    if (std::abs(wi) > 20.0) out.diagnostics.saturated_tanh = true;
  }
  out.x_adv = best;
  out.best_loss = best_loss;
  out.success = argmax(forward(model, best).values()) != t;
  out.norm = linf_distance(best.values(), x.values());
  out.within_budget = out.norm <= cfg.eps + 1e-9;
  return out;
}

}  // namespace smoothrob

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "smoothrob/attacks.hpp"
#include "smoothrob/batch.hpp"
#include "smoothrob/dataset.hpp"
#include "smoothrob/parallel.hpp"
#include "smoothrob/training.hpp"

namespace smoothrob {

enum class AttackKind { fgsm, pgd, pgd_cw, multitargeted, odi, apgd_ce, cw_l2, tanh_linf };

/// A fully specified attack: which procedure plus its settings.
struct AttackSpec {
  std::string name;
  AttackKind kind = AttackKind::pgd;
  AttackConfig pgd;        // PGD-like family
  CWConfig cw;             // cw_l2
  TanhAttackConfig tanh;   // tanh_linf

  double eps() const {
    if (kind == AttackKind::cw_l2) return cw.eps;
    if (kind == AttackKind::tanh_linf) return tanh.eps;
    return pgd.eps;
  }
  Norm norm() const {
    if (kind == AttackKind::cw_l2) return Norm::l2;
    if (kind == AttackKind::tanh_linf) return Norm::linf;
    return pgd.norm;
  }

  /// Flat key/value snapshot for reports and manifests.
  std::map<std::string, std::string> describe() const {
    std::map<std::string, std::string> d;
    auto num = [](double v) {
      std::ostringstream os;
      os.precision(17);
      os << v;
      return os.str();
    };
    d["attack"] = name;
    d["eps"] = num(eps());
    d["norm"] = to_string(norm());
    switch (kind) {
      case AttackKind::cw_l2:
        d["c"] = num(cw.c);
        d["kappa"] = num(cw.kappa);
        d["steps"] = std::to_string(cw.steps);
        d["learning_rate"] = num(cw.learning_rate);
        d["start"] = cw.start == CWStart::zero_image ? "zero" : "original";
        break;
      case AttackKind::tanh_linf:
        d["steps"] = std::to_string(tanh.steps);
        d["step_size"] = num(tanh.step_size);
        break;
      default:
        d["steps"] = std::to_string(pgd.steps);
        d["step_size"] = kind == AttackKind::apgd_ce ? "auto" : num(pgd.step_size);
        d["restarts"] = std::to_string(pgd.restarts);
        d["init"] = to_string(pgd.init);
        d["loss"] = to_string(pgd.loss);
        d["seed"] = std::to_string(pgd.seed);
        if (pgd.init == InitKind::odi) {
          d["odi_steps"] = std::to_string(pgd.odi_steps);
          d["odi_step"] = num(pgd.resolved_odi_step());
        }
        break;
    }
    return d;
  }
};

/// Attack presets named after the rows of the standard PGD-like settings table,
/// plus `cw` (CW-L2, zero-image start), `cw-orig` (CW-L2 from x_orig) and `tanh`.
///
///   fgsm      1 step, 2 eps, original start, CE
///   pgd10     10 steps, eps/5, random start, CE
///   pgd20     20 steps, eps/10, random start, CE
///   pgd40     40 steps, eps/20, random start, CE
///   pgd-cw    20 steps, eps/10, random start, margin
///   mt        18 restarts, 20 steps, eps/10, random start, targeted margin
///   odi       20 restarts, 20 steps, eps/10, ODI start (2 steps of eps), margin
///   apgd-ce   100 steps, automatic step size, random start, CE
inline AttackSpec attack_preset(const std::string& name, double eps, std::uint64_t seed = 0) {
  AttackSpec s;
  s.name = name;
  s.pgd.eps = eps;
  s.pgd.seed = seed;
  s.pgd.init = InitKind::random_in_ball;
  s.pgd.loss = AttackLoss::cross_entropy;
  auto fixed = [&](std::size_t steps, double step) {
    s.pgd.steps = steps;
    s.pgd.step_size = step;
  };
  if (name == "fgsm") {
    s.kind = AttackKind::fgsm;
    fixed(1, 2.0 * eps);
    s.pgd.init = InitKind::original;
  } else if (name == "pgd10") {
    fixed(10, eps / 5.0);
  } else if (name == "pgd20" || name == "pgd") {
    fixed(20, eps / 10.0);
  } else if (name == "pgd40") {
    fixed(40, eps / 20.0);
  } else if (name == "pgd-cw") {
    s.kind = AttackKind::pgd_cw;
    fixed(20, eps / 10.0);
    s.pgd.loss = AttackLoss::margin;
  } else if (name == "mt") {
    s.kind = AttackKind::multitargeted;
    fixed(20, eps / 10.0);
    s.pgd.restarts = 18;
    s.pgd.loss = AttackLoss::targeted_margin;
  } else if (name == "odi") {
    s.kind = AttackKind::odi;
    fixed(20, eps / 10.0);
    s.pgd.restarts = 20;
    s.pgd.init = InitKind::odi;
    s.pgd.odi_steps = 2;
    s.pgd.odi_step = eps;
    s.pgd.loss = AttackLoss::margin;
  } else if (name == "apgd-ce") {
    s.kind = AttackKind::apgd_ce;
    s.pgd.steps = 100;
    s.pgd.step_size = 2.0 * eps;
    s.pgd.step_size_mode = StepSizeMode::automatic;
  } else if (name == "cw" || name == "cw-orig") {
    s.kind = AttackKind::cw_l2;
    s.cw.eps = eps;
    s.cw.start = name == "cw" ? CWStart::zero_image : CWStart::original;
  } else if (name == "tanh") {
    s.kind = AttackKind::tanh_linf;
    s.tanh.eps = eps;
    s.tanh.early_stop = true;
  } else {
    throw ParameterError("unknown attack preset '" + name + "'");
  }
  if (s.kind == AttackKind::fgsm && eps == 0.0) s.pgd.step_size = 1.0;
  if (s.kind != AttackKind::cw_l2 && s.kind != AttackKind::tanh_linf && eps == 0.0 &&
      s.pgd.step_size_mode == StepSizeMode::fixed) {
    s.pgd.step_size = 1.0;  // any positive value; projection onto a zero ball pins x
  }
  return s;
}

/// Runs `spec` on one example; `example_seed` replaces the spec's seed so every
/// example gets an independent, order-free random stream.
inline AttackOutcome run_attack(const AttackSpec& spec, const Model& model, const Tensor& x, std::size_t t,
                                std::uint64_t example_seed) {
  AttackConfig cfg = spec.pgd;
  cfg.seed = example_seed;
  switch (spec.kind) {
    case AttackKind::fgsm: return fgsm(model, x, t, cfg.eps, cfg.norm);
    case AttackKind::pgd: return pgd(model, x, t, cfg);
    case AttackKind::pgd_cw: return pgd_cw(model, x, t, cfg);
    case AttackKind::multitargeted: return multitargeted(model, x, t, cfg);
    case AttackKind::odi: return odi_pgd(model, x, t, cfg);
    case AttackKind::apgd_ce: return apgd_ce(model, x, t, cfg);
    case AttackKind::cw_l2: return cw_l2(model, x, t, spec.cw);
    case AttackKind::tanh_linf: return tanh_linf_attack(model, x, t, spec.tanh);
  }
  throw ParameterError("unknown attack kind");
}

/// The first `n` examples after a seeded shuffle; the fixed evaluation subset.
inline Dataset eval_subset(const Dataset& data, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(std::min(n, idx.size()));
  return data.select(idx);
}

struct ExampleOutcome {
  std::size_t index = 0;
  std::size_t label = 0;
  bool clean_correct = false;
  bool robust = false;
  bool success = false;       // attack found a misclassifying point (within budget)
  double norm = 0.0;
  double loss = 0.0;
  std::size_t restarts_used = 0;
  std::size_t first_success_step = 0;
  bool zero_gradient = false;
};

struct EvalReport {
  std::string model_id;
  std::map<std::string, std::string> model_meta;
  std::map<std::string, std::string> attack_config;
  std::string attack;
  double eps = 0.0;
  std::uint64_t seed = 0;
  double natural_accuracy = 0.0;
  double robust_accuracy = 0.0;
  std::vector<ExampleOutcome> examples;
  double wall_seconds = 0.0;

  std::size_t robust_count() const {
    return std::size_t(std::count_if(examples.begin(), examples.end(), [](const auto& e) { return e.robust; }));
  }
};

struct EvalOptions {
  std::size_t workers = 1;
  std::string model_id;
  std::map<std::string, std::string> model_meta;
};

/// Throws InvariantError when an attack output leaves the box or its L-inf/L2 ball.
/// CW-L2 is only held to the box: its norm is reported, not enforced.
inline void check_feasibility(const AttackSpec& spec, const AttackOutcome& o, const Tensor& x, std::size_t index) {
  const bool ok = spec.kind == AttackKind::cw_l2 ? feasible(o.x_adv, x, std::numeric_limits<double>::infinity(), Norm::l2)
                                                 : feasible(o.x_adv, x, spec.eps(), spec.norm());
  if (!ok || o.x_adv.size() != x.size() || !o.x_adv.all_finite()) {
    throw InvariantError("attack '" + spec.name + "' returned an infeasible point for example " +
                         std::to_string(index));
  }
}

/// Attacks every example. Clean mistakes count as non-robust and are not attacked.
inline EvalReport robust_accuracy(const Model& model, const Dataset& data, const AttackSpec& spec,
                                  const EvalOptions& opt = {}) {
  if (data.dim() != model.input_dim()) throw ShapeError("robust_accuracy: dataset does not match model");
  const auto t0 = std::chrono::steady_clock::now();
  EvalReport rep;
  rep.model_id = opt.model_id;
  rep.model_meta = opt.model_meta;
  rep.attack = spec.name;
  rep.attack_config = spec.describe();
  rep.eps = spec.eps();
  rep.seed = spec.pgd.seed;
  rep.examples.resize(data.size());
  const auto pred = batch::predict(model, data);

  parallel_for(data.size(), opt.workers, [&](std::size_t i) {
    ExampleOutcome& e = rep.examples[i];
    e.index = i;
    e.label = data.label(i);
    e.clean_correct = pred[i] == e.label;
    if (!e.clean_correct) {
      e.success = true;
      return;
    }
    const Tensor x = data.input(i);
    const AttackOutcome o = run_attack(spec, model, x, e.label, derive_seed(spec.pgd.seed, i));
    check_feasibility(spec, o, x, i);
    e.success = o.success && o.within_budget;
    e.robust = !e.success;
    e.norm = o.norm;
    e.loss = o.best_loss;
    e.restarts_used = o.restarts_used;
    e.first_success_step = o.first_success_step;
    e.zero_gradient = o.diagnostics.zero_gradient;
  });

  std::size_t clean = 0, robust = 0;
  for (const auto& e : rep.examples) {
    clean += e.clean_correct;
    robust += e.robust;
  }
  const double n = double(std::max<std::size_t>(1, data.size()));
  rep.natural_accuracy = 100.0 * double(clean) / n;
  rep.robust_accuracy = 100.0 * double(robust) / n;
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

/// Per-example AND over survivals: robust only if every attack failed.
inline EvalReport ensemble(const std::vector<EvalReport>& reports, const std::string& name = "ensemble") {
  if (reports.empty()) throw ParameterError("ensemble: no reports");
  EvalReport out = reports.front();
  out.attack = name;
  out.attack_config = {{"attack", name}};
  out.wall_seconds = 0.0;
  for (const auto& r : reports) {
    if (r.examples.size() != out.examples.size()) throw ShapeError("ensemble: reports cover different datasets");
    out.wall_seconds += r.wall_seconds;
    out.attack_config["member." + r.attack] = r.attack;
  }
  std::size_t robust = 0;
  for (std::size_t i = 0; i < out.examples.size(); ++i) {
    bool all = true;
    for (const auto& r : reports) all = all && r.examples[i].robust;
    out.examples[i].robust = all;
    out.examples[i].success = out.examples[i].clean_correct && !all;
    robust += all;
  }
  out.robust_accuracy = 100.0 * double(robust) / double(std::max<std::size_t>(1, out.examples.size()));
  return out;
}

struct TransferReport {
  std::string source_id;
  std::string target_id;
  std::string attack;
  double eps = 0.0;
  double target_clean_accuracy = 0.0;
  double accuracy = 0.0;  // target accuracy on examples crafted against the source
  std::size_t count = 0;
};

/// Crafts adversarial examples white-box against `source` and scores them on `target`.
/// Examples the source already misclassifies are passed through unmodified.
/// Early stopping is switched off: a point that only just crosses the source
/// boundary says little about the target, so the attack runs its full budget.
inline TransferReport transfer_eval(const Model& source, const Model& target, const Dataset& data,
                                    AttackSpec spec, const EvalOptions& opt = {},
                                    std::string source_id = "source", std::string target_id = "target") {
  if (source.input_dim() != target.input_dim() || source.num_classes() != target.num_classes()) {
    throw ShapeError("transfer_eval: source and target dimensions differ");
  }
  spec.pgd.early_stop = false;
  spec.tanh.early_stop = false;
  spec.cw.early_stop = false;
  if (data.dim() != source.input_dim()) throw ShapeError("transfer_eval: dataset does not match models");
  const auto src_pred = batch::predict(source, data);
  std::vector<char> hit(data.size(), 0);
  parallel_for(data.size(), opt.workers, [&](std::size_t i) {
    const Tensor x = data.input(i);
    const std::size_t t = data.label(i);
    Tensor x_adv = x;
    if (src_pred[i] == t) {
      const AttackOutcome o = run_attack(spec, source, x, t, derive_seed(spec.pgd.seed, i));
      check_feasibility(spec, o, x, i);
      if (spec.kind != AttackKind::cw_l2 || o.within_budget) x_adv = o.x_adv;
    }
    hit[i] = argmax(forward(target, x_adv).values()) == t;
  });
  TransferReport rep;
  rep.source_id = std::move(source_id);
  rep.target_id = std::move(target_id);
  rep.attack = spec.name;
  rep.eps = spec.eps();
  rep.count = data.size();
  rep.accuracy = 100.0 * double(std::count(hit.begin(), hit.end(), 1)) / double(std::max<std::size_t>(1, data.size()));
  rep.target_clean_accuracy = batch::accuracy(target, data);
  return rep;
}

struct SweepRow {
  double alpha = 0.0;
  double natural_accuracy = 0.0;
  double robust_accuracy = 0.0;
};

/// Trains one model per smoothing factor from the same initialization and seed,
/// then evaluates each under `attack`. A negative `init_seed` reuses `cfg.seed`.
inline std::vector<SweepRow> alpha_sweep(const std::vector<double>& alphas, const Dataset& train_set,
                                         const Dataset& eval_set, const std::vector<std::size_t>& widths,
                                         TrainConfig cfg, const AttackSpec& attack, const EvalOptions& opt = {},
                                         InitScheme init = InitScheme::glorot_uniform,
                                         std::vector<Model>* models = nullptr, std::int64_t init_seed = -1) {
  const std::uint64_t seed = init_seed < 0 ? cfg.seed : std::uint64_t(init_seed);
  std::vector<SweepRow> rows;
  for (double a : alphas) {
    if (!(a >= 0.0 && a <= 1.0)) throw ParameterError("alpha_sweep: alpha outside [0, 1]");
    cfg.label_mode = LabelMode::smoothed;
    cfg.alpha = a;
    auto res = train(make_model(widths, init, seed), train_set, cfg);
    const auto rep = robust_accuracy(res.model, eval_set, attack, opt);
    rows.push_back({a, rep.natural_accuracy, rep.robust_accuracy});
    if (models != nullptr) models->push_back(std::move(res.model));
  }
  return rows;
}

struct AblationRow {
  std::string model_id;
  std::string axis;  // "step_size" or "steps"
  double step_size = 0.0;
  std::size_t steps = 0;
  double accuracy = 0.0;
};

struct AblationGrid {
  std::vector<double> step_sizes;         // swept at `max_steps`
  std::size_t max_steps = 500;
  std::vector<std::size_t> step_counts;   // swept at each of `count_step_sizes`
  std::vector<double> count_step_sizes;
};

/// Step-size / step-count grid for the tanh attack: step sizes 0.01..0.1 at 500
/// steps, and step counts 50..500 at eta in {0.01, 0.1}.
inline AblationGrid default_ablation_grid() {
  AblationGrid g;
  for (int i = 1; i <= 10; ++i) g.step_sizes.push_back(0.01 * i);
  for (std::size_t s = 50; s <= 500; s += 50) g.step_counts.push_back(s);
  g.count_step_sizes = {0.01, 0.1};
  return g;
}

/// Robust accuracy of the tanh attack across a step-size and step-count grid.
///
/// The attack is deterministic and starts at w = 0, so a K-step run is a prefix
/// of a longer run: accuracy at K steps is read off the step of first success
/// of a single run per step size.
inline std::vector<AblationRow> step_ablation(const std::vector<std::pair<std::string, const Model*>>& models,
                                              const Dataset& data, double eps, const AblationGrid& grid,
                                              const EvalOptions& opt = {}) {
  std::vector<AblationRow> rows;
  std::vector<double> etas = grid.step_sizes;
  for (double e : grid.count_step_sizes) {
    if (std::find(etas.begin(), etas.end(), e) == etas.end()) etas.push_back(e);
  }
  std::size_t max_steps = grid.max_steps;
  for (auto s : grid.step_counts) max_steps = std::max(max_steps, s);

  for (const auto& [id, model] : models) {
    std::map<double, EvalReport> runs;
    for (double eta : etas) {
      AttackSpec spec = attack_preset("tanh", eps);
      spec.tanh.step_size = eta;
      spec.tanh.steps = max_steps;
      spec.tanh.early_stop = true;
      runs.emplace(eta, robust_accuracy(*model, data, spec, opt));
    }
    auto acc_at = [&](const EvalReport& r, std::size_t k) {
      std::size_t ok = 0;
      for (const auto& e : r.examples) {
        ok += e.clean_correct && (e.first_success_step == 0 || e.first_success_step > k);
      }
      return 100.0 * double(ok) / double(std::max<std::size_t>(1, r.examples.size()));
    };
    for (double eta : grid.step_sizes) rows.push_back({id, "step_size", eta, grid.max_steps, acc_at(runs.at(eta), grid.max_steps)});
    for (double eta : grid.count_step_sizes) {
      for (auto k : grid.step_counts) rows.push_back({id, "steps", eta, k, acc_at(runs.at(eta), k)});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// 1-D toy demo

/// Two-class 1-D data: class 0 ~ N(0.5 - gap/2, sd), class 1 ~ N(0.5 + gap/2, sd),
/// clipped to [0,1]. Symmetric about 0.5, which is the Bayes boundary.
inline Dataset toy_data_1d(std::size_t n_per_class, double gap, double sd, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x;
  std::vector<std::size_t> y;
  for (std::size_t i = 0; i < n_per_class; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      const double mu = 0.5 + (c == 0 ? -0.5 : 0.5) * gap;
      x.push_back(std::clamp(mu + sd * rng.normal(), 0.0, 1.0));
      y.push_back(c);
    }
  }
  return Dataset(1, 2, std::move(x), std::move(y), "toy1d", "train");
}

struct ToyCurve {
  std::string model_id;
  std::vector<double> xs;
  std::vector<double> z_correct;  // logit of class 0
  std::vector<double> z_other;    // logit of class 1
  std::vector<double> crossings;  // abscissae where the two logits meet
  double logit_min = 0.0;
  double logit_max = 0.0;
};

/// Samples both logits of a scalar-input two-class model on [lo, hi] and locates
/// every sign change of z_0 - z_1 by bisection.
inline ToyCurve toy_curve(const Model& model, const std::string& id, double lo = 0.0, double hi = 1.0,
                          std::size_t samples = 200, double tol = 1e-6) {
  if (model.input_dim() != 1 || model.num_classes() != 2) {
    throw ShapeError("toy demo needs a 1-input, 2-class model");
  }
  auto logits = [&](double v) { return forward(model, Tensor::vector({v})); };
  auto gap = [&](double v) {
    const auto z = logits(v);
    return z[0] - z[1];
  };
  ToyCurve c;
  c.model_id = id;
  c.logit_min = std::numeric_limits<double>::infinity();
  c.logit_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < samples; ++i) {
    const double v = samples == 1 ? lo : lo + (hi - lo) * double(i) / double(samples - 1);
    const auto z = logits(v);
    c.xs.push_back(v);
    c.z_correct.push_back(z[0]);
    c.z_other.push_back(z[1]);
    c.logit_min = std::min({c.logit_min, z[0], z[1]});
    c.logit_max = std::max({c.logit_max, z[0], z[1]});
  }
  for (std::size_t i = 0; i + 1 < c.xs.size(); ++i) {
    double a = c.xs[i], b = c.xs[i + 1];
    double ga = c.z_correct[i] - c.z_other[i];
    const double gb = c.z_correct[i + 1] - c.z_other[i + 1];
    if (ga == 0.0) {
      c.crossings.push_back(a);
      continue;
    }
    if ((ga > 0.0) == (gb > 0.0) || gb == 0.0) continue;
    double mid = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
      mid = 0.5 * (a + b);
      const double gm = gap(mid);
      if (std::abs(gm) <= tol * 1e-3 || b - a < 1e-15) break;
      if ((gm > 0.0) == (ga > 0.0)) {
        a = mid;
        ga = gm;
      } else {
        b = mid;
      }
    }
    c.crossings.push_back(mid);
  }
  if (!c.xs.empty() && c.z_correct.back() == c.z_other.back()) c.crossings.push_back(c.xs.back());
  return c;
}

struct ToyDemo {
  ToyCurve hard;
  ToyCurve smoothed;
};

inline ToyDemo toy_demo_1d(const Model& hard, const Model& smoothed, double lo = 0.0, double hi = 1.0,
                           std::size_t samples = 200) {
  return {toy_curve(hard, "hard", lo, hi, samples), toy_curve(smoothed, "smoothed", lo, hi, samples)};
}

// ---------------------------------------------------------------------------
// Ground-truth certifier for tiny models

struct OracleResult {
  bool adversarial_exists = false;
  bool exact = false;     // true for linear models; grid search otherwise
  std::size_t resolution = 0;
  Tensor witness;         // a feasible misclassified point when one was found
};

namespace detail {

inline bool beats(std::span<const double> z, std::size_t t) { return argmax(z) != t; }

}  // namespace detail

/// Decides whether some x' in B_eps^inf(x) intersected with [0,1]^n is misclassified.
///
/// Linear models are decided exactly: for each wrong class j the maximum of
/// z_j - z_t over the box-clipped ball is attained at the corner that picks
/// the upper or lower bound per coordinate by the sign of (w_j - w_t). Other
/// models with input dimension <= 12 get a dense grid search at `resolution`
/// points per axis; a negative answer then only means "none found at that
/// resolution". Larger nonlinear inputs are refused.
inline OracleResult exhaustive_oracle(const Model& model, const Tensor& x, std::size_t t, double eps,
                                      std::size_t resolution = 5, std::size_t max_points = 50'000'000) {
  const std::size_t n = x.size();
  if (n != model.input_dim()) throw ShapeError("oracle: input does not match model");
  detail::check_class(t, model.num_classes());
  const auto b = pixel_bounds(x, eps);
  OracleResult res;
  if (model.is_linear()) {
    res.exact = true;
    const auto& l = model.layers().front();
    for (std::size_t j = 0; j < model.num_classes(); ++j) {
      if (j == t) continue;
      Tensor corner(x.shape());
      for (std::size_t i = 0; i < n; ++i) {
        const double d = l.weight[j * n + i] - l.weight[t * n + i];
        corner[i] = d > 0.0 ? b.hi[i] : b.lo[i];
      }
      if (detail::beats(forward(model, corner).values(), t)) {
        res.adversarial_exists = true;
        res.witness = corner;
        return res;
      }
    }
    return res;
  }
  if (n > 12) throw ParameterError("oracle: nonlinear models limited to input dimension <= 12");
  if (resolution < 2) throw ParameterError("oracle: resolution must be >= 2");
  double total = std::pow(double(resolution), double(n));
  if (total > double(max_points)) throw ParameterError("oracle: grid too large");
  res.resolution = resolution;
  std::vector<std::size_t> digit(n, 0);
  Tensor p(x.shape());
  for (std::size_t count = 0; count < std::size_t(total); ++count) {
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * double(digit[i]) / double(resolution - 1);
    }
    if (detail::beats(forward(model, p).values(), t)) {
      res.adversarial_exists = true;
      res.witness = p;
      return res;
    }
    for (std::size_t i = 0; i < n && ++digit[i] == resolution; ++i) digit[i] = 0;
  }
  return res;
}

/// Corner enumeration over all 2^n vertices of the box-clipped ball (n <= 20).
/// Exact for linear models; used to cross-check the closed form.
inline OracleResult corner_oracle(const Model& model, const Tensor& x, std::size_t t, double eps) {
  const std::size_t n = x.size();
  if (n > 20) throw ParameterError("corner_oracle: dimension too large");
  const auto b = pixel_bounds(x, eps);
  OracleResult res;
  res.exact = model.is_linear();
  Tensor p(x.shape());
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    for (std::size_t i = 0; i < n; ++i) p[i] = (mask >> i) & 1 ? b.hi[i] : b.lo[i];
    if (detail::beats(forward(model, p).values(), t)) {
      res.adversarial_exists = true;
      res.witness = p;
      return res;
    }
  }
  return res;
}

}  // namespace smoothrob

// smoothrob: train / attack / eval / transfer / sweep / analyze.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error, 3 attack invariant breach.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "smoothrob/smoothrob.hpp"

namespace fs = std::filesystem;
using namespace smoothrob;

namespace {

struct Options {
  // output and global
  std::string out;
  std::string name;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  // data
  std::string data = "mnist";
  std::string data_dir = "data/mnist";
  std::size_t train_size = 0;  // 0 = all
  std::size_t eval_size = 1000;
  std::uint64_t subset_seed = 0;
  std::size_t blob_classes = 10;
  std::size_t blob_dim = 10;
  double blob_separation = 10.0;
  std::size_t blob_train_per_class = 500;
  std::size_t blob_test_per_class = 100;
  std::uint64_t blob_seed = 1;

  // model and training
  std::string hidden = "256,256";
  std::string init = "glorot_uniform";
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  double lr = 0.05;
  double momentum = 0.9;
  std::string mode;  // hard | smoothed | adversarial; empty = infer from alpha
  double alpha = 0.0;
  double adv_eps = 0.3;
  std::size_t adv_steps = 7;
  double adv_step_size = -1.0;  // negative: adv_eps / 4

  // attack
  std::string attack = "pgd20";
  double eps = 0.3;
  std::optional<std::size_t> steps;
  std::optional<double> step_size;
  std::optional<std::size_t> restarts;
  std::optional<std::string> init_kind;
  std::optional<std::string> loss;
  std::optional<double> cw_c;
  std::optional<double> cw_kappa;
  std::optional<double> cw_lr;

  // subcommand inputs
  std::string model;
  std::string source;
  std::string target;
  std::string alphas = "0.0:0.9:0.1";
  std::size_t index = 0;
  std::vector<std::string> models;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::size_t> parse_widths(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoul(tok));
    } catch (const std::exception&) {
      throw UsageError("bad layer width '" + tok + "'");
    }
  }
  return out;
}

/// "a:b:step" (inclusive, rounded to the step) or "a,b,c".
std::vector<double> parse_alphas(const std::string& s) {
  std::vector<double> out;
  try {
    if (s.find(':') != std::string::npos) {
      std::stringstream ss(s);
      std::string a, b, st;
      std::getline(ss, a, ':');
      std::getline(ss, b, ':');
      std::getline(ss, st, ':');
      const double lo = std::stod(a), hi = std::stod(b), step = std::stod(st);
      if (!(step > 0.0) || hi < lo) throw UsageError("bad alpha range '" + s + "'");
      const auto n = std::size_t(std::floor((hi - lo) / step + 1e-9)) + 1;
      for (std::size_t i = 0; i < n; ++i) out.push_back(std::round((lo + double(i) * step) * 1e12) / 1e12);
    } else {
      std::stringstream ss(s);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    }
  } catch (const std::invalid_argument&) {
    throw UsageError("bad alpha list '" + s + "'");
  }
  for (double a : out) {
    if (!(a >= 0.0 && a <= 1.0)) throw UsageError("alpha values must lie in [0, 1]");
  }
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

struct DataPair {
  Dataset train, test;
  std::vector<fs::path> files;
};

DataPair load_data(const Options& o) {
  DataPair d;
  if (o.data == "mnist") {
    const fs::path dir(o.data_dir);
    const auto f = [&](const char* n) { return dir / n; };
    d.files = {f("train-images-idx3-ubyte.gz"), f("train-labels-idx1-ubyte.gz"), f("t10k-images-idx3-ubyte.gz"),
               f("t10k-labels-idx1-ubyte.gz")};
    d.train = load_idx(d.files[0], d.files[1], "mnist", "train");
    d.test = load_idx(d.files[2], d.files[3], "mnist", "test");
  } else if (o.data == "blobs") {
    d.train = synth_blobs(o.blob_classes, o.blob_train_per_class, o.blob_dim, o.blob_separation, o.blob_seed, "train");
    d.test = synth_blobs(o.blob_classes, o.blob_test_per_class, o.blob_dim, o.blob_separation, o.blob_seed + 1, "test");
  } else {
    throw UsageError("unknown dataset '" + o.data + "' (mnist | blobs)");
  }
  if (o.train_size > 0) d.train = d.train.slice(0, o.train_size);
  d.test = eval_subset(d.test, o.eval_size, o.subset_seed);
  return d;
}

std::map<std::string, std::string> data_config(const Options& o) {
  std::map<std::string, std::string> m{{"data", o.data}, {"eval_size", std::to_string(o.eval_size)},
                                       {"subset_seed", std::to_string(o.subset_seed)},
                                       {"train_size", std::to_string(o.train_size)}};
  if (o.data == "mnist") {
    m["data_dir"] = o.data_dir;
  } else {
    m["blob_classes"] = std::to_string(o.blob_classes);
    m["blob_dim"] = std::to_string(o.blob_dim);
    m["blob_separation"] = num(o.blob_separation);
    m["blob_train_per_class"] = std::to_string(o.blob_train_per_class);
    m["blob_test_per_class"] = std::to_string(o.blob_test_per_class);
    m["blob_seed"] = std::to_string(o.blob_seed);
  }
  return m;
}

TrainConfig train_config(const Options& o) {
  TrainConfig c;
  c.epochs = o.epochs;
  c.batch_size = o.batch_size;
  c.learning_rate = o.lr;
  c.momentum = o.momentum;
  c.seed = o.seed;
  c.alpha = o.alpha;
  if (o.mode.empty()) {
    c.label_mode = o.alpha > 0.0 ? LabelMode::smoothed : LabelMode::hard;
  } else {
    c.label_mode = label_mode_from_string(o.mode);
  }
  c.adv_eps = o.adv_eps;
  c.adv_steps = o.adv_steps;
  c.adv_step_size = o.adv_step_size > 0.0 ? o.adv_step_size : o.adv_eps / 4.0;
  c.validate();
  return c;
}

std::map<std::string, std::string> train_meta(const TrainConfig& c, const Options& o) {
  auto m = data_config(o);
  m["label_mode"] = to_string(c.label_mode);
  m["alpha"] = num(c.effective_alpha());
  m["epochs"] = std::to_string(c.epochs);
  m["batch_size"] = std::to_string(c.batch_size);
  m["learning_rate"] = num(c.learning_rate);
  m["momentum"] = num(c.momentum);
  m["seed"] = std::to_string(c.seed);
  m["init"] = o.init;
  m["hidden"] = o.hidden;
  if (c.label_mode == LabelMode::adversarial) {
    m["adv_eps"] = num(c.adv_eps);
    m["adv_steps"] = std::to_string(c.adv_steps);
    m["adv_step_size"] = num(c.adv_step_size);
  }
  return m;
}

InitKind init_kind_from_string(const std::string& s) {
  if (s == "original") return InitKind::original;
  if (s == "random") return InitKind::random_in_ball;
  if (s == "odi") return InitKind::odi;
  if (s == "zero") return InitKind::zero_image;
  throw UsageError("unknown --init '" + s + "' (original | random | odi | zero)");
}

AttackLoss loss_from_string(const std::string& s) {
  if (s == "ce") return AttackLoss::cross_entropy;
  if (s == "margin") return AttackLoss::margin;
  if (s == "targeted-margin") return AttackLoss::targeted_margin;
  throw UsageError("unknown --loss '" + s + "' (ce | margin | targeted-margin)");
}

AttackSpec attack_spec(const Options& o) {
  AttackSpec s = attack_preset(o.attack, o.eps, o.seed);
  if (s.kind == AttackKind::cw_l2) {
    if (o.steps) s.cw.steps = *o.steps;
    if (o.cw_lr) s.cw.learning_rate = *o.cw_lr;
    if (o.step_size) s.cw.learning_rate = *o.step_size;
    if (o.cw_c) s.cw.c = *o.cw_c;
    if (o.cw_kappa) s.cw.kappa = *o.cw_kappa;
    if (o.init_kind) s.cw.start = *o.init_kind == "zero" ? CWStart::zero_image : CWStart::original;
    s.cw.validate();
    return s;
  }
  if (s.kind == AttackKind::tanh_linf) {
    if (o.steps) s.tanh.steps = *o.steps;
    if (o.step_size) s.tanh.step_size = *o.step_size;
    return s;
  }
  if (o.steps) {
    s.pgd.steps = *o.steps;
    // PGD^k convention: step size 2 eps / k unless given explicitly
    if (s.pgd.step_size_mode == StepSizeMode::fixed && o.eps > 0.0) s.pgd.step_size = 2.0 * o.eps / double(*o.steps);
  }
  if (o.step_size) s.pgd.step_size = *o.step_size;
  if (o.restarts) s.pgd.restarts = *o.restarts;
  if (o.init_kind) s.pgd.init = init_kind_from_string(*o.init_kind);
  if (o.loss) s.pgd.loss = loss_from_string(*o.loss);
  if (s.kind == AttackKind::fgsm && (o.steps || o.restarts || o.init_kind || o.loss)) s.kind = AttackKind::pgd;
  s.pgd.validate();
  return s;
}

Checkpoint load_model(const std::string& path) {
  if (path.empty()) throw UsageError("a model checkpoint is required");
  if (!fs::exists(path)) throw Error("checkpoint not found: " + path);
  return load_checkpoint(path);
}

/// Data options recorded in a checkpoint fill in anything not given on the command line.
Options with_checkpoint_data(Options o, const CheckpointMeta& meta, const CLI::App& app) {
  auto take = [&](const char* key, const char* flag, auto& field) {
    auto it = meta.find(key);
    if (it == meta.end() || app.count(flag) > 0) return;
    std::istringstream is(it->second);
    is >> field;
  };
  take("data", "--data", o.data);
  take("data_dir", "--data-dir", o.data_dir);
  take("blob_classes", "--blob-classes", o.blob_classes);
  take("blob_dim", "--blob-dim", o.blob_dim);
  take("blob_separation", "--blob-separation", o.blob_separation);
  take("blob_train_per_class", "--blob-train-per-class", o.blob_train_per_class);
  take("blob_test_per_class", "--blob-test-per-class", o.blob_test_per_class);
  take("blob_seed", "--blob-seed", o.blob_seed);
  return o;
}

fs::path output_dir(const Options& o) {
  fs::path dir = o.out;
  if (dir.empty()) {
    const char* env = std::getenv("SMOOTHROB_OUT");
    dir = (env != nullptr && *env != '\0') ? env : "runs";
  }
  fs::create_directories(dir);
  return dir;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

report::Manifest manifest_for(const std::string& command, int argc, char** argv, const Options& o) {
  report::Manifest m;
  m.command = command;
  for (int i = 0; i < argc; ++i) m.argv.emplace_back(argv[i]);
  m.config = data_config(o);
  m.config["seed"] = std::to_string(o.seed);
  m.config["workers"] = std::to_string(o.workers);
  return m;
}

void print_summary(const EvalReport& r) {
  std::cout << "model\tattack\teps\tnatural_accuracy\trobust_accuracy\n"
            << r.model_id << '\t' << r.attack << '\t' << r.eps << '\t' << r.natural_accuracy << '\t'
            << r.robust_accuracy << '\n';
}

int cmd_train(const Options& o, report::Manifest& man) {
  const auto data = load_data(o);
  for (const auto& f : data.files) man.add_input(f);
  const auto cfg = train_config(o);
  auto widths = parse_widths(o.hidden);
  widths.insert(widths.begin(), data.train.dim());
  widths.push_back(data.train.num_classes());
  const auto res = train(make_model(widths, init_scheme_from_string(o.init), o.seed), data.train, cfg, &data.test);
  auto meta = train_meta(cfg, o);
  meta["test_accuracy"] = num(res.log.back().test_acc);
  man.config.insert(meta.begin(), meta.end());

  const auto dir = output_dir(o);
  const std::string name = o.name.empty() ? std::string(to_string(cfg.label_mode)) : o.name;
  man.stem = name;
  save_checkpoint(res.model, meta, dir / (name + ".ckpt"));
  std::ofstream(dir / (name + ".log")) << format_log(res.log);
  man.outputs = {(dir / (name + ".ckpt")).string(), (dir / (name + ".log")).string()};
  std::cout << format_log({res.log.back()});
  return 0;
}

int cmd_eval(const Options& base, const CLI::App& app, report::Manifest& man) {
  const auto ck = load_model(base.model);
  const Options o = with_checkpoint_data(base, ck.meta, app);
  man.config = data_config(o);
  man.add_input(o.model);
  const auto data = load_data(o);
  for (const auto& f : data.files) man.add_input(f);
  const auto spec = attack_spec(o);
  for (const auto& [k, v] : spec.describe()) man.config["attack." + k] = v;
  EvalOptions opt;
  opt.workers = o.workers;
  opt.model_id = stem_of(o.model);
  opt.model_meta = ck.meta;
  const auto rep = robust_accuracy(ck.model, data.test, spec, opt);
  const auto dir = output_dir(o);
  const auto stem = dir / (o.name.empty() ? opt.model_id + "." + spec.name : o.name);
  man.stem = stem.filename().string();
  report::write_eval(rep, stem);
  man.outputs = {stem.string() + ".examples.tsv", stem.string() + ".summary.tsv", stem.string() + ".json"};
  print_summary(rep);
  return 0;
}

int cmd_attack(const Options& base, const CLI::App& app, report::Manifest& man) {
  const auto ck = load_model(base.model);
  const Options o = with_checkpoint_data(base, ck.meta, app);
  man.config = data_config(o);
  man.add_input(o.model);
  const auto data = load_data(o);
  if (o.index >= data.test.size()) throw UsageError("--index out of range");
  const auto spec = attack_spec(o);
  for (const auto& [k, v] : spec.describe()) man.config["attack." + k] = v;
  man.config["index"] = std::to_string(o.index);
  const auto x = data.test.input(o.index);
  const std::size_t t = data.test.label(o.index);
  const auto out = run_attack(spec, ck.model, x, t, derive_seed(o.seed, o.index));
  check_feasibility(spec, out, x, o.index);
  report::json j;
  j["schema"] = report::kSchemaVersion;
  j["kind"] = "attack";
  j["index"] = o.index;
  j["label"] = t;
  j["attack_config"] = spec.describe();
  j["success"] = out.success;
  j["within_budget"] = out.within_budget;
  j["norm"] = out.norm;
  j["best_loss"] = out.best_loss;
  j["first_success_step"] = out.first_success_step;
  j["zero_gradient"] = out.diagnostics.zero_gradient;
  j["prediction"] = argmax(forward(ck.model, out.x_adv).values());
  j["x_orig"] = std::vector<double>(x.values().begin(), x.values().end());
  j["x_adv"] = std::vector<double>(out.x_adv.values().begin(), out.x_adv.values().end());
  j["loss_trace"] = out.loss_trace;
  const auto dir = output_dir(o);
  const auto path = dir / ((o.name.empty() ? stem_of(o.model) + "." + spec.name + "." + std::to_string(o.index) : o.name) + ".json");
  report::write_json(j, path);
  man.stem = path.stem().string();
  man.outputs = {path.string()};
  std::cout << "success=" << out.success << " norm=" << out.norm << " prediction=" << j["prediction"] << '\n';
  return 0;
}

int cmd_transfer(const Options& base, const CLI::App& app, report::Manifest& man) {
  const auto src = load_model(base.source);
  const auto tgt = load_model(base.target);
  const Options o = with_checkpoint_data(base, tgt.meta, app);
  man.config = data_config(o);
  man.add_input(o.source);
  man.add_input(o.target);
  const auto data = load_data(o);
  const auto spec = attack_spec(o);
  for (const auto& [k, v] : spec.describe()) man.config["attack." + k] = v;
  EvalOptions opt;
  opt.workers = o.workers;
  const auto rep = transfer_eval(src.model, tgt.model, data.test, spec, opt, stem_of(o.source), stem_of(o.target));
  const auto dir = output_dir(o);
  const auto stem = dir / (o.name.empty() ? rep.source_id + "-to-" + rep.target_id + "." + spec.name : o.name);
  man.stem = stem.filename().string();
  report::write_transfer(rep, stem);
  man.outputs = {stem.string() + ".summary.tsv", stem.string() + ".json"};
  std::cout << "source\ttarget\tattack\ttarget_clean_accuracy\ttransfer_accuracy\n"
            << rep.source_id << '\t' << rep.target_id << '\t' << rep.attack << '\t' << rep.target_clean_accuracy
            << '\t' << rep.accuracy << '\n';
  return 0;
}

int cmd_sweep(const Options& o, report::Manifest& man) {
  const auto alphas = parse_alphas(o.alphas);
  const auto data = load_data(o);
  for (const auto& f : data.files) man.add_input(f);
  auto cfg = train_config(o);
  const auto meta = train_meta(cfg, o);
  man.config.insert(meta.begin(), meta.end());
  man.config["alphas"] = o.alphas;
  const auto spec = attack_spec(o);
  for (const auto& [k, v] : spec.describe()) man.config["attack." + k] = v;
  auto widths = parse_widths(o.hidden);
  widths.insert(widths.begin(), data.train.dim());
  widths.push_back(data.train.num_classes());
  EvalOptions opt;
  opt.workers = o.workers;
  const auto rows = alpha_sweep(alphas, data.train, data.test, widths, cfg, spec, opt, init_scheme_from_string(o.init));
  const auto dir = output_dir(o);
  const auto stem = dir / (o.name.empty() ? "alpha_sweep" : o.name);
  man.stem = stem.filename().string();
  report::write_sweep(rows, stem);
  man.outputs = {stem.string() + ".tsv", stem.string() + ".json"};
  std::cout << "alpha\tnatural_accuracy\trobust_accuracy\n";
  for (const auto& r : rows) std::cout << r.alpha << '\t' << r.natural_accuracy << '\t' << r.robust_accuracy << '\n';
  return 0;
}

int cmd_analyze(const Options& base, const CLI::App& app, report::Manifest& man) {
  const auto dir = output_dir(base);
  report::json j;
  j["schema"] = report::kSchemaVersion;
  j["kind"] = "analyze";
  j["models"] = report::json::array();
  for (const auto& path : base.models) {
    const auto ck = load_model(path);
    const Options o = with_checkpoint_data(base, ck.meta, app);
    man.add_input(path);
    const auto data = load_data(o);
    const auto st = logit_range_stats(ck.model, data.test);
    report::json m;
    m["model"] = stem_of(path);
    const double alpha = ck.meta.count("alpha") ? std::stod(ck.meta.at("alpha")) : 0.0;
    m["alpha"] = alpha;
    m["logit_min"] = st.min;
    m["logit_max"] = st.max;
    m["logit_p01"] = st.p01;
    m["logit_p99"] = st.p99;
    m["logit_width"] = st.width();
    m["mean_margin"] = st.mean_margin;
    m["mean_example_range"] = st.mean_example_range;
    if (alpha > 0.0) m["optimal_margin"] = optimal_margin(alpha, ck.model.num_classes());
    j["models"].push_back(m);
    std::cout << stem_of(path) << " alpha=" << alpha << " width=" << st.width() << " mean_margin=" << st.mean_margin;
    if (alpha > 0.0) std::cout << " optimal_margin=" << optimal_margin(alpha, ck.model.num_classes());
    std::cout << '\n';
  }

  // 1-D toy: hard and smoothed models on symmetric two-class data
  const auto toy = toy_data_1d(200, 0.4, 0.1, base.seed);
  TrainConfig c;
  c.epochs = 60;
  c.learning_rate = 0.1;
  c.seed = base.seed;
  const auto hard = train(Model::glorot_uniform({1, 16, 2}, base.seed), toy, c).model;
  c.label_mode = LabelMode::smoothed;
  c.alpha = base.alpha > 0.0 ? base.alpha : 0.9;
  const auto ls = train(Model::glorot_uniform({1, 16, 2}, base.seed), toy, c).model;
  const auto demo = toy_demo_1d(hard, ls);
  const auto stem = dir / (base.name.empty() ? "analyze" : base.name);
  man.stem = stem.filename().string();
  report::write_toy(demo, stem.string() + ".toy");
  j["toy"] = {{"alpha", c.alpha},
              {"hard_crossings", demo.hard.crossings},
              {"smoothed_crossings", demo.smoothed.crossings},
              {"hard_logit_range", {demo.hard.logit_min, demo.hard.logit_max}},
              {"smoothed_logit_range", {demo.smoothed.logit_min, demo.smoothed.logit_max}}};
  report::write_json(j, stem.string() + ".json");
  man.config["toy_alpha"] = num(c.alpha);
  man.outputs = {stem.string() + ".json", stem.string() + ".toy.curves.tsv", stem.string() + ".toy.crossings.tsv"};
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label-smoothing robustness toolkit"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  Options o;

  app.add_option("--out", o.out, "output directory (default: $SMOOTHROB_OUT or ./runs)");
  app.add_option("--name", o.name, "output file stem");
  app.add_option("--seed", o.seed, "global seed");
  app.add_option("--workers", o.workers, "parallel evaluation workers")->check(CLI::PositiveNumber);

  app.add_option("--data", o.data, "mnist | blobs");
  app.add_option("--data-dir", o.data_dir, "directory holding the IDX files");
  app.add_option("--train-size", o.train_size, "use the first N training examples (0 = all)");
  app.add_option("--eval-size", o.eval_size, "evaluation subset size");
  app.add_option("--subset-seed", o.subset_seed, "shuffle seed of the evaluation subset");
  app.add_option("--blob-classes", o.blob_classes);
  app.add_option("--blob-dim", o.blob_dim);
  app.add_option("--blob-separation", o.blob_separation);
  app.add_option("--blob-train-per-class", o.blob_train_per_class);
  app.add_option("--blob-test-per-class", o.blob_test_per_class);
  app.add_option("--blob-seed", o.blob_seed);

  app.add_option("--hidden", o.hidden, "hidden widths, comma separated");
  app.add_option("--init-scheme", o.init, "glorot_uniform | fan_in_uniform");
  app.add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  app.add_option("--batch-size", o.batch_size)->check(CLI::PositiveNumber);
  app.add_option("--lr", o.lr);
  app.add_option("--momentum", o.momentum);
  app.add_option("--mode", o.mode, "hard | smoothed | adversarial");
  app.add_option("--alpha", o.alpha, "label smoothing factor")->check(CLI::Range(0.0, 1.0));
  app.add_option("--adv-eps", o.adv_eps);
  app.add_option("--adv-steps", o.adv_steps);
  app.add_option("--adv-step-size", o.adv_step_size);

  app.add_option("--attack", o.attack, "fgsm | pgd10 | pgd20 | pgd40 | pgd-cw | mt | odi | apgd-ce | cw | cw-orig | tanh");
  app.add_option("--eps", o.eps, "perturbation budget")->check(CLI::NonNegativeNumber);
  app.add_option("--steps", o.steps);
  app.add_option("--step-size", o.step_size);
  app.add_option("--restarts", o.restarts);
  app.add_option("--init", o.init_kind, "original | random | odi | zero");
  app.add_option("--loss", o.loss, "ce | margin | targeted-margin");
  app.add_option("--cw-c", o.cw_c);
  app.add_option("--cw-kappa", o.cw_kappa);
  app.add_option("--cw-lr", o.cw_lr);

  auto* train_cmd = app.add_subcommand("train", "train a classifier and write a checkpoint");
  auto* attack_cmd = app.add_subcommand("attack", "attack one test example");
  attack_cmd->add_option("--model", o.model)->required();
  attack_cmd->add_option("--index", o.index);
  auto* eval_cmd = app.add_subcommand("eval", "robust accuracy of a checkpoint");
  eval_cmd->add_option("--model", o.model)->required();
  auto* transfer_cmd = app.add_subcommand("transfer", "craft on --source, score on --target");
  transfer_cmd->add_option("--source", o.source)->required();
  transfer_cmd->add_option("--target", o.target)->required();
  auto* sweep_cmd = app.add_subcommand("sweep", "train and evaluate one model per alpha");
  sweep_cmd->add_option("--alphas", o.alphas, "lo:hi:step or comma list");
  auto* analyze_cmd = app.add_subcommand("analyze", "logit statistics and the 1-D toy demo");
  analyze_cmd->add_option("--models", o.models, "checkpoints to analyze");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    auto man = manifest_for(command, argc, argv, o);
    int rc = 0;
    if (train_cmd->parsed()) rc = cmd_train(o, man);
    if (attack_cmd->parsed()) rc = cmd_attack(o, app, man);
    if (eval_cmd->parsed()) rc = cmd_eval(o, app, man);
    if (transfer_cmd->parsed()) rc = cmd_transfer(o, app, man);
    if (sweep_cmd->parsed()) rc = cmd_sweep(o, man);
    if (analyze_cmd->parsed()) rc = cmd_analyze(o, app, man);
    man.write(output_dir(o));
    return rc;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ParameterError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const InvariantError& e) {
    std::cerr << "invariant breach: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

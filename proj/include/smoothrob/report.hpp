#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "smoothrob/binary_io.hpp"
#include "smoothrob/eval.hpp"

namespace smoothrob::report {

using json = nlohmann::ordered_json;

/// Bumped whenever a column is added, removed or reinterpreted.
inline constexpr int kSchemaVersion = 1;

namespace detail {

inline std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  io::Writer w;
  w.bytes(text.data(), text.size());
  w.save(path);
}

/// TSV with a schema line, a header row and one line per row.
inline std::string tsv(const std::string& kind, const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  os << "# smoothrob " << kind << " schema=" << kSchemaVersion << "\n";
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "\t" : "") << header[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "\t" : "") << r[i];
    os << "\n";
  }
  return os.str();
}

}  // namespace detail

inline std::string file_crc32(const std::filesystem::path& path) {
  auto r = io::Reader::open(path, path.string());
  std::vector<std::uint8_t> bytes(r.remaining());
  r.bytes(bytes.data(), bytes.size());
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << io::crc32(bytes.data(), bytes.size());
  return os.str();
}

inline json to_json(const EvalReport& r) {
  json j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "eval";
  j["model_id"] = r.model_id;
  j["model_meta"] = r.model_meta;
  j["attack"] = r.attack;
  j["attack_config"] = r.attack_config;
  j["eps"] = r.eps;
  j["seed"] = r.seed;
  j["count"] = r.examples.size();
  j["natural_accuracy"] = r.natural_accuracy;
  j["robust_accuracy"] = r.robust_accuracy;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

/// Writes <stem>.examples.tsv, <stem>.summary.tsv and <stem>.json.
inline void write_eval(const EvalReport& r, const std::filesystem::path& stem) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& e : r.examples) {
    rows.push_back({std::to_string(e.index), std::to_string(e.label), std::to_string(int(e.clean_correct)),
                    std::to_string(int(e.robust)), std::to_string(int(e.success)), detail::num(e.norm),
                    detail::num(e.loss), std::to_string(e.restarts_used), std::to_string(e.first_success_step),
                    std::to_string(int(e.zero_gradient))});
  }
  detail::write_text(stem.string() + ".examples.tsv",
                     detail::tsv("examples", {"index", "label", "clean_correct", "robust", "success", "norm", "loss",
                                              "restarts_used", "first_success_step", "zero_gradient"},
                                 rows));
  detail::write_text(stem.string() + ".summary.tsv",
                     detail::tsv("summary", {"model", "attack", "eps", "seed", "count", "natural_accuracy",
                                             "robust_accuracy", "wall_seconds"},
                                 {{r.model_id, r.attack, detail::num(r.eps), std::to_string(r.seed),
                                   std::to_string(r.examples.size()), detail::num(r.natural_accuracy),
                                   detail::num(r.robust_accuracy), detail::num(r.wall_seconds)}}));
  detail::write_text(stem.string() + ".json", to_json(r).dump(2) + "\n");
}

inline void write_transfer(const TransferReport& r, const std::filesystem::path& stem) {
  detail::write_text(stem.string() + ".summary.tsv",
                     detail::tsv("transfer", {"source", "target", "attack", "eps", "count", "target_clean_accuracy",
                                              "transfer_accuracy"},
                                 {{r.source_id, r.target_id, r.attack, detail::num(r.eps), std::to_string(r.count),
                                   detail::num(r.target_clean_accuracy), detail::num(r.accuracy)}}));
  json j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "transfer";
  j["source"] = r.source_id;
  j["target"] = r.target_id;
  j["attack"] = r.attack;
  j["eps"] = r.eps;
  j["count"] = r.count;
  j["target_clean_accuracy"] = r.target_clean_accuracy;
  j["transfer_accuracy"] = r.accuracy;
  detail::write_text(stem.string() + ".json", j.dump(2) + "\n");
}

inline void write_sweep(const std::vector<SweepRow>& rows, const std::filesystem::path& stem) {
  std::vector<std::vector<std::string>> out;
  json j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "alpha_sweep";
  j["rows"] = json::array();
  for (const auto& r : rows) {
    out.push_back({detail::num(r.alpha), detail::num(r.natural_accuracy), detail::num(r.robust_accuracy)});
    j["rows"].push_back({{"alpha", r.alpha}, {"natural_accuracy", r.natural_accuracy}, {"robust_accuracy", r.robust_accuracy}});
  }
  detail::write_text(stem.string() + ".tsv", detail::tsv("alpha_sweep", {"alpha", "natural_accuracy", "robust_accuracy"}, out));
  detail::write_text(stem.string() + ".json", j.dump(2) + "\n");
}

inline void write_ablation(const std::vector<AblationRow>& rows, const std::filesystem::path& stem) {
  std::vector<std::vector<std::string>> out;
  for (const auto& r : rows) {
    out.push_back({r.model_id, r.axis, detail::num(r.step_size), std::to_string(r.steps), detail::num(r.accuracy)});
  }
  detail::write_text(stem.string() + ".tsv",
                     detail::tsv("step_ablation", {"model", "axis", "step_size", "steps", "accuracy"}, out));
}

inline void write_toy(const ToyDemo& demo, const std::filesystem::path& stem) {
  std::vector<std::vector<std::string>> curve, cross;
  for (const auto* c : {&demo.hard, &demo.smoothed}) {
    for (std::size_t i = 0; i < c->xs.size(); ++i) {
      curve.push_back({c->model_id, detail::num(c->xs[i]), detail::num(c->z_correct[i]), detail::num(c->z_other[i])});
    }
    for (double x : c->crossings) cross.push_back({c->model_id, detail::num(x)});
  }
  detail::write_text(stem.string() + ".curves.tsv", detail::tsv("toy_curves", {"model", "x", "z0", "z1"}, curve));
  detail::write_text(stem.string() + ".crossings.tsv", detail::tsv("toy_crossings", {"model", "x"}, cross));
}

inline void write_json(const json& j, const std::filesystem::path& path) { detail::write_text(path, j.dump(2) + "\n"); }

/// Run manifest: command line, fully resolved configuration and input hashes.
struct Manifest {
  std::string command;
  std::vector<std::string> argv;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> inputs;   // path -> crc32
  std::vector<std::string> outputs;
  std::string stem;  // names the manifest file; empty falls back to the command

  void add_input(const std::filesystem::path& p) { inputs[p.string()] = file_crc32(p); }

  json to_json() const {
    json j;
    j["schema"] = kSchemaVersion;
    j["command"] = command;
    j["argv"] = argv;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    return j;
  }

  /// Writes `<dir>/<stem>.<command>.manifest.json`, or `<dir>/<command>.manifest.json` for an empty stem.
  std::filesystem::path write(const std::filesystem::path& dir) const {
    const auto path = dir / ((stem.empty() ? command : stem + "." + command) + ".manifest.json");
    write_json(to_json(), path);
    return path;
  }
};

}  // namespace smoothrob::report

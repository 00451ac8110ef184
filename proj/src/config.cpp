// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0

#include "skewgrad/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace skewgrad {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Enum names

const char* selection_mode_name(SelectionMode m) {
  switch (m) {
    case SelectionMode::SmDsb: return "sm-dsb";
    case SelectionMode::All: return "all";
    case SelectionMode::RandomFreeze: return "random-freeze";
    case SelectionMode::None: return "none";
  }
  return "unknown";
}

SelectionMode parse_selection_mode(const std::string& s) {
  if (s == "sm-dsb" || s == "smdsb" || s == "sm_dsb") return SelectionMode::SmDsb;
  if (s == "all") return SelectionMode::All;
  if (s == "random-freeze" || s == "random_freeze") return SelectionMode::RandomFreeze;
  if (s == "none") return SelectionMode::None;
  throw ConfigError("selection_mode", "unknown mode '" + s + "' (sm-dsb, all, random-freeze, none)");
}

const char* optimizer_name(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "adam") return OptimizerKind::Adam;
  throw ConfigError("optimizer", "unknown optimizer '" + s + "' (sgd, adam)");
}

// ---------------------------------------------------------------------------
// Validation

void TrainConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("alpha", "must be > 0");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta", "must be in (0, 1]");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be > 0");
  if (batch_size < 2) throw ConfigError("batch_size", "must be >= 2");
  if (!(perturb_sigma >= 0.0)) throw ConfigError("perturb_sigma", "must be >= 0");
  if (!std::isfinite(perturb_mu)) throw ConfigError("perturb_mu", "must be finite");
  if (!(freeze_fraction >= 0.0 && freeze_fraction <= 1.0)) throw ConfigError("freeze_fraction", "must be in [0, 1]");
  if (!(loss_weights.cls >= 0.0 && loss_weights.ssl_source >= 0.0 && loss_weights.ssl_target >= 0.0)) {
    throw ConfigError("loss_weights", "must be >= 0");
  }
  if (!(pseudo_label_threshold >= 0.0 && pseudo_label_threshold <= 1.0)) {
    throw ConfigError("pseudo_label_threshold", "must be in [0, 1]");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1", "must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2", "must be in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps", "must be > 0");
  if (model.hidden == 0) throw ConfigError("hidden", "must be > 0");
  if (model.feature == 0) throw ConfigError("feature", "must be > 0");
  if (model.classes < 2) throw ConfigError("classes", "must be >= 2");
  if (model.rotations != kRotationClasses) throw ConfigError("rotations", "must be 4");
}

ShiftConfig BenchmarkConfig::default_target_shift() {
  ShiftConfig s;
  s.jitter_sigma = 0.03;
  s.drop_fraction = 0.3;
  s.occlusion = std::make_pair(std::array<Real, 3>{0.0, 0.0, 1.0}, 0.2);
  s.scale = 1.0;
  return s;
}

void BenchmarkConfig::validate() const {
  if (class_count < 4 || class_count > kPrimitiveCount) {
    throw ConfigError("class_count", "must be in [4, " + std::to_string(kPrimitiveCount) + "]");
  }
  if (points < kMinPoints) throw ConfigError("points", "must be >= " + std::to_string(kMinPoints));
  if (n_per_class_source == 0) throw ConfigError("n_per_class_source", "must be > 0");
  if (n_per_class_target == 0) throw ConfigError("n_per_class_target", "must be > 0");
  try {
    shift.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("shift", e.what());
  }
}

void ExperimentConfig::validate() const {
  train.validate();
  benchmark.validate();
  if (train.model.classes != benchmark.class_count) {
    throw ConfigError("classes", "model classes must equal class_count");
  }
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
  for (Real b : beta_grid) {
    if (!(b > 0.0 && b <= 1.0)) throw ConfigError("beta_grid", "values must be in (0, 1]");
  }
  for (Real a : alpha_grid) {
    if (!(a > 0.0)) throw ConfigError("alpha_grid", "values must be > 0");
  }
  if (seeds.empty()) throw ConfigError("seeds", "must not be empty");
  const std::size_t smallest = std::min(benchmark.n_per_class_source, benchmark.n_per_class_target) *
                               static_cast<std::size_t>(benchmark.class_count);
  if (train.batch_size > smallest) {
    throw ConfigError("batch_size", "exceeds the smallest domain size (" + std::to_string(smallest) + ")");
  }
}

// ---------------------------------------------------------------------------
// JSON

json to_json(const TrainConfig& c) {
  return json{{"alpha", c.alpha},
              {"beta", c.beta},
              {"learning_rate", c.learning_rate},
              {"batch_size", c.batch_size},
              {"steps_stage1", c.steps_stage1},
              {"steps_stage2", c.steps_stage2},
              {"seed", c.seed},
              {"perturb_mu", c.perturb_mu},
              {"perturb_sigma", c.perturb_sigma},
              {"selection_mode", selection_mode_name(c.selection_mode)},
              {"freeze_fraction", c.freeze_fraction},
              {"invert_selection", c.invert_selection},
              {"loss_weights", {c.loss_weights.cls, c.loss_weights.ssl_source, c.loss_weights.ssl_target}},
              {"optimizer", optimizer_name(c.optimizer)},
              {"adam_beta1", c.adam_beta1},
              {"adam_beta2", c.adam_beta2},
              {"adam_eps", c.adam_eps},
              {"pseudo_label_threshold", c.pseudo_label_threshold},
              {"hidden", c.model.hidden},
              {"feature", c.model.feature},
              {"classes", c.model.classes},
              {"diag_stride", c.diag_stride},
              {"diag_per_sample", c.diag_per_sample}};
}

json to_json(const ShiftConfig& c) {
  json j{{"jitter_sigma", c.jitter_sigma}, {"drop_fraction", c.drop_fraction}, {"shift_scale", c.scale}};
  if (c.occlusion) {
    j["occlusion_normal"] = c.occlusion->first;
    j["occlusion_offset"] = c.occlusion->second;
  } else {
    j["occlusion_normal"] = nullptr;
    j["occlusion_offset"] = 0.0;
  }
  return j;
}

json to_json(const BenchmarkConfig& c) {
  json j{{"class_count", c.class_count},
         {"points", c.points},
         {"n_per_class_source", c.n_per_class_source},
         {"n_per_class_target", c.n_per_class_target},
         {"data_seed", c.data_seed},
         {"data_dir", c.data_dir}};
  j.update(to_json(c.shift));
  return j;
}

json to_json(const ExperimentConfig& c) {
  json j = to_json(c.train);
  j.erase("classes");  // class_count is authoritative here
  j.update(to_json(c.benchmark));
  j["output_dir"] = c.output_dir;
  j["eval_stride"] = c.eval_stride;
  j["beta_grid"] = c.beta_grid;
  j["alpha_grid"] = c.alpha_grid;
  j["seeds"] = c.seeds;
  return j;
}

namespace {

template <typename T>
T get_field(const json& j, const std::string& key) {
  try {
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (j.is_number_float()) {
        const double v = j.get<double>();
        if (v < 0 || v != std::floor(v)) throw ConfigError(key, "expected a non-negative integer");
        return static_cast<T>(v);
      }
      if (j.is_number_integer() && j.get<long long>() < 0) throw ConfigError(key, "expected a non-negative integer");
    }
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key, std::string("wrong type: ") + e.what());
  }
}

const std::set<std::string>& train_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k;
    const json defaults = to_json(TrainConfig{});
    for (const auto& [key, v] : defaults.items()) k.insert(key);
    k.insert("ssl_weight");
    return k;
  }();
  return keys;
}

const std::set<std::string>& shift_keys() {
  static const std::set<std::string> keys = {"jitter_sigma", "drop_fraction", "shift_scale", "occlusion_normal",
                                             "occlusion_offset"};
  return keys;
}

}  // namespace

TrainConfig train_config_from_json(const json& j, const TrainConfig& base) {
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  TrainConfig c = base;
  for (const auto& [key, v] : j.items()) {
    if (key == "alpha") c.alpha = get_field<Real>(v, key);
    else if (key == "beta") c.beta = get_field<Real>(v, key);
    else if (key == "learning_rate") c.learning_rate = get_field<Real>(v, key);
    else if (key == "batch_size") c.batch_size = get_field<std::size_t>(v, key);
    else if (key == "steps_stage1") c.steps_stage1 = get_field<std::size_t>(v, key);
    else if (key == "steps_stage2") c.steps_stage2 = get_field<std::size_t>(v, key);
    else if (key == "seed") c.seed = get_field<std::uint64_t>(v, key);
    else if (key == "perturb_mu") c.perturb_mu = get_field<Real>(v, key);
    else if (key == "perturb_sigma") c.perturb_sigma = get_field<Real>(v, key);
    else if (key == "selection_mode") c.selection_mode = parse_selection_mode(get_field<std::string>(v, key));
    else if (key == "freeze_fraction") c.freeze_fraction = get_field<Real>(v, key);
    else if (key == "invert_selection") c.invert_selection = get_field<bool>(v, key);
    else if (key == "loss_weights") {
      const auto w = get_field<std::vector<Real>>(v, key);
      if (w.size() != 3) throw ConfigError(key, "expected [cls, ssl_source, ssl_target]");
      c.loss_weights = {w[0], w[1], w[2]};
    } else if (key == "ssl_weight") {
      const Real w = get_field<Real>(v, key);
      c.loss_weights.ssl_source = w;
      c.loss_weights.ssl_target = w;
    } else if (key == "optimizer") c.optimizer = parse_optimizer(get_field<std::string>(v, key));
    else if (key == "adam_beta1") c.adam_beta1 = get_field<Real>(v, key);
    else if (key == "adam_beta2") c.adam_beta2 = get_field<Real>(v, key);
    else if (key == "adam_eps") c.adam_eps = get_field<Real>(v, key);
    else if (key == "pseudo_label_threshold") c.pseudo_label_threshold = get_field<Real>(v, key);
    else if (key == "hidden") c.model.hidden = get_field<std::size_t>(v, key);
    else if (key == "feature") c.model.feature = get_field<std::size_t>(v, key);
    else if (key == "classes") c.model.classes = get_field<int>(v, key);
    else if (key == "diag_stride") c.diag_stride = get_field<std::size_t>(v, key);
    else if (key == "diag_per_sample") c.diag_per_sample = get_field<bool>(v, key);
    else throw ConfigError(key, "unknown configuration key");
  }
  return c;
}

ShiftConfig shift_config_from_json(const json& j, const ShiftConfig& base) {
  ShiftConfig c = base;
  std::optional<std::array<Real, 3>> normal = c.occlusion ? std::optional(c.occlusion->first) : std::nullopt;
  Real offset = c.occlusion ? c.occlusion->second : 0.0;
  for (const auto& [key, v] : j.items()) {
    if (key == "jitter_sigma") c.jitter_sigma = get_field<Real>(v, key);
    else if (key == "drop_fraction") c.drop_fraction = get_field<Real>(v, key);
    else if (key == "shift_scale") c.scale = get_field<Real>(v, key);
    else if (key == "occlusion_offset") offset = get_field<Real>(v, key);
    else if (key == "occlusion_normal") {
      if (v.is_null()) {
        normal.reset();
      } else {
        const auto n = get_field<std::vector<Real>>(v, key);
        if (n.size() != 3) throw ConfigError(key, "expected [x, y, z] or null");
        normal = std::array<Real, 3>{n[0], n[1], n[2]};
      }
    } else throw ConfigError(key, "unknown shift key");
  }
  if (normal) {
    c.occlusion = std::make_pair(*normal, offset);
  } else {
    c.occlusion.reset();
  }
  return c;
}

ExperimentConfig experiment_config_from_json(const json& j, const ExperimentConfig& base) {
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  ExperimentConfig c = base;
  json train_part = json::object(), shift_part = json::object();
  for (const auto& [key, v] : j.items()) {
    if (train_keys().count(key)) train_part[key] = v;
    else if (shift_keys().count(key)) shift_part[key] = v;
    else if (key == "class_count") {
      c.benchmark.class_count = get_field<int>(v, key);
      c.train.model.classes = c.benchmark.class_count;
    } else if (key == "points") c.benchmark.points = get_field<std::size_t>(v, key);
    else if (key == "n_per_class_source") c.benchmark.n_per_class_source = get_field<std::size_t>(v, key);
    else if (key == "n_per_class_target") c.benchmark.n_per_class_target = get_field<std::size_t>(v, key);
    else if (key == "data_seed") c.benchmark.data_seed = get_field<std::uint64_t>(v, key);
    else if (key == "data_dir") c.benchmark.data_dir = get_field<std::string>(v, key);
    else if (key == "output_dir") c.output_dir = get_field<std::string>(v, key);
    else if (key == "eval_stride") c.eval_stride = get_field<std::size_t>(v, key);
    else if (key == "beta_grid") c.beta_grid = get_field<std::vector<Real>>(v, key);
    else if (key == "alpha_grid") c.alpha_grid = get_field<std::vector<Real>>(v, key);
    else if (key == "seeds") c.seeds = get_field<std::vector<std::uint64_t>>(v, key);
    else throw ConfigError(key, "unknown configuration key");
  }
  c.train = train_config_from_json(train_part, c.train);
  c.benchmark.shift = shift_config_from_json(shift_part, c.benchmark.shift);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config", path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

void apply_override(ExperimentConfig& cfg, const std::string& raw_key, const std::string& value) {
  std::string key = raw_key;
  std::replace(key.begin(), key.end(), '-', '_');
  static const std::set<std::string> list_keys = {"beta_grid", "alpha_grid", "seeds", "loss_weights",
                                                  "occlusion_normal"};
  static const std::set<std::string> string_keys = {"selection_mode", "optimizer", "output_dir", "data_dir"};
  json v;
  if (string_keys.count(key)) {
    v = value;
  } else if (list_keys.count(key) && !value.empty() && value.front() != '[' && value != "null") {
    v = json::array();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        v.push_back(json::parse(item));
      } catch (const json::exception&) {
        throw ConfigError(key, "cannot parse list item '" + item + "'");
      }
    }
  } else {
    try {
      v = json::parse(value);
    } catch (const json::exception&) {
      v = value;
    }
  }
  cfg = experiment_config_from_json(json{{key, v}}, cfg);
}

Benchmark build_benchmark(const BenchmarkConfig& cfg) {
  if (!cfg.data_dir.empty()) {
    auto [source, target] = load_manifest(std::filesystem::path(cfg.data_dir) / "manifest.json", cfg.class_count);
    return {std::move(source), std::move(target)};
  }
  return make_uda_benchmark(cfg.n_per_class_source, cfg.n_per_class_target, cfg.class_count, cfg.points, cfg.shift,
                            cfg.data_seed);
}

}  // namespace skewgrad

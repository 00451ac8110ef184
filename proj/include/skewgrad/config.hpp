// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment configuration and its JSON form. Keys are snake_case; the CLI
// accepts the same keys in kebab-case as --key value overrides.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "skewgrad/pointcloud.hpp"
#include "skewgrad/trainer.hpp"

namespace skewgrad {

struct BenchmarkConfig {
  int class_count = 4;
  std::size_t points = 256;
  std::size_t n_per_class_source = 64;
  std::size_t n_per_class_target = 64;
  std::uint64_t data_seed = 1234;
  ShiftConfig shift = default_target_shift();
  std::string data_dir;  // load from manifest.json here instead of generating

  static ShiftConfig default_target_shift();
  void validate() const;
};

struct ExperimentConfig {
  TrainConfig train;
  BenchmarkConfig benchmark;
  std::string output_dir = "skewgrad_out";
  std::size_t eval_stride = 0;          // periodic target evaluation in sweeps; 0 = final only
  std::vector<Real> beta_grid;
  std::vector<Real> alpha_grid;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const ShiftConfig& c);
nlohmann::json to_json(const BenchmarkConfig& c);
nlohmann::json to_json(const ExperimentConfig& c);

/// Missing keys keep their defaults; unknown keys and wrong types throw
/// ConfigError naming the key.
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base = TrainConfig());
ShiftConfig shift_config_from_json(const nlohmann::json& j, const ShiftConfig& base = ShiftConfig());
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const ExperimentConfig& base = ExperimentConfig());

ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Flattened view: every leaf key of the experiment JSON, including the
/// nested train/benchmark/shift objects, addressable by its bare name.
/// Applies key=value (value as JSON, or as a string when it does not parse,
/// or as a comma-separated list for array keys).
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

Benchmark build_benchmark(const BenchmarkConfig& cfg);

}  // namespace skewgrad

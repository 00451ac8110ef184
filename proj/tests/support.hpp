// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for the unit and acceptance tests.

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "skewgrad/config.hpp"
#include "skewgrad/model.hpp"

namespace skewgrad::testing {

/// init_params with biases drawn from N(0, 0.1), so that no pre-activation
/// sits exactly on a relu kink at the evaluation point.
inline ModelParams generic_params(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p = init_params(dims, seed);
  std::mt19937_64 rng(mix_seed(seed, 0xB1A5));
  std::normal_distribution<Real> normal(0.0, 0.1);
  for (auto* stack : {&p.encoder, &p.cls_head, &p.ssl_head}) {
    for (auto& layer : *stack) {
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias.data()[i] = normal(rng);
    }
  }
  return p;
}

/// Desk-scale benchmark used by the experiment criteria: 64-point clouds,
/// 64 samples per class and domain, h=32, d=64, batch 16, 600 + 300 steps.
inline ExperimentConfig desk_config() {
  ExperimentConfig c;
  c.benchmark.points = 64;
  c.benchmark.n_per_class_source = 64;
  c.benchmark.n_per_class_target = 64;
  c.train.model.hidden = 32;
  c.train.model.feature = 64;
  c.train.batch_size = 16;
  c.train.steps_stage1 = 600;
  c.train.steps_stage2 = 300;
  c.train.learning_rate = 0.01;
  c.train.diag_stride = 10;
  c.seeds = {0, 1, 2, 3, 4};
  return c;
}

/// Small and fast, for plumbing tests.
inline ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.benchmark.points = 32;
  c.benchmark.n_per_class_source = 8;
  c.benchmark.n_per_class_target = 8;
  c.train.model.hidden = 8;
  c.train.model.feature = 16;
  c.train.batch_size = 6;
  c.train.steps_stage1 = 12;
  c.train.steps_stage2 = 6;
  c.seeds = {0, 1};
  return c;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("skewgrad_" + tag + "_" + std::to_string((static_cast<std::uint64_t>(rd()) << 32) | rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace skewgrad::testing

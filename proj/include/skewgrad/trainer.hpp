// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0
//
// Two-stage training: joint source classification + masked rotation
// prediction on both domains, then pseudo-labeling and fine-tuning with the
// target pseudo-labels. Optimizers, evaluation and checkpoints live here.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skewgrad/diagnostics.hpp"
#include "skewgrad/model.hpp"
#include "skewgrad/pointcloud.hpp"
#include "skewgrad/saliency.hpp"
#include "skewgrad/sm_dsb.hpp"

namespace skewgrad {

/// Invalid configuration. field() names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// A loss or parameter became non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t step, const std::string& what)
      : std::runtime_error("diverged at step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

enum class SelectionMode { SmDsb, All, RandomFreeze, None };
const char* selection_mode_name(SelectionMode m);
SelectionMode parse_selection_mode(const std::string& s);

enum class OptimizerKind { Sgd, Adam };
const char* optimizer_name(OptimizerKind k);
OptimizerKind parse_optimizer(const std::string& s);

struct TrainConfig {
  Real alpha = kDefaultAlpha;
  Real beta = kDefaultBeta;
  Real learning_rate = 0.01;
  std::size_t batch_size = 32;
  std::size_t steps_stage1 = 4000;
  std::size_t steps_stage2 = 2000;
  std::uint64_t seed = 0;
  Real perturb_mu = kDefaultPerturbMu;
  Real perturb_sigma = kDefaultPerturbSigma;
  SelectionMode selection_mode = SelectionMode::SmDsb;
  Real freeze_fraction = 0.5;  // RandomFreeze(p)
  bool invert_selection = false;
  LossWeights loss_weights;
  OptimizerKind optimizer = OptimizerKind::Sgd;
  Real adam_beta1 = 0.9;
  Real adam_beta2 = 0.999;
  Real adam_eps = 1e-8;
  Real pseudo_label_threshold = 0.0;  // minimum confidence for stage-2 pseudo-labels
  ModelDims model;
  std::size_t diag_stride = 0;  // 0 disables gradient audits
  bool diag_per_sample = false;

  void validate() const;
};

struct StepRecord {
  int stage = 1;
  std::size_t step = 0;  // global, 1-based, continues across stages
  LossValues loss;
  std::size_t retained_count = 0;
  std::optional<Real> tau;
  std::optional<ConflictRecord> conflict;
};

struct TrainingLog {
  std::vector<StepRecord> steps;
  std::vector<ConflictRecord> conflicts;
  std::vector<SampleConflict> sample_conflicts;

  void append(const TrainingLog& other);
};

// ---------------------------------------------------------------------------
// Optimizers

/// p <- p - lr * g. Throws ad::ShapeError on mismatched layers.
void sgd_step(ModelParams& params, const ModelParams& grads, Real lr);

struct AdamState {
  std::size_t t = 0;
  std::optional<ModelParams> m;
  std::optional<ModelParams> v;
};

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Evaluation and pseudo-labels

struct EvalResult {
  Real accuracy = 0.0;
  std::vector<Real> per_class_accuracy;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::size_t total = 0;
};

/// Index of the largest entry; ties resolve to the lowest index.
int argmax_lowest(std::span<const Real> values);
/// softmax of a 1 x K logit row.
std::vector<Real> softmax(const Matrix& logits);
int predict(const ModelParams& params, const PointCloud& pc);

/// Uses visible labels, or hidden ones under LabelAccess::Evaluate.
EvalResult evaluate(const ModelParams& params, const DomainDataset& dataset);
EvalResult evaluate_predictions(std::span<const int> truth, std::span<const int> predicted, int classes);

struct PseudoLabeled {
  DomainDataset data;  // visible labels are the pseudo-labels
  std::vector<Real> confidence;
};

PseudoLabeled generate_pseudo_labels(const ModelParams& params, const DomainDataset& target);

// ---------------------------------------------------------------------------
// Trainer

struct TrainerState {
  TrainConfig config;
  int stage = 1;
  std::size_t step = 0;        // global steps completed
  std::size_t stage_step = 0;  // steps completed in this stage
  ModelParams params;
  AdamState adam;
  std::string batch_rng;
  std::string mask_rng;
  std::vector<int> pseudo_labels;
  std::vector<Real> confidence;
};

class Trainer {
 public:
  /// Stage 1: target labels stay hidden. Stage 2: target must carry visible
  /// pseudo-labels; confidence may be empty (all pass).
  Trainer(TrainConfig config, const DomainDataset& source, const DomainDataset& target, int stage,
          ModelParams params, std::size_t start_step = 0, std::span<const Real> confidence = {});

  /// Rebuilds a trainer mid-run. For stage 2 the pseudo-labels come from
  /// the state and are applied to a copy of raw_target.
  static Trainer restore(const TrainerState& state, const DomainDataset& source, const DomainDataset& raw_target);

  StepRecord step();
  /// Runs n steps, appending to log.
  void run(std::size_t n, TrainingLog& log);

  const ModelParams& params() const { return params_; }
  const TrainConfig& config() const { return config_; }
  int stage() const { return stage_; }
  std::size_t global_step() const { return step_; }
  std::size_t stage_step() const { return stage_step_; }
  TrainerState state() const;
  const TrainingLog& audit_log() const { return audit_; }

 private:
  struct Batch {
    std::vector<std::size_t> source_idx;
    std::vector<std::size_t> target_idx;
    LossBatch loss;
  };

  Batch assemble();
  SslMask make_mask(const Batch& b, std::vector<SkewnessRecord>& source_records, std::optional<Real>& tau);
  ConflictRecord audit(const Batch& b, const SslMask& mask, std::vector<SkewnessRecord>& source_records);

  TrainConfig config_;
  const DomainDataset* source_;
  std::shared_ptr<const DomainDataset> owned_target_;  // stable across moves
  const DomainDataset* target_;
  int stage_;
  ModelParams params_;
  AdamState adam_;
  std::mt19937_64 batch_rng_;
  std::mt19937_64 mask_rng_;
  std::size_t step_;
  std::size_t stage_step_ = 0;
  std::vector<Real> confidence_;
  TrainingLog audit_;
};

struct StageResult {
  ModelParams params;
  TrainingLog log;
  TrainerState state;
};

/// Called after every optimizer step.
using StepCallback = std::function<void(const Trainer&)>;

StageResult train_stage1(const TrainConfig& config, const DomainDataset& source, const DomainDataset& target,
                         const StepCallback& on_step = {});
StageResult train_stage2(const TrainConfig& config, const DomainDataset& source, const PseudoLabeled& target,
                         ModelParams params, const StepCallback& on_step = {});

struct TwoStageResult {
  ModelParams stage1_params;
  ModelParams params;
  TrainingLog log;
  PseudoLabeled pseudo;
  EvalResult source_eval;
  EvalResult target_eval_stage1;
  EvalResult target_eval;
  TrainerState stage1_state;
  TrainerState final_state;
};

/// Stage 1, pseudo-labels, stage 2, then evaluation on both domains.
TwoStageResult train_two_stage(const TrainConfig& config, const DomainDataset& source, const DomainDataset& target,
                               const StepCallback& on_step = {});

// ---------------------------------------------------------------------------
// Persistence

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const TrainerState& state, const std::filesystem::path& path);
/// Fully parses and validates before returning; throws FormatError on any
/// problem, including a version mismatch.
TrainerState load_checkpoint(const std::filesystem::path& path);

/// JSON-lines training log, one object per step.
void write_training_log(const TrainingLog& log, const std::filesystem::path& path);

}  // namespace skewgrad

// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0
//
// Gradient-conflict measurement and the statistics used to analyze it:
// per-task gradient snapshots over the shared encoder, cosine similarity,
// Pearson/Spearman correlation and an additive-noise-model direction test.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "skewgrad/model.hpp"
#include "skewgrad/pointcloud.hpp"

namespace skewgrad {

enum class GradTask { Cls, SslSource, SslTarget, Sum, Oracle };
const char* grad_task_name(GradTask t);

struct GradientSnapshot {
  GradTask task = GradTask::Cls;
  std::vector<Real> vector;  // encoder parameters, canonical order
  std::size_t step = 0;
};

/// Everything needed to reproduce the losses of one training step.
struct AuditBatch {
  LossBatch batch;
  SslMask mask;
  LossWeights weights;
  const DomainDataset* target = nullptr;      // for the oracle only
  std::vector<std::size_t> target_indices;    // rows of *target in this step
  std::size_t step = 0;
};

/// Isolated backward pass of one loss; only encoder gradients are kept.
/// Cls, SslSource and SslTarget carry the same weights as in Sum, so
/// Sum = Cls + SslSource + SslTarget. Oracle is the cross-entropy of the
/// step's target clouds against their true labels.
GradientSnapshot grad_for_task(const ModelParams& params, const AuditBatch& audit, GradTask task);

/// Encoder gradients flattened in canonical layer order.
std::vector<Real> flatten_encoder(const ModelParams& grads);

/// a.b / (|a||b|); 0 when either norm is below 1e-12.
Real cosine_similarity(std::span<const Real> a, std::span<const Real> b);
Real cosine_similarity(const GradientSnapshot& a, const GradientSnapshot& b);

struct ConflictRecord {
  std::size_t step = 0;
  Real sim_sum_oracle = 0.0;
  Real sim_ssl_cls = 0.0;
  Real sim_ssl_oracle = 0.0;
  Real mean_skewness = 0.0;
  Real linearity_error = 0.0;  // max |Sum - (Cls + SslSource + SslTarget)|
};

struct SampleConflict {
  std::size_t step = 0;
  std::uint64_t sample_id = 0;
  Real skewness = 0.0;
  Real sim_ssl_oracle = 0.0;
};

struct Correlation {
  Real pearson = 0.0;
  Real spearman = 0.0;
};

/// Average ranks (1-based) with ties sharing the mean rank.
std::vector<Real> average_ranks(std::span<const Real> x);
Real pearson(std::span<const Real> x, std::span<const Real> y);
/// Pearson and Spearman; 0 for a zero-variance input. Length >= 3.
Correlation correlation(std::span<const Real> x, std::span<const Real> y);

/// Dependence between regression residuals and the putative cause.
/// Both series are standardized; y is regressed on x by Gaussian-kernel
/// ridge regression (median-distance bandwidth, ridge 1e-3) and the score
/// is HSIC(x, residual) / sqrt(HSIC(x, x) HSIC(y, y)), with the residual
/// kernel sharing y's bandwidth. Lower means a more plausible x -> y.
Real anm_fit_score(std::span<const Real> x, std::span<const Real> y);

struct AnmVerdict {
  Real score_x_to_y = 0.0;  // skewness -> conflict when called as below
  Real score_y_to_x = 0.0;
  bool x_causes_y = false;
};

AnmVerdict anm_direction_test(std::span<const Real> skewness_series, std::span<const Real> conflict_series);

}  // namespace skewgrad

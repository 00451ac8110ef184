// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared point encoder with a classification head and a rotation-prediction
// head. The encoder is a per-point MLP followed by a max-pool over points.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "skewgrad/autodiff.hpp"
#include "skewgrad/pointcloud.hpp"

namespace skewgrad {

struct ModelDims {
  std::size_t hidden = 64;
  std::size_t feature = 128;
  int classes = 4;
  int rotations = 4;
};

struct Dense {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out
};

struct ModelParams {
  ModelDims dims;
  std::vector<Dense> encoder;   // 3 -> h -> h -> d
  std::vector<Dense> cls_head;  // d -> h -> K
  std::vector<Dense> ssl_head;  // d -> h -> R

  /// Names and matrices in canonical order: encoder, cls_head, ssl_head;
  /// weight before bias within a layer.
  std::vector<std::pair<std::string, const Matrix*>> named() const;
  std::vector<std::pair<std::string, Matrix*>> named_mut();
  std::size_t encoder_size() const;
  std::size_t parameter_count() const;
  bool all_finite() const;
  /// Same dims, every matrix zero.
  ModelParams zeros_like() const;
  /// Throws std::invalid_argument unless layer shapes are mutually consistent.
  void validate() const;
};

/// He-normal weights, zero biases; deterministic in seed.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

/// Parameters placed on a graph.
struct BoundLayer {
  ad::Tensor weight;
  ad::Tensor bias;
};

struct BoundModel {
  std::vector<BoundLayer> encoder;
  std::vector<BoundLayer> cls_head;
  std::vector<BoundLayer> ssl_head;
};

BoundModel bind(ad::Graph& g, const ModelParams& params, bool requires_grad);
/// Gradients of every bound parameter (zero where unreachable).
ModelParams collect_grads(const BoundModel& bound, const ModelParams& like);

/// Feature of one cloud (1 x d). points must live on the same graph.
ad::Tensor encode(const BoundModel& m, const ad::Tensor& points);
ad::Tensor encode(const BoundModel& m, ad::Graph& g, const PointCloud& pc);
ad::Tensor classify(const BoundModel& m, const ad::Tensor& feature);
ad::Tensor ssl_predict(const BoundModel& m, const ad::Tensor& feature);

/// Convenience forward passes on a throwaway graph.
Matrix encode_values(const ModelParams& params, const PointCloud& pc);
Matrix class_logits(const ModelParams& params, const PointCloud& pc);

// ---------------------------------------------------------------------------
// Rotation pretext task

inline constexpr int kRotationClasses = 4;

struct SslSample {
  Matrix rotated_points;
  int rotation_label = 0;
  std::uint64_t sample_id = 0;
};

/// Rotation about z by k * 90 degrees.
Matrix rotate_z_quarter(const Matrix& points, int k);
/// k drawn deterministically from seed.
SslSample make_ssl_sample(const PointCloud& pc, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Combined objective

struct LossWeights {
  Real cls = 1.0;
  Real ssl_source = 1.0;
  Real ssl_target = 1.0;
};

/// Inputs to one evaluation of the combined objective.
struct LossBatch {
  std::vector<const PointCloud*> source;   // labeled source clouds
  std::vector<int> source_labels;
  std::vector<SslSample> source_ssl;
  std::vector<SslSample> target_ssl;
  std::vector<const PointCloud*> target_cls;  // pseudo-labeled target (second stage)
  std::vector<int> target_cls_labels;
};

/// SSL participation per sample, over [source_ssl..., target_ssl...].
using SslMask = std::vector<std::uint8_t>;

/// Which parts of the combined objective to include.
struct LossParts {
  bool cls = true;
  bool ssl_source = true;
  bool ssl_target = true;
};

struct LossTensors {
  ad::Tensor total;
  ad::Tensor cls_source;
  ad::Tensor cls_target;  // invalid when no pseudo-labeled batch
  ad::Tensor ssl_source;
  ad::Tensor ssl_target;
};

struct LossValues {
  Real total = 0.0;
  Real cls_source = 0.0;
  Real cls_target = 0.0;
  Real ssl_source = 0.0;
  Real ssl_target = 0.0;
};

/// Weighted L_c^s (+ L_c^t) + L_ssl^s + L_ssl^t, SSL terms masked per sample
/// and averaged over the selected samples of each domain.
LossTensors build_combined_loss(ad::Graph& g, const BoundModel& m, const LossBatch& batch, const SslMask& mask,
                                const LossWeights& weights, LossParts parts = {});

/// Value-only evaluation; unweighted parts plus the weighted total.
LossValues combined_loss(const ModelParams& params, const LossBatch& batch, const SslMask& mask,
                         const LossWeights& weights);

LossValues loss_values(const LossTensors& t);

}  // namespace skewgrad

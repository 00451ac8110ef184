// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0
//
// Saliency-skewness sample selection for the self-supervised branch.
//
// The measurer scores every batch sample by the skewness of its saliency
// map. The selector sorts the scores, takes the round(B * beta)-th smallest
// as the threshold tau and drops from the SSL loss every sample whose score
// reaches it:
//
//     lambda_b = 0  if sk_b >= tau,   1 otherwise.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skewgrad/autodiff.hpp"
#include "skewgrad/model.hpp"
#include "skewgrad/pointcloud.hpp"

namespace skewgrad {

inline constexpr Real kDefaultBeta = 0.7;
inline constexpr Real kDefaultPerturbMu = 0.1;
inline constexpr Real kDefaultPerturbSigma = 0.02;

struct SkewnessRecord {
  std::uint64_t sample_id = 0;
  Real skewness = 0.0;
  Domain domain = Domain::Source;
  bool perturbed = false;
};

struct SelectionMask {
  std::vector<std::uint8_t> lambdas;
  Real tau = 0.0;
  Real beta = kDefaultBeta;
  std::vector<SkewnessRecord> records;

  std::size_t retained() const;
};

/// One record per sample: skewness of its saliency map under labels[i].
std::vector<SkewnessRecord> measure_batch(const ModelParams& params, std::span<const PointCloud* const> batch,
                                          std::span<const int> labels, Real alpha);

/// 1-indexed rank of tau: round-half-up of B * beta, clamped to [1, B].
std::size_t threshold_rank(std::size_t batch, Real beta);

/// Adaptive-threshold selection over the scores in records. With invert set
/// the complement is kept instead (high-skewness samples participate).
SelectionMask select(std::span<const SkewnessRecord> records, Real beta, bool invert = false);

/// Adds Normal(mu, sigma), drawn from (seed, sample_id), to every Target
/// record. Source records pass through unchanged.
std::vector<SkewnessRecord> perturb_target_scores(std::span<const SkewnessRecord> records, std::uint64_t seed,
                                                  Real mu = kDefaultPerturbMu, Real sigma = kDefaultPerturbSigma);

/// Mean of the per-sample losses (B x 1) where mask is set; an exact zero
/// scalar when nothing is selected.
ad::Tensor masked_ssl_loss(const ad::Tensor& per_sample_losses, std::span<const std::uint8_t> mask);

}  // namespace skewgrad

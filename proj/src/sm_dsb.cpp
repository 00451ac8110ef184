// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0

#include "skewgrad/sm_dsb.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "skewgrad/saliency.hpp"

namespace skewgrad {

std::size_t SelectionMask::retained() const {
  std::size_t n = 0;
  for (auto l : lambdas) n += l ? 1 : 0;
  return n;
}

std::vector<SkewnessRecord> measure_batch(const ModelParams& params, std::span<const PointCloud* const> batch,
                                          std::span<const int> labels, Real alpha) {
  if (batch.size() != labels.size()) {
    throw std::invalid_argument("measure_batch: " + std::to_string(batch.size()) + " samples vs " +
                                std::to_string(labels.size()) + " labels");
  }
  std::vector<SkewnessRecord> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const SaliencyMap map = saliency_map(params, *batch[i], labels[i], alpha);
    out.push_back({batch[i]->id, skewness(map.scores), batch[i]->domain, false});
  }
  return out;
}

std::size_t threshold_rank(std::size_t batch, Real beta) {
  // The epsilon absorbs representation error in products like 5 * 0.3.
  const auto rounded = static_cast<long long>(std::floor(static_cast<Real>(batch) * beta + 0.5 + 1e-9));
  return static_cast<std::size_t>(std::clamp<long long>(rounded, 1, static_cast<long long>(batch)));
}

SelectionMask select(std::span<const SkewnessRecord> records, Real beta, bool invert) {
  if (records.size() < 2) {
    throw std::invalid_argument("select: need at least 2 samples, got " + std::to_string(records.size()));
  }
  if (!(beta > 0.0 && beta <= 1.0)) throw std::invalid_argument("select: beta must be in (0, 1]");
  std::vector<Real> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) {
    if (!std::isfinite(r.skewness)) {
      throw std::invalid_argument("select: non-finite skewness for sample " + std::to_string(r.sample_id));
    }
    sorted.push_back(r.skewness);
  }
  std::sort(sorted.begin(), sorted.end());

  SelectionMask mask;
  mask.beta = beta;
  mask.tau = sorted[threshold_rank(records.size(), beta) - 1];
  mask.records.assign(records.begin(), records.end());
  mask.lambdas.reserve(records.size());
  for (const auto& r : records) {
    const bool excluded = r.skewness >= mask.tau;
    mask.lambdas.push_back(static_cast<std::uint8_t>(excluded == invert ? 1 : 0));
  }
  return mask;
}

std::vector<SkewnessRecord> perturb_target_scores(std::span<const SkewnessRecord> records, std::uint64_t seed,
                                                  Real mu, Real sigma) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("perturb_target_scores: sigma must be >= 0");
  std::vector<SkewnessRecord> out(records.begin(), records.end());
  for (auto& r : out) {
    if (r.domain != Domain::Target) continue;
    std::mt19937_64 rng(mix_seed(seed, r.sample_id));
    std::normal_distribution<Real> noise(mu, sigma);
    r.skewness += sigma > 0.0 ? noise(rng) : mu;
    r.perturbed = true;
  }
  return out;
}

ad::Tensor masked_ssl_loss(const ad::Tensor& per_sample_losses, std::span<const std::uint8_t> mask) {
  const ad::Shape s = per_sample_losses.shape();
  if (s.cols != 1 || s.rows != mask.size()) {
    throw ad::ShapeError("masked_ssl_loss: losses " + s.str() + " vs mask of " + std::to_string(mask.size()));
  }
  ad::Graph& g = *per_sample_losses.graph();
  std::size_t count = 0;
  Matrix weights(static_cast<Eigen::Index>(mask.size()), 1);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    weights(static_cast<Eigen::Index>(i), 0) = mask[i] ? 1.0 : 0.0;
    count += mask[i] ? 1 : 0;
  }
  if (count == 0) return g.scalar(0.0);
  const ad::Tensor selected = ad::mul_elementwise(per_sample_losses, g.constant(std::move(weights)));
  return ad::scale(ad::sum(selected), 1.0 / static_cast<Real>(count));
}

}  // namespace skewgrad

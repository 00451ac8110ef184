// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0
//
// Point saliency under radial displacement toward the spherical core, and
// the skewness of the resulting score distribution.
//
// For a point p_i at distance r_i = |p_i - c| from the core c, the score is
//
//     s_i = -(dL/dr_i) * r_i^(1 + alpha),   dL/dr_i = grad_i . (p_i - c) / r_i
//
// The core is held fixed while differentiating.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skewgrad/model.hpp"

namespace skewgrad {

inline constexpr Real kDefaultAlpha = 1.0;

struct SaliencyMap {
  std::vector<Real> scores;
  Real alpha = kDefaultAlpha;
  Eigen::RowVector3d core = Eigen::RowVector3d::Zero();
  std::uint64_t sample_id = 0;
};

/// Component-wise median; even counts average the two middle values.
Eigen::RowVector3d spherical_core(const Matrix& points);

/// Scores from per-point loss gradients (both N x 3) around a fixed core.
std::vector<Real> radial_saliency(const Matrix& points, const Matrix& point_grads, const Eigen::RowVector3d& core,
                                  Real alpha);

/// One isolated forward/backward pass of the classification loss against
/// label; model parameters are constants on that graph.
SaliencyMap saliency_map(const ModelParams& params, const PointCloud& pc, int label, Real alpha = kDefaultAlpha);

/// Standardized third central moment with the population standard deviation.
/// Returns 0 when sigma < 1e-12.
Real skewness(std::span<const Real> scores);

}  // namespace skewgrad

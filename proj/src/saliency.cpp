// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0

#include "skewgrad/saliency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace skewgrad {

Eigen::RowVector3d spherical_core(const Matrix& points) {
  if (points.rows() == 0 || points.cols() != 3) {
    throw std::invalid_argument("spherical_core: expected N x 3 with N >= 1, got " + ad::shape_of(points).str());
  }
  Eigen::RowVector3d core;
  std::vector<Real> axis(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index c = 0; c < 3; ++c) {
    for (Eigen::Index r = 0; r < points.rows(); ++r) axis[static_cast<std::size_t>(r)] = points(r, c);
    const std::size_t n = axis.size();
    const auto mid = axis.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(axis.begin(), mid, axis.end());
    if (n % 2 == 1) {
      core[c] = *mid;
    } else {
      const Real upper = *mid;
      const Real lower = *std::max_element(axis.begin(), mid);
      core[c] = 0.5 * (lower + upper);
    }
  }
  return core;
}

std::vector<Real> radial_saliency(const Matrix& points, const Matrix& point_grads, const Eigen::RowVector3d& core,
                                  Real alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("saliency: alpha must be > 0");
  if (points.rows() != point_grads.rows() || points.cols() != 3 || point_grads.cols() != 3) {
    throw std::invalid_argument("saliency: points " + ad::shape_of(points).str() + " vs gradients " +
                                ad::shape_of(point_grads).str());
  }
  std::vector<Real> scores(static_cast<std::size_t>(points.rows()), 0.0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::RowVector3d offset = points.row(i) - core;
    const Real r = offset.norm();
    if (r < 1e-9) continue;
    const Real dl_dr = point_grads.row(i).dot(offset) / r;
    scores[static_cast<std::size_t>(i)] = -dl_dr * std::pow(r, 1.0 + alpha);
  }
  return scores;
}

SaliencyMap saliency_map(const ModelParams& params, const PointCloud& pc, int label, Real alpha) {
  if (label < 0 || label >= params.dims.classes) {
    throw std::invalid_argument("saliency: label " + std::to_string(label) + " out of range for sample " +
                                std::to_string(pc.id));
  }
  ad::Graph g;
  const BoundModel m = bind(g, params, false);
  const ad::Tensor points = g.variable(pc.points);
  const int labels[1] = {label};
  const ad::Tensor loss = ad::softmax_cross_entropy(classify(m, encode(m, points)), labels);
  g.backward(loss);
  const Matrix grads = points.grad_or_zero();
  if (!grads.allFinite()) {
    throw std::runtime_error("saliency: non-finite gradient for sample " + std::to_string(pc.id));
  }
  SaliencyMap map;
  map.alpha = alpha;
  map.core = spherical_core(pc.points);
  map.sample_id = pc.id;
  map.scores = radial_saliency(pc.points, grads, map.core, alpha);
  return map;
}

Real skewness(std::span<const Real> scores) {
  const auto n = static_cast<Real>(scores.size());
  if (scores.empty()) return 0.0;
  Real mean = 0.0;
  for (Real s : scores) mean += s;
  mean /= n;
  Real m2 = 0.0, m3 = 0.0;
  for (Real s : scores) {
    const Real d = s - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  const Real sigma = std::sqrt(m2 / n);
  if (sigma < 1e-12) return 0.0;
  return m3 / (n * sigma * sigma * sigma);
}

}  // namespace skewgrad

// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0

#include "skewgrad/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>

namespace skewgrad {

const char* grad_task_name(GradTask t) {
  switch (t) {
    case GradTask::Cls: return "cls";
    case GradTask::SslSource: return "ssl_source";
    case GradTask::SslTarget: return "ssl_target";
    case GradTask::Sum: return "sum";
    case GradTask::Oracle: return "oracle";
  }
  return "unknown";
}

std::vector<Real> flatten_encoder(const ModelParams& grads) {
  std::vector<Real> out;
  out.reserve(grads.encoder_size());
  for (const auto& layer : grads.encoder) {
    out.insert(out.end(), layer.weight.data(), layer.weight.data() + layer.weight.size());
    out.insert(out.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  return out;
}

GradientSnapshot grad_for_task(const ModelParams& params, const AuditBatch& audit, GradTask task) {
  ad::Graph g;
  const BoundModel m = bind(g, params, true);
  ad::Tensor loss;
  if (task == GradTask::Oracle) {
    if (!audit.target || audit.target_indices.empty()) {
      throw std::invalid_argument("grad_for_task(oracle): empty target batch");
    }
    std::vector<ad::Tensor> feats;
    std::vector<int> labels;
    for (std::size_t idx : audit.target_indices) {
      feats.push_back(encode(m, g, (*audit.target)[idx]));
      labels.push_back(audit.target->reveal_label(idx, LabelAccess::Oracle));
    }
    loss = ad::softmax_cross_entropy(classify(m, ad::concat_rows(feats)), labels);
  } else {
    if (audit.batch.source.empty()) throw std::invalid_argument("grad_for_task: empty batch");
    LossParts parts;
    parts.cls = task == GradTask::Cls || task == GradTask::Sum;
    parts.ssl_source = task == GradTask::SslSource || task == GradTask::Sum;
    parts.ssl_target = task == GradTask::SslTarget || task == GradTask::Sum;
    loss = build_combined_loss(g, m, audit.batch, audit.mask, audit.weights, parts).total;
  }
  g.backward(loss);
  GradientSnapshot snap;
  snap.task = task;
  snap.step = audit.step;
  snap.vector = flatten_encoder(collect_grads(m, params));
  if (!std::all_of(snap.vector.begin(), snap.vector.end(), [](Real v) { return std::isfinite(v); })) {
    throw std::runtime_error(std::string("grad_for_task: non-finite ") + grad_task_name(task) + " gradient");
  }
  return snap;
}

Real cosine_similarity(std::span<const Real> a, std::span<const Real> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_similarity: length " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  Real dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

Real cosine_similarity(const GradientSnapshot& a, const GradientSnapshot& b) {
  return cosine_similarity(std::span<const Real>(a.vector), std::span<const Real>(b.vector));
}

// ---------------------------------------------------------------------------
// Correlation

std::vector<Real> average_ranks(std::span<const Real> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<Real> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const Real rank = 0.5 * static_cast<Real>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

Real pearson(std::span<const Real> x, std::span<const Real> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("correlation: length " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < 3) throw std::invalid_argument("correlation: need at least 3 observations");
  const auto n = static_cast<Real>(x.size());
  const Real mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const Real my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  Real sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  const Real scale = std::max(std::abs(mx), std::abs(my)) + 1.0;
  if (std::sqrt(sxx / n) < 1e-15 * scale || std::sqrt(syy / n) < 1e-15 * scale) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

Correlation correlation(std::span<const Real> x, std::span<const Real> y) {
  Correlation c;
  c.pearson = pearson(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  c.spearman = pearson(rx, ry);
  return c;
}

// ---------------------------------------------------------------------------
// Additive noise model

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

Vec standardize(std::span<const Real> v, const char* what) {
  Vec out = Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
  const Real mean = out.mean();
  out.array() -= mean;
  const Real sd = std::sqrt(out.squaredNorm() / static_cast<Real>(out.size()));
  if (sd < 1e-12) throw std::invalid_argument(std::string("anm_fit_score: ") + what + " has zero variance");
  return out / sd;
}

Real median_distance(const Vec& v) {
  std::vector<Real> d;
  d.reserve(static_cast<std::size_t>(v.size() * (v.size() - 1) / 2));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    for (Eigen::Index j = i + 1; j < v.size(); ++j) d.push_back(std::abs(v[i] - v[j]));
  }
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid > 1e-12 ? *mid : 1.0;
}

Mat gaussian_gram(const Vec& v, Real bandwidth) {
  const Eigen::Index n = v.size();
  Mat k(n, n);
  const Real inv = 1.0 / (2.0 * bandwidth * bandwidth);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const Real d = v[i] - v[j];
      k(i, j) = std::exp(-d * d * inv);
    }
  }
  return k;
}

Mat center(const Mat& k) {
  const Eigen::RowVectorXd col_mean = k.colwise().mean();
  const Vec row_mean = k.rowwise().mean();
  const Real all = k.mean();
  Mat c = k;
  c.rowwise() -= col_mean;
  c.colwise() -= row_mean;
  c.array() += all;
  return c;
}

// Biased estimator tr(K H L H) / n^2.
Real hsic(const Mat& k_centered, const Mat& l) {
  const auto n = static_cast<Real>(l.rows());
  return k_centered.cwiseProduct(l).sum() / (n * n);
}

}  // namespace

Real anm_fit_score(std::span<const Real> x, std::span<const Real> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("anm_fit_score: length " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < 30) throw std::invalid_argument("anm_fit_score: need at least 30 observations");
  const Vec xs = standardize(x, "x");
  const Vec ys = standardize(y, "y");
  const Real bw_x = median_distance(xs);
  const Real bw_y = median_distance(ys);

  const Mat kx = gaussian_gram(xs, bw_x);
  Mat reg = kx;
  reg.diagonal().array() += 1e-3;
  const Vec coef = reg.ldlt().solve(ys);
  const Vec residual = ys - kx * coef;

  const Mat kx_c = center(kx);
  const Mat ky = gaussian_gram(ys, bw_y);
  const Mat ke = gaussian_gram(residual, bw_y);
  const Real norm = std::sqrt(hsic(kx_c, kx) * hsic(center(ky), ky));
  if (norm < 1e-300) return 0.0;
  return std::max(0.0, hsic(kx_c, ke) / norm);
}

AnmVerdict anm_direction_test(std::span<const Real> skewness_series, std::span<const Real> conflict_series) {
  AnmVerdict v;
  v.score_x_to_y = anm_fit_score(skewness_series, conflict_series);
  v.score_y_to_x = anm_fit_score(conflict_series, skewness_series);
  v.x_causes_y = v.score_x_to_y < v.score_y_to_x;
  return v;
}

}  // namespace skewgrad

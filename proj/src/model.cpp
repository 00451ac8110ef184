// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0

#include "skewgrad/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "skewgrad/sm_dsb.hpp"

namespace skewgrad {

using ad::Graph;
using ad::Tensor;

namespace {

Dense make_layer(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  std::normal_distribution<Real> n(0.0, std::sqrt(2.0 / static_cast<Real>(in)));
  Dense d;
  d.weight.resize(static_cast<Eigen::Index>(in), static_cast<Eigen::Index>(out));
  for (Eigen::Index i = 0; i < d.weight.size(); ++i) d.weight.data()[i] = n(rng);
  d.bias = Matrix::Zero(1, static_cast<Eigen::Index>(out));
  return d;
}

template <typename Fn>
void for_each_group(const char* const (&names)[3], Fn&& fn) {
  for (int g = 0; g < 3; ++g) fn(g, names[g]);
}

constexpr const char* kGroupNames[3] = {"encoder", "cls_head", "ssl_head"};

}  // namespace

std::vector<std::pair<std::string, const Matrix*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  const std::vector<Dense>* groups[3] = {&encoder, &cls_head, &ssl_head};
  for_each_group(kGroupNames, [&](int g, const char* name) {
    for (std::size_t l = 0; l < groups[g]->size(); ++l) {
      const std::string prefix = std::string(name) + "." + std::to_string(l);
      out.emplace_back(prefix + ".weight", &(*groups[g])[l].weight);
      out.emplace_back(prefix + ".bias", &(*groups[g])[l].bias);
    }
  });
  return out;
}

std::vector<std::pair<std::string, Matrix*>> ModelParams::named_mut() {
  std::vector<std::pair<std::string, Matrix*>> out;
  for (const auto& [name, m] : named()) out.emplace_back(name, const_cast<Matrix*>(m));
  return out;
}

std::size_t ModelParams::encoder_size() const {
  std::size_t n = 0;
  for (const auto& l : encoder) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, m] : named()) n += static_cast<std::size_t>(m->size());
  return n;
}

bool ModelParams::all_finite() const {
  for (const auto& [name, m] : named()) {
    if (!m->allFinite()) return false;
  }
  return true;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  for (auto& [name, m] : z.named_mut()) m->setZero();
  return z;
}

void ModelParams::validate() const {
  auto check_chain = [](const std::vector<Dense>& layers, Eigen::Index in, Eigen::Index out, const char* what) {
    if (layers.empty()) throw std::invalid_argument(std::string(what) + ": no layers");
    Eigen::Index expect = in;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const Dense& d = layers[l];
      if (d.weight.rows() != expect || d.bias.rows() != 1 || d.bias.cols() != d.weight.cols()) {
        throw std::invalid_argument(std::string(what) + "." + std::to_string(l) + ": inconsistent shape " +
                                    ad::shape_of(d.weight).str() + " / " + ad::shape_of(d.bias).str());
      }
      expect = d.weight.cols();
    }
    if (expect != out) {
      throw std::invalid_argument(std::string(what) + ": output width " + std::to_string(expect) + ", expected " +
                                  std::to_string(out));
    }
  };
  const auto d = static_cast<Eigen::Index>(dims.feature);
  check_chain(encoder, 3, d, "encoder");
  check_chain(cls_head, d, dims.classes, "cls_head");
  check_chain(ssl_head, d, dims.rotations, "ssl_head");
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  if (dims.hidden == 0 || dims.feature == 0 || dims.classes < 2 || dims.rotations < 2) {
    throw std::invalid_argument("model dims must be positive with >= 2 classes and rotations");
  }
  std::mt19937_64 rng(seed);
  const auto k = static_cast<std::size_t>(dims.classes);
  const auto r = static_cast<std::size_t>(dims.rotations);
  ModelParams p;
  p.dims = dims;
  p.encoder = {make_layer(3, dims.hidden, rng), make_layer(dims.hidden, dims.hidden, rng),
               make_layer(dims.hidden, dims.feature, rng)};
  p.cls_head = {make_layer(dims.feature, dims.hidden, rng), make_layer(dims.hidden, k, rng)};
  p.ssl_head = {make_layer(dims.feature, dims.hidden, rng), make_layer(dims.hidden, r, rng)};
  return p;
}

// ---------------------------------------------------------------------------

BoundModel bind(Graph& g, const ModelParams& params, bool requires_grad) {
  auto place = [&](const std::vector<Dense>& layers) {
    std::vector<BoundLayer> out;
    out.reserve(layers.size());
    for (const auto& l : layers) {
      if (requires_grad) {
        out.push_back({g.variable(l.weight), g.variable(l.bias)});
      } else {
        out.push_back({g.constant(l.weight), g.constant(l.bias)});
      }
    }
    return out;
  };
  return {place(params.encoder), place(params.cls_head), place(params.ssl_head)};
}

ModelParams collect_grads(const BoundModel& bound, const ModelParams& like) {
  ModelParams grads = like;
  auto take = [](const std::vector<BoundLayer>& b, std::vector<Dense>& out) {
    for (std::size_t l = 0; l < b.size(); ++l) {
      out[l].weight = b[l].weight.grad_or_zero();
      out[l].bias = b[l].bias.grad_or_zero();
    }
  };
  take(bound.encoder, grads.encoder);
  take(bound.cls_head, grads.cls_head);
  take(bound.ssl_head, grads.ssl_head);
  return grads;
}

namespace {

// x W + 1 b, with the bias broadcast expressed as a rank-one matmul.
Tensor affine(const Tensor& x, const BoundLayer& layer) {
  Graph& g = *x.graph();
  const Tensor ones = g.ones(x.shape().rows, 1);
  return ad::add(ad::matmul(x, layer.weight), ad::matmul(ones, layer.bias));
}

Tensor mlp_head(const std::vector<BoundLayer>& head, const Tensor& feature) {
  Tensor h = feature;
  for (std::size_t l = 0; l < head.size(); ++l) {
    h = affine(h, head[l]);
    if (l + 1 < head.size()) h = ad::relu(h);
  }
  return h;
}

}  // namespace

Tensor encode(const BoundModel& m, const Tensor& points) {
  Tensor h = points;
  for (const auto& layer : m.encoder) h = ad::relu(affine(h, layer));
  return ad::max_over_rows(h);
}

Tensor encode(const BoundModel& m, Graph& g, const PointCloud& pc) { return encode(m, g.constant(pc.points)); }

Tensor classify(const BoundModel& m, const Tensor& feature) { return mlp_head(m.cls_head, feature); }

Tensor ssl_predict(const BoundModel& m, const Tensor& feature) { return mlp_head(m.ssl_head, feature); }

Matrix encode_values(const ModelParams& params, const PointCloud& pc) {
  Graph g;
  const BoundModel m = bind(g, params, false);
  return encode(m, g, pc).value();
}

Matrix class_logits(const ModelParams& params, const PointCloud& pc) {
  Graph g;
  const BoundModel m = bind(g, params, false);
  return classify(m, encode(m, g, pc)).value();
}

// ---------------------------------------------------------------------------

Matrix rotate_z_quarter(const Matrix& points, int k) {
  k = ((k % 4) + 4) % 4;
  Matrix out = points;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Real x = points(i, 0), y = points(i, 1);
    switch (k) {
      case 0: break;
      case 1: out(i, 0) = -y; out(i, 1) = x; break;
      case 2: out(i, 0) = -x; out(i, 1) = -y; break;
      case 3: out(i, 0) = y; out(i, 1) = -x; break;
    }
  }
  return out;
}

SslSample make_ssl_sample(const PointCloud& pc, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int k = static_cast<int>(std::uniform_int_distribution<int>(0, kRotationClasses - 1)(rng));
  return {rotate_z_quarter(pc.points, k), k, pc.id};
}

// ---------------------------------------------------------------------------

LossTensors build_combined_loss(Graph& g, const BoundModel& m, const LossBatch& batch, const SslMask& mask,
                                const LossWeights& weights, LossParts parts) {
  if (batch.source.empty()) throw std::invalid_argument("combined_loss: empty source batch");
  if (batch.source_labels.size() != batch.source.size()) {
    throw std::invalid_argument("combined_loss: source labels do not match source batch");
  }
  const std::size_t n_ssl = batch.source_ssl.size() + batch.target_ssl.size();
  if (mask.size() != n_ssl) {
    throw std::invalid_argument("combined_loss: mask has " + std::to_string(mask.size()) + " entries for " +
                                std::to_string(n_ssl) + " SSL samples");
  }

  LossTensors out;
  auto logits_of = [&](const std::vector<const PointCloud*>& clouds) {
    std::vector<Tensor> feats;
    feats.reserve(clouds.size());
    for (const PointCloud* pc : clouds) feats.push_back(encode(m, g, *pc));
    return classify(m, ad::concat_rows(feats));
  };
  auto ssl_term = [&](const std::vector<SslSample>& samples, std::size_t offset) {
    if (samples.empty()) return g.scalar(0.0);
    const SslMask sub(mask.begin() + static_cast<std::ptrdiff_t>(offset),
                      mask.begin() + static_cast<std::ptrdiff_t>(offset + samples.size()));
    bool any = false;
    for (auto v : sub) any = any || v != 0;
    // Unselected samples are never run through the network.
    if (!any) return g.scalar(0.0);
    std::vector<Tensor> feats;
    std::vector<int> labels;
    SslMask selected_mask;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (!sub[i]) continue;
      feats.push_back(encode(m, g.constant(samples[i].rotated_points)));
      labels.push_back(samples[i].rotation_label);
      selected_mask.push_back(1);
    }
    const Tensor per_sample = ad::softmax_cross_entropy_per_sample(ssl_predict(m, ad::concat_rows(feats)), labels);
    return masked_ssl_loss(per_sample, selected_mask);
  };

  out.cls_source = parts.cls ? ad::softmax_cross_entropy(logits_of(batch.source), batch.source_labels) : g.scalar(0.0);
  Tensor total = ad::scale(out.cls_source, weights.cls);
  if (!batch.target_cls.empty()) {
    if (batch.target_cls_labels.size() != batch.target_cls.size()) {
      throw std::invalid_argument("combined_loss: pseudo labels do not match target batch");
    }
    out.cls_target =
        parts.cls ? ad::softmax_cross_entropy(logits_of(batch.target_cls), batch.target_cls_labels) : g.scalar(0.0);
    total = ad::add(total, ad::scale(out.cls_target, weights.cls));
  }
  out.ssl_source = parts.ssl_source ? ssl_term(batch.source_ssl, 0) : g.scalar(0.0);
  out.ssl_target = parts.ssl_target ? ssl_term(batch.target_ssl, batch.source_ssl.size()) : g.scalar(0.0);
  total = ad::add(total, ad::scale(out.ssl_source, weights.ssl_source));
  total = ad::add(total, ad::scale(out.ssl_target, weights.ssl_target));
  out.total = total;
  return out;
}

LossValues loss_values(const LossTensors& t) {
  LossValues v;
  v.total = t.total.item();
  v.cls_source = t.cls_source.item();
  v.cls_target = t.cls_target.valid() ? t.cls_target.item() : 0.0;
  v.ssl_source = t.ssl_source.item();
  v.ssl_target = t.ssl_target.item();
  return v;
}

LossValues combined_loss(const ModelParams& params, const LossBatch& batch, const SslMask& mask,
                         const LossWeights& weights) {
  Graph g;
  const BoundModel m = bind(g, params, false);
  return loss_values(build_combined_loss(g, m, batch, mask, weights));
}

}  // namespace skewgrad

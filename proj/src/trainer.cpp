// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0

#include "skewgrad/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "skewgrad/config.hpp"
#include "skewgrad/saliency.hpp"

namespace skewgrad {

using nlohmann::json;

void TrainingLog::append(const TrainingLog& other) {
  steps.insert(steps.end(), other.steps.begin(), other.steps.end());
  conflicts.insert(conflicts.end(), other.conflicts.begin(), other.conflicts.end());
  sample_conflicts.insert(sample_conflicts.end(), other.sample_conflicts.begin(), other.sample_conflicts.end());
}

// ---------------------------------------------------------------------------
// Optimizers

namespace {

void check_same_layout(const ModelParams& a, const ModelParams& b, const char* op) {
  const auto na = a.named();
  const auto nb = b.named();
  if (na.size() != nb.size()) throw ad::ShapeError(std::string(op) + ": layer count mismatch");
  for (std::size_t i = 0; i < na.size(); ++i) {
    if (ad::shape_of(*na[i].second) != ad::shape_of(*nb[i].second)) {
      throw ad::ShapeError(std::string(op) + ": " + na[i].first + " shape mismatch " +
                           ad::shape_of(*na[i].second).str() + " vs " + ad::shape_of(*nb[i].second).str());
    }
  }
}

}  // namespace

void sgd_step(ModelParams& params, const ModelParams& grads, Real lr) {
  check_same_layout(params, grads, "sgd_step");
  auto p = params.named_mut();
  const auto g = grads.named();
  for (std::size_t i = 0; i < p.size(); ++i) *p[i].second -= lr * *g[i].second;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& cfg) {
  check_same_layout(params, grads, "adam_step");
  if (!state.m) state.m = params.zeros_like();
  if (!state.v) state.v = params.zeros_like();
  ++state.t;
  const Real b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const Real c1 = 1.0 - std::pow(b1, static_cast<Real>(state.t));
  const Real c2 = 1.0 - std::pow(b2, static_cast<Real>(state.t));
  auto p = params.named_mut();
  auto m = state.m->named_mut();
  auto v = state.v->named_mut();
  const auto g = grads.named();
  for (std::size_t i = 0; i < p.size(); ++i) {
    *m[i].second = b1 * *m[i].second + (1.0 - b1) * *g[i].second;
    *v[i].second = b2 * *v[i].second + (1.0 - b2) * g[i].second->cwiseAbs2();
    const Matrix mhat = *m[i].second / c1;
    const Matrix vhat = *v[i].second / c2;
    *p[i].second -= cfg.learning_rate * mhat.cwiseQuotient((vhat.cwiseSqrt().array() + cfg.adam_eps).matrix());
  }
}

// ---------------------------------------------------------------------------
// Evaluation

int argmax_lowest(std::span<const Real> values) {
  if (values.empty()) throw std::invalid_argument("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best);
}

std::vector<Real> softmax(const Matrix& logits) {
  const Real m = logits.maxCoeff();
  std::vector<Real> p(static_cast<std::size_t>(logits.size()));
  Real z = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits.data()[i] - m);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

int predict(const ModelParams& params, const PointCloud& pc) { return argmax_lowest(softmax(class_logits(params, pc))); }

EvalResult evaluate_predictions(std::span<const int> truth, std::span<const int> predicted, int classes) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("evaluate: truth/prediction length mismatch");
  EvalResult r;
  const auto k = static_cast<std::size_t>(classes);
  r.confusion.assign(k, std::vector<std::size_t>(k, 0));
  r.total = truth.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    r.confusion.at(static_cast<std::size_t>(truth[i])).at(static_cast<std::size_t>(predicted[i]))++;
    correct += truth[i] == predicted[i] ? 1 : 0;
  }
  r.accuracy = r.total ? static_cast<Real>(correct) / static_cast<Real>(r.total) : 0.0;
  r.per_class_accuracy.assign(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t row = std::accumulate(r.confusion[c].begin(), r.confusion[c].end(), std::size_t{0});
    r.per_class_accuracy[c] = row ? static_cast<Real>(r.confusion[c][c]) / static_cast<Real>(row) : 0.0;
  }
  return r;
}

EvalResult evaluate(const ModelParams& params, const DomainDataset& dataset) {
  std::vector<int> truth, predicted;
  truth.reserve(dataset.size());
  predicted.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    truth.push_back(dataset.labels_hidden() ? dataset.reveal_label(i, LabelAccess::Evaluate)
                                            : dataset[i].label.value());
    predicted.push_back(predict(params, dataset[i]));
  }
  return evaluate_predictions(truth, predicted, params.dims.classes);
}

PseudoLabeled generate_pseudo_labels(const ModelParams& params, const DomainDataset& target) {
  PseudoLabeled out{target, {}};
  out.confidence.reserve(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const auto probs = softmax(class_logits(params, target[i]));
    const int label = argmax_lowest(probs);
    out.data.set_visible_label(i, label);
    out.confidence.push_back(probs[static_cast<std::size_t>(label)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trainer

namespace {

std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void rng_from_string(std::mt19937_64& rng, const std::string& s) {
  std::istringstream is(s);
  is >> rng;
  if (!is) throw FormatError("corrupt rng state");
}

std::vector<std::size_t> sample_without_replacement(std::size_t population, std::size_t k, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(population);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, population - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

// Saliency on diverged weights surfaces as a non-finite gradient or score.
std::vector<SkewnessRecord> measure_or_diverge(const ModelParams& params, std::span<const PointCloud* const> batch,
                                               std::span<const int> labels, Real alpha, std::size_t step) {
  std::vector<SkewnessRecord> records;
  try {
    records = measure_batch(params, batch, labels, alpha);
  } catch (const std::runtime_error& e) {
    throw DivergenceError(step, e.what());
  }
  for (const auto& r : records) {
    if (!std::isfinite(r.skewness)) {
      throw DivergenceError(step, "non-finite skewness for sample " + std::to_string(r.sample_id));
    }
  }
  return records;
}

}  // namespace

Trainer::Trainer(TrainConfig config, const DomainDataset& source, const DomainDataset& target, int stage,
                 ModelParams params, std::size_t start_step, std::span<const Real> confidence)
    : config_(std::move(config)),
      source_(&source),
      target_(&target),
      stage_(stage),
      params_(std::move(params)),
      batch_rng_(mix_seed(config_.seed, 0xB47C0000ULL + static_cast<std::uint64_t>(stage))),
      mask_rng_(mix_seed(config_.seed, 0x3A5C0000ULL + static_cast<std::uint64_t>(stage))),
      step_(start_step),
      confidence_(confidence.begin(), confidence.end()) {
  config_.validate();
  params_.validate();
  if (stage != 1 && stage != 2) throw std::invalid_argument("stage must be 1 or 2");
  if (source.size() < config_.batch_size || target.size() < config_.batch_size) {
    throw ConfigError("batch_size", "larger than a domain dataset");
  }
  if (source.domain() != Domain::Source || target.domain() != Domain::Target) {
    throw std::invalid_argument("trainer expects (source, target) datasets");
  }
  for (const auto& s : source.samples()) {
    if (!s.label) throw std::invalid_argument("source sample " + std::to_string(s.id) + " has no label");
  }
  if (stage == 2) {
    for (const auto& s : target.samples()) {
      if (!s.label) throw std::invalid_argument("stage 2 needs pseudo-labels; sample " + std::to_string(s.id));
    }
    if (!confidence_.empty() && confidence_.size() != target.size()) {
      throw std::invalid_argument("confidence length does not match target dataset");
    }
  }
}

Trainer::Batch Trainer::assemble() {
  Batch b;
  const std::size_t bs = config_.batch_size;
  b.source_idx = sample_without_replacement(source_->size(), bs, batch_rng_);
  b.target_idx = sample_without_replacement(target_->size(), bs, batch_rng_);
  const std::uint64_t step_seed = mix_seed(config_.seed, step_);
  for (std::size_t i : b.source_idx) {
    const PointCloud& pc = (*source_)[i];
    b.loss.source.push_back(&pc);
    b.loss.source_labels.push_back(*pc.label);
    b.loss.source_ssl.push_back(make_ssl_sample(pc, mix_seed(step_seed, pc.id)));
  }
  for (std::size_t i : b.target_idx) {
    const PointCloud& pc = (*target_)[i];
    b.loss.target_ssl.push_back(make_ssl_sample(pc, mix_seed(step_seed, pc.id)));
    if (stage_ == 2) {
      const Real conf = confidence_.empty() ? 1.0 : confidence_[i];
      if (conf >= config_.pseudo_label_threshold) {
        b.loss.target_cls.push_back(&pc);
        b.loss.target_cls_labels.push_back(*pc.label);
      }
    }
  }
  return b;
}

SslMask Trainer::make_mask(const Batch& b, std::vector<SkewnessRecord>& source_records, std::optional<Real>& tau) {
  const std::size_t bs = config_.batch_size;
  SslMask mask(2 * bs, 1);
  switch (config_.selection_mode) {
    case SelectionMode::All:
      break;
    case SelectionMode::None:
      std::fill(mask.begin(), mask.end(), 0);
      break;
    case SelectionMode::RandomFreeze: {
      const auto frozen = static_cast<std::size_t>(std::floor(static_cast<Real>(bs) * config_.freeze_fraction));
      for (std::size_t block = 0; block < 2; ++block) {
        for (std::size_t i : sample_without_replacement(bs, frozen, mask_rng_)) mask[block * bs + i] = 0;
      }
      break;
    }
    case SelectionMode::SmDsb: {
      source_records = measure_or_diverge(params_, b.loss.source, b.loss.source_labels, config_.alpha, step_);
      if (stage_ == 1) {
        // Stage 1 scores the source batch only; target SSL samples all participate.
        const SelectionMask sel = select(source_records, config_.beta, config_.invert_selection);
        std::copy(sel.lambdas.begin(), sel.lambdas.end(), mask.begin());
        tau = sel.tau;
      } else {
        std::vector<const PointCloud*> tgt;
        std::vector<int> labels;
        for (std::size_t i : b.target_idx) {
          tgt.push_back(&(*target_)[i]);
          labels.push_back(*(*target_)[i].label);  // pseudo-label
        }
        std::vector<SkewnessRecord> all = source_records;
        const auto target_records = measure_or_diverge(params_, tgt, labels, config_.alpha, step_);
        all.insert(all.end(), target_records.begin(), target_records.end());
        const auto perturbed =
            perturb_target_scores(all, mix_seed(config_.seed ^ 0x5EEDULL, step_), config_.perturb_mu, config_.perturb_sigma);
        const SelectionMask sel = select(perturbed, config_.beta, config_.invert_selection);
        mask = sel.lambdas;
        tau = sel.tau;
      }
      break;
    }
  }
  return mask;
}

ConflictRecord Trainer::audit(const Batch& b, const SslMask& mask, std::vector<SkewnessRecord>& source_records) {
  AuditBatch a;
  a.batch = b.loss;
  a.mask = mask;
  a.weights = config_.loss_weights;
  a.target = target_;
  a.target_indices = b.target_idx;
  a.step = step_;

  const auto cls = grad_for_task(params_, a, GradTask::Cls);
  const auto ssl_s = grad_for_task(params_, a, GradTask::SslSource);
  const auto ssl_t = grad_for_task(params_, a, GradTask::SslTarget);
  const auto total = grad_for_task(params_, a, GradTask::Sum);
  const auto oracle = grad_for_task(params_, a, GradTask::Oracle);

  std::vector<Real> ssl(ssl_s.vector.size());
  ConflictRecord rec;
  rec.step = step_;
  for (std::size_t i = 0; i < ssl.size(); ++i) {
    ssl[i] = ssl_s.vector[i] + ssl_t.vector[i];
    rec.linearity_error = std::max(rec.linearity_error, std::abs(total.vector[i] - (cls.vector[i] + ssl[i])));
  }
  rec.sim_sum_oracle = cosine_similarity(total, oracle);
  rec.sim_ssl_cls = cosine_similarity(ssl, cls.vector);
  rec.sim_ssl_oracle = cosine_similarity(ssl, oracle.vector);

  if (source_records.empty()) {
    source_records = measure_or_diverge(params_, b.loss.source, b.loss.source_labels, config_.alpha, step_);
  }
  Real mean = 0.0;
  for (const auto& r : source_records) mean += r.skewness;
  rec.mean_skewness = mean / static_cast<Real>(source_records.size());

  if (config_.diag_per_sample) {
    // Per-sample SSL gradient of each source sample, unmasked.
    for (std::size_t i = 0; i < b.loss.source_ssl.size(); ++i) {
      AuditBatch one = a;
      one.mask.assign(mask.size(), 0);
      one.mask[i] = 1;
      const auto g = grad_for_task(params_, one, GradTask::SslSource);
      audit_.sample_conflicts.push_back(
          {step_, source_records[i].sample_id, source_records[i].skewness, cosine_similarity(g, oracle)});
    }
  }
  audit_.conflicts.push_back(rec);
  return rec;
}

StepRecord Trainer::step() {
  ++step_;
  ++stage_step_;
  const Batch b = assemble();
  std::vector<SkewnessRecord> source_records;
  std::optional<Real> tau;
  const SslMask mask = make_mask(b, source_records, tau);

  StepRecord rec;
  rec.stage = stage_;
  rec.step = step_;
  rec.tau = tau;
  rec.retained_count = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));

  ModelParams grads;
  {
    ad::Graph g;
    const BoundModel m = bind(g, params_, true);
    const LossTensors lt = build_combined_loss(g, m, b.loss, mask, config_.loss_weights);
    rec.loss = loss_values(lt);
    if (!std::isfinite(rec.loss.total)) throw DivergenceError(step_, "loss is not finite");
    g.backward(lt.total);
    grads = collect_grads(m, params_);
  }

  if (config_.diag_stride > 0 && step_ % config_.diag_stride == 0) {
    rec.conflict = audit(b, mask, source_records);
  }

  if (config_.optimizer == OptimizerKind::Sgd) {
    sgd_step(params_, grads, config_.learning_rate);
  } else {
    adam_step(params_, grads, adam_, config_);
  }
  if (!params_.all_finite()) throw DivergenceError(step_, "parameters are not finite");
  return rec;
}

void Trainer::run(std::size_t n, TrainingLog& log) {
  const std::size_t audits_before = audit_.conflicts.size();
  const std::size_t samples_before = audit_.sample_conflicts.size();
  for (std::size_t i = 0; i < n; ++i) log.steps.push_back(step());
  log.conflicts.insert(log.conflicts.end(), audit_.conflicts.begin() + static_cast<std::ptrdiff_t>(audits_before),
                       audit_.conflicts.end());
  log.sample_conflicts.insert(log.sample_conflicts.end(),
                              audit_.sample_conflicts.begin() + static_cast<std::ptrdiff_t>(samples_before),
                              audit_.sample_conflicts.end());
}

TrainerState Trainer::state() const {
  TrainerState s;
  s.config = config_;
  s.stage = stage_;
  s.step = step_;
  s.stage_step = stage_step_;
  s.params = params_;
  s.adam = adam_;
  s.batch_rng = rng_to_string(batch_rng_);
  s.mask_rng = rng_to_string(mask_rng_);
  if (stage_ == 2) {
    for (const auto& pc : target_->samples()) s.pseudo_labels.push_back(pc.label.value_or(-1));
    s.confidence = confidence_;
  }
  return s;
}

Trainer Trainer::restore(const TrainerState& state, const DomainDataset& source, const DomainDataset& raw_target) {
  std::shared_ptr<DomainDataset> pseudo;
  if (state.stage == 2) {
    if (state.pseudo_labels.size() != raw_target.size()) {
      throw std::invalid_argument("checkpoint pseudo-labels do not match the target dataset");
    }
    pseudo = std::make_shared<DomainDataset>(raw_target);
    for (std::size_t i = 0; i < pseudo->size(); ++i) pseudo->set_visible_label(i, state.pseudo_labels[i]);
  }
  Trainer t(state.config, source, pseudo ? *pseudo : raw_target, state.stage, state.params, state.step,
            state.confidence);
  t.owned_target_ = pseudo;
  t.stage_step_ = state.stage_step;
  t.adam_ = state.adam;
  rng_from_string(t.batch_rng_, state.batch_rng);
  rng_from_string(t.mask_rng_, state.mask_rng);
  return t;
}

// ---------------------------------------------------------------------------

namespace {

StageResult run_stage(Trainer& t, std::size_t steps, const StepCallback& on_step) {
  StageResult r;
  for (std::size_t i = 0; i < steps; ++i) {
    t.run(1, r.log);
    if (on_step) on_step(t);
  }
  r.params = t.params();
  r.state = t.state();
  return r;
}

}  // namespace

StageResult train_stage1(const TrainConfig& config, const DomainDataset& source, const DomainDataset& target,
                         const StepCallback& on_step) {
  Trainer t(config, source, target, 1, init_params(config.model, mix_seed(config.seed, 0x1217ULL)));
  return run_stage(t, config.steps_stage1, on_step);
}

StageResult train_stage2(const TrainConfig& config, const DomainDataset& source, const PseudoLabeled& target,
                         ModelParams params, const StepCallback& on_step) {
  Trainer t(config, source, target.data, 2, std::move(params), config.steps_stage1, target.confidence);
  return run_stage(t, config.steps_stage2, on_step);
}

TwoStageResult train_two_stage(const TrainConfig& config, const DomainDataset& source, const DomainDataset& target,
                               const StepCallback& on_step) {
  TwoStageResult out;
  StageResult s1 = train_stage1(config, source, target, on_step);
  out.stage1_params = s1.params;
  out.stage1_state = s1.state;
  out.log = std::move(s1.log);
  out.target_eval_stage1 = evaluate(out.stage1_params, target);
  out.pseudo = generate_pseudo_labels(out.stage1_params, target);
  if (config.steps_stage2 > 0) {
    StageResult s2 = train_stage2(config, source, out.pseudo, out.stage1_params, on_step);
    out.params = std::move(s2.params);
    out.final_state = std::move(s2.state);
    out.log.append(s2.log);
  } else {
    out.params = out.stage1_params;
    out.final_state = out.stage1_state;
  }
  out.source_eval = evaluate(out.params, source);
  out.target_eval = evaluate(out.params, target);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json params_to_json(const ModelParams& p) {
  json layers = json::array();
  for (const auto& [name, m] : p.named()) {
    layers.push_back({{"name", name},
                      {"shape", {m->rows(), m->cols()}},
                      {"values", std::vector<Real>(m->data(), m->data() + m->size())}});
  }
  return layers;
}

void params_from_json(const json& layers, ModelParams& p) {
  auto named = p.named_mut();
  if (!layers.is_array() || layers.size() != named.size()) throw FormatError("checkpoint: layer count mismatch");
  for (std::size_t i = 0; i < named.size(); ++i) {
    const json& l = layers[i];
    if (l.at("name").get<std::string>() != named[i].first) {
      throw FormatError("checkpoint: expected layer " + named[i].first);
    }
    const auto shape = l.at("shape").get<std::vector<Eigen::Index>>();
    const auto values = l.at("values").get<std::vector<Real>>();
    if (shape.size() != 2 || shape[0] != named[i].second->rows() || shape[1] != named[i].second->cols() ||
        static_cast<Eigen::Index>(values.size()) != shape[0] * shape[1]) {
      throw FormatError("checkpoint: bad shape for " + named[i].first);
    }
    *named[i].second = Eigen::Map<const Matrix>(values.data(), shape[0], shape[1]);
  }
}

}  // namespace

void save_checkpoint(const TrainerState& s, const std::filesystem::path& path) {
  json j;
  j["version"] = kCheckpointVersion;
  j["config"] = to_json(s.config);
  j["stage"] = s.stage;
  j["step"] = s.step;
  j["stage_step"] = s.stage_step;
  j["layers"] = params_to_json(s.params);
  j["rng_state"] = {{"batch", s.batch_rng}, {"mask", s.mask_rng}};
  json opt{{"kind", optimizer_name(s.config.optimizer)}, {"t", s.adam.t}};
  if (s.adam.m) opt["m"] = params_to_json(*s.adam.m);
  if (s.adam.v) opt["v"] = params_to_json(*s.adam.v);
  j["optimizer"] = opt;
  j["pseudo_labels"] = s.pseudo_labels;
  j["confidence"] = s.confidence;

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out << j.dump() << "\n";
    if (!out) throw FormatError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

TrainerState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path.string());
  TrainerState s;
  try {
    const json j = json::parse(in);
    const int version = j.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw FormatError("checkpoint version " + std::to_string(version) + " (expected " +
                        std::to_string(kCheckpointVersion) + ")");
    }
    s.config = train_config_from_json(j.at("config"));
    s.config.validate();
    s.stage = j.at("stage").get<int>();
    s.step = j.at("step").get<std::size_t>();
    s.stage_step = j.at("stage_step").get<std::size_t>();
    s.params = init_params(s.config.model, 0);
    params_from_json(j.at("layers"), s.params);
    s.batch_rng = j.at("rng_state").at("batch").get<std::string>();
    s.mask_rng = j.at("rng_state").at("mask").get<std::string>();
    std::mt19937_64 probe;
    rng_from_string(probe, s.batch_rng);
    rng_from_string(probe, s.mask_rng);
    const json& opt = j.at("optimizer");
    s.adam.t = opt.at("t").get<std::size_t>();
    if (opt.contains("m")) {
      s.adam.m = s.params.zeros_like();
      params_from_json(opt.at("m"), *s.adam.m);
    }
    if (opt.contains("v")) {
      s.adam.v = s.params.zeros_like();
      params_from_json(opt.at("v"), *s.adam.v);
    }
    s.pseudo_labels = j.at("pseudo_labels").get<std::vector<int>>();
    s.confidence = j.at("confidence").get<std::vector<Real>>();
  } catch (const json::exception& e) {
    throw FormatError("corrupt checkpoint " + path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError("corrupt checkpoint " + path.string() + ": " + e.what());
  }
  return s;
}

void write_training_log(const TrainingLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& r : log.steps) {
    json j{{"step", r.step},
           {"stage", r.stage},
           {"L_total", r.loss.total},
           {"L_c_s", r.loss.cls_source},
           {"L_c_t", r.loss.cls_target},
           {"L_ssl_s", r.loss.ssl_source},
           {"L_ssl_t", r.loss.ssl_target},
           {"retained_count", r.retained_count},
           {"tau", r.tau ? json(*r.tau) : json(nullptr)}};
    if (r.conflict) {
      j["sim_sum_oracle"] = r.conflict->sim_sum_oracle;
      j["sim_ssl_cls"] = r.conflict->sim_ssl_cls;
      j["sim_ssl_oracle"] = r.conflict->sim_ssl_oracle;
      j["mean_skewness"] = r.conflict->mean_skewness;
    }
    out << j.dump() << "\n";
  }
}

}  // namespace skewgrad

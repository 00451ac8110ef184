// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion. Optional arguments
// select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "skewgrad/config.hpp"
#include "skewgrad/diagnostics.hpp"
#include "skewgrad/experiments.hpp"
#include "skewgrad/saliency.hpp"
#include "skewgrad/sm_dsb.hpp"
#include "skewgrad/trainer.hpp"
#include "support.hpp"

namespace {

using namespace skewgrad;
using skewgrad::testing::desk_config;
using skewgrad::testing::generic_params;
using skewgrad::testing::TempDir;
using Clock = std::chrono::steady_clock;
using HighPrecision = boost::multiprecision::cpp_bin_float_50;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Autodiff vs central differences

ad::Tensor* slot(BoundModel& m, std::size_t index) {
  std::vector<BoundLayer*> layers;
  for (auto* stack : {&m.encoder, &m.cls_head, &m.ssl_head}) {
    for (auto& l : *stack) layers.push_back(&l);
  }
  BoundLayer* l = layers.at(index / 2);
  return index % 2 == 0 ? &l->weight : &l->bias;
}

Outcome autodiff_gradients() {
  const auto t0 = Clock::now();
  constexpr Real kTol = 1e-4;
  Real worst_smooth = 0.0, worst_raw = 0.0;
  std::size_t kinks = 0, coordinates = 0, max_params = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ModelDims dims{4 + seed % 9, 8 + seed % 17, 4, 4};
    const ModelParams params = generic_params(dims, seed);
    max_params = std::max(max_params, params.parameter_count());
    std::vector<PointCloud> clouds;
    for (std::uint64_t i = 0; i < 2; ++i) {
      clouds.push_back(generate_shape(static_cast<int>((seed + i) % 4), 8 + seed % 17, mix_seed(seed, i)));
      clouds.back().id = i;
    }
    LossBatch batch;
    for (const auto& c : clouds) {
      batch.source.push_back(&c);
      batch.source_labels.push_back(*c.label);
      batch.source_ssl.push_back(make_ssl_sample(c, mix_seed(seed, 10 + c.id)));
      batch.target_ssl.push_back(make_ssl_sample(c, mix_seed(seed, 20 + c.id)));
    }
    const SslMask mask = {1, 1, 1, 0};
    const auto named = params.named();

    auto record = [&](const ad::GradCheckReport& r) {
      worst_smooth = std::max(worst_smooth, r.max_relative_error_smooth);
      worst_raw = std::max(worst_raw, r.max_relative_error);
      kinks += r.kink_coordinates;
      coordinates += static_cast<std::size_t>(r.analytic.size());
    };
    for (std::size_t li = 0; li < named.size(); ++li) {
      const ad::ScalarFn f = [&](ad::Graph& g, const ad::Tensor& x) {
        BoundModel m = bind(g, params, false);
        *slot(m, li) = x;
        return build_combined_loss(g, m, batch, mask, {}).total;
      };
      record(ad::finite_difference_check(f, *named[li].second, 1e-5));
    }
    // Input coordinates, as used by saliency.
    const ad::ScalarFn by_points = [&](ad::Graph& g, const ad::Tensor& x) {
      const BoundModel m = bind(g, params, false);
      const int label[1] = {*clouds[0].label};
      return ad::softmax_cross_entropy(classify(m, encode(m, x)), label);
    };
    record(ad::finite_difference_check(by_points, clouds[0].points, 1e-5));
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst_smooth <= kTol && secs < 30.0 && max_params <= 5000;
  o.detail = fmt("100 networks (<= %zu params), %zu coordinates: max rel err %.2e <= %.0e "
                 "(%zu kink-crossing coordinates screened, unscreened max %.2e); %.1f s < 30 s",
                 max_params, coordinates, worst_smooth, kTol, kinks, worst_raw, secs);
  return o;
}

// ---------------------------------------------------------------------------
// 2. Saliency vs radial finite differences

Outcome saliency_oracle() {
  const auto t0 = Clock::now();
  constexpr Real kTol = 1e-3;
  constexpr Real kDelta = 1e-4;
  const Real alphas[3] = {0.5, 1.0, 2.0};
  Real worst = 0.0;
  std::size_t points = 0, kinks = 0, nonzero = 0;
  const ShiftConfig shift = BenchmarkConfig::default_target_shift();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const ModelParams params = generic_params(ModelDims{32, 64, 4, 4}, 1000 + seed);
    PointCloud pc = generate_shape(static_cast<int>(seed % 4), 64, mix_seed(77, seed));
    if (seed % 2 == 1) pc = apply_domain_shift(pc, shift, mix_seed(78, seed));
    const Real alpha = alphas[seed % 3];
    const int label = *pc.label;
    const SaliencyMap map = saliency_map(params, pc, label, alpha);

    const Eigen::RowVector3d core = spherical_core(pc.points);  // frozen
    std::uint64_t base_sig = 0;
    auto loss_at = [&](const Matrix& pts, std::uint64_t* sig) {
      ad::Graph g;
      const BoundModel m = bind(g, params, false);
      const int lab[1] = {label};
      const Real v = ad::softmax_cross_entropy(classify(m, encode(m, g.constant(pts))), lab).item();
      *sig = g.branch_signature();
      return v;
    };
    loss_at(pc.points, &base_sig);
    Matrix probe = pc.points;
    for (Eigen::Index i = 0; i < probe.rows(); ++i) {
      const Eigen::RowVector3d d = pc.points.row(i) - core;
      const Real r = d.norm();
      const Eigen::RowVector3d u = d / r;
      std::uint64_t s_up = 0, s_down = 0;
      probe.row(i) = pc.points.row(i) + kDelta * u;
      const Real up = loss_at(probe, &s_up);
      probe.row(i) = pc.points.row(i) - kDelta * u;
      const Real down = loss_at(probe, &s_down);
      probe.row(i) = pc.points.row(i);
      ++points;
      if (s_up != base_sig || s_down != base_sig) {
        ++kinks;
        continue;
      }
      const Real oracle = -(up - down) / (2.0 * kDelta) * std::pow(r, 1.0 + alpha);
      const Real s = map.scores[static_cast<std::size_t>(i)];
      if (s != 0.0) ++nonzero;
      worst = std::max(worst, std::abs(s - oracle) / (std::abs(s) + 1e-12));
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = worst <= kTol && secs < 60.0;
  o.detail = fmt("50 (model, sample) pairs, %zu points (%zu nonzero scores): max rel err %.2e <= %.0e "
                 "(delta 1e-4, core frozen, %zu kink-crossing points screened); %.1f s < 60 s",
                 points, nonzero, worst, kTol, kinks, secs);
  return o;
}

// ---------------------------------------------------------------------------
// 3. Skewness vs 50-digit evaluation

Real skewness_oracle(const std::vector<Real>& v) {
  HighPrecision n = static_cast<double>(v.size());
  HighPrecision mean = 0;
  for (Real x : v) mean += HighPrecision(x);
  mean /= n;
  HighPrecision m2 = 0, m3 = 0;
  for (Real x : v) {
    const HighPrecision d = HighPrecision(x) - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 == 0) return 0.0;
  return static_cast<Real>(m3 / (m2 * boost::multiprecision::sqrt(m2)));
}

Outcome skewness_exact() {
  constexpr Real kTol = 1e-9;
  std::mt19937_64 rng(2024);
  Real worst = 0.0, worst_sym = 0.0, worst_affine = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 8 + rng() % 249;
    std::vector<Real> v(n);
    switch (t % 4) {
      case 0: {
        std::normal_distribution<Real> d(0.0, 1.0);
        for (auto& x : v) x = d(rng);
        break;
      }
      case 1: {
        std::exponential_distribution<Real> d(2.0);
        for (auto& x : v) x = d(rng);
        break;
      }
      case 2: {
        std::lognormal_distribution<Real> d(0.0, 1.0);
        for (auto& x : v) x = d(rng);
        break;
      }
      default: {
        std::uniform_real_distribution<Real> d(-3.0, 5.0);
        for (auto& x : v) x = d(rng) * d(rng);
      }
    }
    worst = std::max(worst, std::abs(skewness(v) - skewness_oracle(v)));

    // Mirror around an arbitrary center.
    std::vector<Real> sym = v;
    const Real center = v[0];
    for (Real x : v) sym.push_back(2.0 * center - x);
    worst_sym = std::max(worst_sym, std::abs(skewness(sym)));

    std::uniform_real_distribution<Real> a_dist(0.1, 10.0), b_dist(-10.0, 10.0);
    const Real a = a_dist(rng), b = b_dist(rng);
    std::vector<Real> affine(v.size());
    std::transform(v.begin(), v.end(), affine.begin(), [&](Real x) { return a * x + b; });
    worst_affine = std::max(worst_affine, std::abs(skewness(affine) - skewness(v)));
  }
  const std::vector<Real> small = {1.0, 2.0, 9.0};
  const Real sk = skewness(small);
  Outcome o;
  o.pass = worst <= kTol && worst_sym <= kTol && worst_affine <= kTol && std::abs(sk - 0.6655) < 5e-5 &&
           std::abs(sk - skewness_oracle(small)) <= kTol;
  o.detail = fmt("1000 vectors: max |err| %.1e, symmetric max |sk| %.1e, affine max |diff| %.1e (all <= 1e-9); "
                 "{1,2,9} -> %.6f",
                 worst, worst_sym, worst_affine, sk);
  return o;
}

// ---------------------------------------------------------------------------
// 4. Selection contract

// Included iff fewer than k-1 scores are strictly below it, counted directly.
std::vector<std::uint8_t> selection_oracle(const std::vector<Real>& scores, Real beta) {
  const std::size_t b = scores.size();
  const long long rounded = static_cast<long long>(std::floor(static_cast<long double>(b) * beta + 0.5L + 1e-9L));
  const std::size_t k = static_cast<std::size_t>(std::clamp<long long>(rounded, 1, static_cast<long long>(b)));
  Real tau = 0.0;
  for (Real candidate : scores) {
    const auto below = std::count_if(scores.begin(), scores.end(), [&](Real s) { return s < candidate; });
    if (static_cast<std::size_t>(below) == k - 1) tau = candidate;
  }
  std::vector<std::uint8_t> out;
  for (Real s : scores) out.push_back(s < tau ? 1 : 0);
  return out;
}

Outcome selection_contract() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(99);
  std::size_t cases = 0, failures = 0;
  std::string first_failure;
  auto fail = [&](const std::string& what) {
    if (failures++ == 0) first_failure = what;
  };
  for (std::size_t b = 2; b <= 16; ++b) {
    for (int trial = 0; trial < 20; ++trial) {
      // Distinct scores in random order.
      std::vector<Real> scores(b);
      std::uniform_real_distribution<Real> u(-1.0, 4.0);
      std::set<Real> seen;
      for (auto& s : scores) {
        do s = u(rng);
        while (!seen.insert(s).second);
      }
      std::vector<SkewnessRecord> records;
      for (std::size_t i = 0; i < b; ++i) records.push_back({i, scores[i]});
      const std::size_t argmax = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());

      std::vector<std::uint8_t> previous(b, 0);
      for (int bi = 1; bi <= 10; ++bi) {
        const Real beta = bi / 10.0;
        ++cases;
        const SelectionMask mask = select(records, beta);
        const std::string tag = fmt("B=%zu beta=%.1f trial %d", b, beta, trial);
        if (mask.lambdas != selection_oracle(scores, beta)) fail(tag + ": differs from enumeration oracle");
        const long long expected = std::max<long long>(std::llround(b * beta + 1e-9), 1) - 1;
        if (static_cast<long long>(mask.retained()) != expected) {
          fail(tag + fmt(": retained %zu, expected %lld", mask.retained(), expected));
        }
        if (mask.lambdas[argmax] != 0) fail(tag + ": max-skewness sample retained");
        for (std::size_t i = 0; i < b; ++i) {
          if (previous[i] && !mask.lambdas[i]) fail(tag + ": retained set shrank as beta grew");
        }
        previous = mask.lambdas;

        // Permutation equivariance.
        std::vector<std::size_t> perm(b);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<SkewnessRecord> permuted;
        for (std::size_t i = 0; i < b; ++i) permuted.push_back(records[perm[i]]);
        const SelectionMask pm = select(permuted, beta);
        bool equivariant = pm.tau == mask.tau;
        for (std::size_t i = 0; i < b; ++i) equivariant = equivariant && pm.lambdas[i] == mask.lambdas[perm[i]];
        if (!equivariant) fail(tag + ": not permutation equivariant");
      }
    }
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = failures == 0 && secs < 10.0;
  o.detail = fmt("B in 2..16 x beta in 0.1..1.0 x 20 score draws = %zu cases: %zu violations; %.2f s < 10 s", cases,
                 failures, secs);
  if (failures) o.detail += "; first: " + first_failure;
  return o;
}

// ---------------------------------------------------------------------------
// 5. Gradient linearity on a live run

Outcome gradient_linearity(const Benchmark& bench) {
  ExperimentConfig cfg = desk_config();
  cfg.train.steps_stage1 = 10;
  cfg.train.steps_stage2 = 10;
  cfg.train.diag_stride = 1;
  const TwoStageResult r = train_two_stage(cfg.train, bench.source, bench.target);
  Real worst = 0.0;
  for (const auto& c : r.log.conflicts) worst = std::max(worst, c.linearity_error);
  Outcome o;
  o.pass = r.log.conflicts.size() == 20 && worst <= 1e-10;
  o.detail = fmt("%zu audited steps (10 per stage): max |Sum - (Cls + SslSource + SslTarget)| = %.2e <= 1e-10",
                 r.log.conflicts.size(), worst);
  return o;
}

// ---------------------------------------------------------------------------
// 6 and 7 share one set of runs.

struct ModeRuns {
  PilotResult pilot;
  double seconds = 0.0;
  MeanStd of(SelectionMode m) const {
    for (const auto& s : pilot.summary) {
      if (s.mode == m) return s.target_accuracy;
    }
    return {};
  }
};

ModeRuns& mode_runs(const Benchmark& bench) {
  static ModeRuns runs = [&] {
    ModeRuns r;
    const auto t0 = Clock::now();
    r.pilot = pilot_random_freeze(desk_config(), bench);
    r.seconds = seconds_since(t0);
    return r;
  }();
  return runs;
}

Outcome pilot_reproduction(const Benchmark& bench) {
  const ModeRuns& runs = mode_runs(bench);
  const MeanStd all = runs.of(SelectionMode::All);
  const MeanStd freeze = runs.of(SelectionMode::RandomFreeze);
  Outcome o;
  o.pass = freeze.mean >= all.mean - 0.02 && runs.seconds < 600.0;
  o.detail = fmt("5-seed target accuracy: RandomFreeze(0.5) %.2f%% +- %.2f vs All %.2f%% +- %.2f "
                 "(need >= All - 2.0); mode runs %.0f s < 600 s",
                 100 * freeze.mean, 100 * freeze.std, 100 * all.mean, 100 * all.std, runs.seconds);
  return o;
}

Outcome smdsb_benefit(const Benchmark& bench) {
  const ModeRuns& runs = mode_runs(bench);
  const MeanStd all = runs.of(SelectionMode::All);
  const MeanStd sm = runs.of(SelectionMode::SmDsb);
  std::vector<Real> rhos, sm_rhos;
  for (std::size_t i = 0; i < runs.pilot.rows.size(); ++i) {
    std::vector<Real> sk, sim;
    for (const auto& c : runs.pilot.logs[i].conflicts) {
      sk.push_back(c.mean_skewness);
      sim.push_back(c.sim_ssl_oracle);
    }
    const Real rho = correlation(sk, sim).spearman;
    if (runs.pilot.rows[i].mode == SelectionMode::All) rhos.push_back(rho);
    if (runs.pilot.rows[i].mode == SelectionMode::SmDsb) sm_rhos.push_back(rho);
  }
  const auto negative = std::count_if(rhos.begin(), rhos.end(), [](Real r) { return r <= -0.1; });
  const bool accuracy_ok = sm.mean >= all.mean - 0.005;
  Outcome o;
  o.pass = accuracy_ok && negative >= 4 && runs.seconds < 900.0;
  std::string rho_list, sm_list;
  for (Real r : rhos) rho_list += fmt("%s%.2f", rho_list.empty() ? "" : ",", r);
  for (Real r : sm_rhos) sm_list += fmt("%s%.2f", sm_list.empty() ? "" : ",", r);
  o.detail = fmt("target accuracy SmDsb(0.7) %.2f%% vs All %.2f%% (need >= All - 0.5: %s); "
                 "Spearman(mean skewness, sim(G_ssl, G_oracle)) on All-SSL runs [%s]: %ld of 5 <= -0.1 (need 4); "
                 "SmDsb runs [%s]",
                 100 * sm.mean, 100 * all.mean, accuracy_ok ? "met" : "not met", rho_list.c_str(),
                 static_cast<long>(negative), sm_list.c_str());
  return o;
}

// ---------------------------------------------------------------------------
// 8. Conflict report

Outcome conflict_report(const Benchmark& bench) {
  const ModeRuns& runs = mode_runs(bench);
  std::size_t index = 0;
  while (runs.pilot.rows[index].mode != SelectionMode::All) ++index;
  TempDir dir("acceptance");
  const auto path = dir.path() / "conflicts.csv";
  write_conflict_csv(runs.pilot.logs[index].conflicts, path);
  const auto records = read_conflict_csv(path);
  bool bounded = !records.empty();
  std::vector<Real> ssl_cls, sum_oracle;
  for (const auto& r : records) {
    for (Real v : {r.sim_sum_oracle, r.sim_ssl_cls, r.sim_ssl_oracle}) bounded = bounded && v >= -1.0 && v <= 1.0;
    ssl_cls.push_back(r.sim_ssl_cls);
    sum_oracle.push_back(r.sim_sum_oracle);
  }
  const Real rho = correlation(ssl_cls, sum_oracle).spearman;
  Outcome o;
  o.pass = bounded && std::abs(rho) < 0.95;
  o.detail = fmt("conflicts.csv (All-SSL, seed %llu): %zu records, similarities in [-1,1]: %s; "
                 "|Spearman(sim(G_ssl, G_cls), sim(G_sum, G_oracle))| = %.3f < 0.95",
                 static_cast<unsigned long long>(runs.pilot.rows[index].seed), records.size(),
                 bounded ? "yes" : "no", std::abs(rho));
  return o;
}

// ---------------------------------------------------------------------------
// 9. ANM direction

Outcome anm_direction() {
  std::size_t correct = 0;
  const std::size_t trials = 50;
  for (std::size_t t = 0; t < trials; ++t) {
    std::mt19937_64 rng(mix_seed(9, t));
    std::uniform_real_distribution<Real> cause(-1.0, 1.0), noise(-0.3, 0.3);
    std::vector<Real> x(200), y(200);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = cause(rng);
      const Real fx = t % 3 == 0 ? x[i] : t % 3 == 1 ? x[i] + 0.5 * x[i] * x[i] * x[i] : std::tanh(1.5 * x[i]);
      y[i] = fx + noise(rng);
    }
    correct += anm_direction_test(x, y).x_causes_y ? 1 : 0;
  }
  Outcome o;
  o.pass = correct * 10 >= trials * 9;
  o.detail = fmt("%zu of %zu synthetic cause->effect datasets (uniform cause and noise; linear, cubic, tanh "
                 "mechanisms) resolved correctly (need >= 90%%)",
                 correct, trials);
  return o;
}

// ---------------------------------------------------------------------------
// 10. alpha insensitivity

Outcome alpha_insensitivity(const Benchmark& bench) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = desk_config();
  cfg.train.diag_stride = 0;
  cfg.alpha_grid = {0.5, 1.0, 2.0};
  const auto summary = summarize_sweep(run_sweep(cfg, bench));
  const Real spread = accuracy_spread(summary);
  std::string parts;
  for (const auto& s : summary) {
    parts += fmt("%salpha %.1f: %.2f%%", parts.empty() ? "" : ", ", s.alpha, 100 * s.target_accuracy.mean);
  }
  Outcome o;
  o.pass = spread < 0.02;
  o.detail = fmt("5-seed SmDsb target accuracy %s; spread %.2f points < 2.0; %.0f s", parts.c_str(), 100 * spread,
                 seconds_since(t0));
  return o;
}

// ---------------------------------------------------------------------------
// 11. Determinism and persistence

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome determinism(const Benchmark& bench) {
  ExperimentConfig cfg = desk_config();
  cfg.train.steps_stage1 = 40;
  cfg.train.steps_stage2 = 20;
  cfg.train.seed = 7;
  TempDir dir("determinism");

  const TwoStageResult a = train_two_stage(cfg.train, bench.source, bench.target);
  const TwoStageResult b = train_two_stage(cfg.train, bench.source, bench.target);
  save_checkpoint(a.final_state, dir.path() / "a.json");
  save_checkpoint(b.final_state, dir.path() / "b.json");
  const bool identical = file_bytes(dir.path() / "a.json") == file_bytes(dir.path() / "b.json");

  // Interrupt stage 1 after 17 steps and stage 2 after 9, resume from disk.
  Trainer s1(cfg.train, bench.source, bench.target, 1, init_params(cfg.train.model, mix_seed(cfg.train.seed, 0x1217ULL)));
  TrainingLog log;
  s1.run(17, log);
  save_checkpoint(s1.state(), dir.path() / "s1.json");
  Trainer s1r = Trainer::restore(load_checkpoint(dir.path() / "s1.json"), bench.source, bench.target);
  s1r.run(cfg.train.steps_stage1 - 17, log);
  const PseudoLabeled pseudo = generate_pseudo_labels(s1r.params(), bench.target);
  Trainer s2(cfg.train, bench.source, pseudo.data, 2, s1r.params(), s1r.global_step(), pseudo.confidence);
  s2.run(9, log);
  save_checkpoint(s2.state(), dir.path() / "s2.json");
  Trainer s2r = Trainer::restore(load_checkpoint(dir.path() / "s2.json"), bench.source, bench.target);
  s2r.run(cfg.train.steps_stage2 - 9, log);
  save_checkpoint(s2r.state(), dir.path() / "resumed.json");
  const bool resumed = file_bytes(dir.path() / "resumed.json") == file_bytes(dir.path() / "a.json");

  Outcome o;
  o.pass = identical && resumed;
  o.detail = fmt("two runs with seed 7 -> final checkpoints bitwise %s; interrupted + resumed run (both stages) "
                 "-> final checkpoint bitwise %s",
                 identical ? "identical" : "DIFFERENT", resumed ? "identical" : "DIFFERENT");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  auto wanted = [&](int id) { return selected.empty() || selected.count(id) > 0; };

  const Benchmark bench = build_benchmark(desk_config().benchmark);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"autodiff gradients vs central differences", autodiff_gradients},
      {"saliency vs radial finite-difference oracle", saliency_oracle},
      {"skewness vs high-precision evaluation", skewness_exact},
      {"selection contract", selection_contract},
      {"gradient linearity", [&] { return gradient_linearity(bench); }},
      {"random-freeze pilot", [&] { return pilot_reproduction(bench); }},
      {"SM-DSB benefit and skewness/conflict correlation", [&] { return smdsb_benefit(bench); }},
      {"conflict-inconsistency report", [&] { return conflict_report(bench); }},
      {"ANM direction test", anm_direction},
      {"alpha insensitivity", [&] { return alpha_insensitivity(bench); }},
      {"determinism and persistence", [&] { return determinism(bench); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!wanted(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}

// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0

#include "skewgrad/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace skewgrad {

// ---------------------------------------------------------------------------
// CSV

const std::vector<std::string> kConflictHeader = {"step", "sim_sum_oracle", "sim_ssl_cls", "sim_ssl_oracle",
                                                  "mean_skewness"};
const std::vector<std::string> kSampleConflictHeader = {"step", "sample_id", "skewness", "sim_ssl_oracle"};
const std::vector<std::string> kPilotHeader = {"mode", "seed", "target_accuracy"};
const std::vector<std::string> kSweepHeader = {"beta", "alpha", "seed", "step", "target_accuracy"};

namespace {

std::vector<std::string> split_line(const std::string& line, std::size_t line_no) {
  if (line.find('"') != std::string::npos) {
    throw FormatError("csv line " + std::to_string(line_no) + ": quoted fields are not supported");
  }
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (out.back().empty()) throw FormatError("csv line " + std::to_string(line_no) + ": empty field");
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::uint64_t parse_u64(const std::string& field) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) throw FormatError("not an unsigned integer: '" + field + "'");
  return v;
}

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range("csv has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

std::vector<Real> CsvTable::reals(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<Real> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(parse_real(r[c]));
  return out;
}

CsvTable parse_csv(std::istream& in, const std::vector<std::string>& expected_header) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw FormatError("csv: missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  t.header = split_line(line, line_no);
  if (t.header != expected_header) {
    throw FormatError("csv header '" + line + "' (expected '" + join(expected_header) + "')");
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw FormatError("csv line " + std::to_string(line_no) + ": blank line");
    auto row = split_line(line, line_no);
    if (row.size() != t.header.size()) {
      throw FormatError("csv line " + std::to_string(line_no) + ": " + std::to_string(row.size()) + " fields (expected " +
                        std::to_string(t.header.size()) + ")");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return parse_csv(in, expected_header);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << join(table.header) << "\n";
  for (const auto& r : table.rows) {
    if (r.size() != table.header.size()) throw std::invalid_argument("write_csv: ragged row");
    out << join(r) << "\n";
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

std::string format_real(Real v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_real failed");
  return std::string(buf, ptr);
}

Real parse_real(const std::string& field) {
  Real v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw FormatError("not a finite number: '" + field + "'");
  }
  return v;
}

void write_conflict_csv(const std::vector<ConflictRecord>& records, const std::filesystem::path& path) {
  CsvTable t{kConflictHeader, {}};
  for (const auto& r : records) {
    t.rows.push_back({std::to_string(r.step), format_real(r.sim_sum_oracle), format_real(r.sim_ssl_cls),
                      format_real(r.sim_ssl_oracle), format_real(r.mean_skewness)});
  }
  write_csv(path, t);
}

std::vector<ConflictRecord> read_conflict_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path, kConflictHeader);
  std::vector<ConflictRecord> out;
  for (const auto& r : t.rows) {
    ConflictRecord c;
    c.step = parse_u64(r[0]);
    c.sim_sum_oracle = parse_real(r[1]);
    c.sim_ssl_cls = parse_real(r[2]);
    c.sim_ssl_oracle = parse_real(r[3]);
    c.mean_skewness = parse_real(r[4]);
    out.push_back(c);
  }
  return out;
}

void write_sample_conflict_csv(const std::vector<SampleConflict>& records, const std::filesystem::path& path) {
  CsvTable t{kSampleConflictHeader, {}};
  for (const auto& r : records) {
    t.rows.push_back(
        {std::to_string(r.step), std::to_string(r.sample_id), format_real(r.skewness), format_real(r.sim_ssl_oracle)});
  }
  write_csv(path, t);
}

// ---------------------------------------------------------------------------
// Mode comparison

MeanStd mean_std(const std::vector<Real>& values) {
  MeanStd m;
  m.count = values.size();
  if (values.empty()) return m;
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<Real>(values.size());
  if (values.size() > 1) {
    Real ss = 0.0;
    for (Real v : values) ss += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(ss / static_cast<Real>(values.size() - 1));
  }
  return m;
}

PilotResult pilot_random_freeze(const ExperimentConfig& cfg, const Benchmark& bench) {
  cfg.validate();
  if (cfg.seeds.size() < 5) throw ConfigError("seeds", "the mode comparison needs at least 5 seeds");
  PilotResult out;
  for (SelectionMode mode : {SelectionMode::All, SelectionMode::RandomFreeze, SelectionMode::SmDsb}) {
    for (std::uint64_t seed : cfg.seeds) {
      TrainConfig c = cfg.train;
      c.selection_mode = mode;
      c.seed = seed;
      TwoStageResult r = train_two_stage(c, bench.source, bench.target);
      out.rows.push_back({mode, seed, r.target_eval.accuracy});
      out.logs.push_back(std::move(r.log));
    }
  }
  out.summary = summarize_pilot(out.rows);
  return out;
}

std::vector<ModeSummary> summarize_pilot(const std::vector<PilotRow>& rows) {
  std::vector<ModeSummary> out;
  std::vector<std::vector<Real>> values;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const ModeSummary& s) { return s.mode == r.mode; });
    if (it == out.end()) {
      out.push_back({r.mode, {}});
      values.emplace_back();
      it = out.end() - 1;
    }
    values[static_cast<std::size_t>(it - out.begin())].push_back(r.target_accuracy);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].target_accuracy = mean_std(values[i]);
  return out;
}

void write_pilot_csv(const std::vector<PilotRow>& rows, const std::filesystem::path& path) {
  CsvTable t{kPilotHeader, {}};
  for (const auto& r : rows) {
    t.rows.push_back({selection_mode_name(r.mode), std::to_string(r.seed), format_real(r.target_accuracy)});
  }
  write_csv(path, t);
}

std::vector<PilotRow> read_pilot_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path, kPilotHeader);
  std::vector<PilotRow> out;
  for (const auto& r : t.rows) out.push_back({parse_selection_mode(r[0]), parse_u64(r[1]), parse_real(r[2])});
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const Benchmark& bench) {
  cfg.validate();
  const std::vector<Real> betas = cfg.beta_grid.empty() ? std::vector<Real>{cfg.train.beta} : cfg.beta_grid;
  const std::vector<Real> alphas = cfg.alpha_grid.empty() ? std::vector<Real>{cfg.train.alpha} : cfg.alpha_grid;
  std::vector<SweepRow> rows;
  for (Real beta : betas) {
    for (Real alpha : alphas) {
      for (std::uint64_t seed : cfg.seeds) {
        TrainConfig c = cfg.train;
        c.beta = beta;
        c.alpha = alpha;
        c.seed = seed;
        c.validate();
        std::size_t last_step = 0;
        StepCallback on_step;
        if (cfg.eval_stride > 0) {
          on_step = [&](const Trainer& t) {
            if (t.global_step() % cfg.eval_stride == 0) {
              rows.push_back({beta, alpha, seed, t.global_step(), evaluate(t.params(), bench.target).accuracy});
              last_step = t.global_step();
            }
          };
        }
        const TwoStageResult r = train_two_stage(c, bench.source, bench.target, on_step);
        const std::size_t final_step = c.steps_stage1 + c.steps_stage2;
        if (last_step != final_step) rows.push_back({beta, alpha, seed, final_step, r.target_eval.accuracy});
      }
    }
  }
  return rows;
}

std::vector<SweepSummary> summarize_sweep(const std::vector<SweepRow>& rows) {
  // Final step per (beta, alpha, seed).
  std::map<std::tuple<Real, Real, std::uint64_t>, SweepRow> last;
  for (const auto& r : rows) {
    auto& slot = last[{r.beta, r.alpha, r.seed}];
    if (r.step >= slot.step) slot = r;
  }
  std::vector<SweepSummary> out;
  std::vector<std::vector<Real>> values;
  for (const auto& r : rows) {
    const bool seen = std::any_of(out.begin(), out.end(), [&](const SweepSummary& s) {
      return s.beta == r.beta && s.alpha == r.alpha;
    });
    if (!seen) {
      out.push_back({r.beta, r.alpha, {}});
      values.emplace_back();
    }
  }
  for (const auto& [key, r] : last) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out[i].beta == r.beta && out[i].alpha == r.alpha) values[i].push_back(r.target_accuracy);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].target_accuracy = mean_std(values[i]);
  return out;
}

Real accuracy_spread(const std::vector<SweepSummary>& summary) {
  if (summary.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(summary.begin(), summary.end(), [](const auto& a, const auto& b) {
    return a.target_accuracy.mean < b.target_accuracy.mean;
  });
  return hi->target_accuracy.mean - lo->target_accuracy.mean;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  CsvTable t{kSweepHeader, {}};
  for (const auto& r : rows) {
    t.rows.push_back({format_real(r.beta), format_real(r.alpha), std::to_string(r.seed), std::to_string(r.step),
                      format_real(r.target_accuracy)});
  }
  write_csv(path, t);
}

std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path, kSweepHeader);
  std::vector<SweepRow> out;
  for (const auto& r : t.rows) {
    out.push_back({parse_real(r[0]), parse_real(r[1]), parse_u64(r[2]), parse_u64(r[3]), parse_real(r[4])});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conflict diagnosis

DiagnoseResult analyze_conflicts(TwoStageResult run) {
  DiagnoseResult d;
  d.run = std::move(run);
  const auto& records = d.run.log.conflicts;
  std::vector<Real> sk, sim;
  for (const auto& r : records) {
    sk.push_back(r.mean_skewness);
    sim.push_back(r.sim_ssl_oracle);
  }
  if (sk.size() >= 3) d.batch_correlation = correlation(sk, sim);
  if (sk.size() >= 30) d.anm = anm_direction_test(sk, sim);
  const auto& samples = d.run.log.sample_conflicts;
  if (samples.size() >= 3) {
    std::vector<Real> ssk, ssim;
    for (const auto& s : samples) {
      ssk.push_back(s.skewness);
      ssim.push_back(s.sim_ssl_oracle);
    }
    d.sample_correlation = correlation(ssk, ssim);
  }
  return d;
}

DiagnoseResult diagnose(const ExperimentConfig& cfg, const Benchmark& bench) {
  cfg.validate();
  TrainConfig c = cfg.train;
  if (c.diag_stride == 0) c.diag_stride = kDefaultDiagStride;
  return analyze_conflicts(train_two_stage(c, bench.source, bench.target));
}

}  // namespace skewgrad

// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0
//
// Multi-run experiments (mode comparison, hyper-parameter sweeps, conflict
// diagnosis) and the CSV files they emit.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "skewgrad/config.hpp"
#include "skewgrad/diagnostics.hpp"
#include "skewgrad/trainer.hpp"

namespace skewgrad {

// ---------------------------------------------------------------------------
// Strict CSV: fixed header, no quoting, every row has the header's width.

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  std::vector<Real> reals(const std::string& name) const;
};

/// Throws FormatError (with the 1-based line number) on a header mismatch,
/// a ragged row, an empty field or a quote character.
CsvTable parse_csv(std::istream& in, const std::vector<std::string>& expected_header);
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Shortest text that parses back to the same double.
std::string format_real(Real v);
/// Strict: the whole field must be a finite number.
Real parse_real(const std::string& field);

extern const std::vector<std::string> kConflictHeader;
extern const std::vector<std::string> kSampleConflictHeader;
extern const std::vector<std::string> kPilotHeader;
extern const std::vector<std::string> kSweepHeader;

void write_conflict_csv(const std::vector<ConflictRecord>& records, const std::filesystem::path& path);
std::vector<ConflictRecord> read_conflict_csv(const std::filesystem::path& path);
void write_sample_conflict_csv(const std::vector<SampleConflict>& records, const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Mode comparison

struct MeanStd {
  Real mean = 0.0;
  Real std = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t count = 0;
};

MeanStd mean_std(const std::vector<Real>& values);

struct PilotRow {
  SelectionMode mode = SelectionMode::All;
  std::uint64_t seed = 0;
  Real target_accuracy = 0.0;
};

struct ModeSummary {
  SelectionMode mode = SelectionMode::All;
  MeanStd target_accuracy;
};

struct PilotResult {
  std::vector<PilotRow> rows;
  std::vector<ModeSummary> summary;
  std::vector<TrainingLog> logs;  // parallel to rows
};

/// Modes All, RandomFreeze(freeze_fraction), SmDsb on identical benchmark
/// and seeds. Requires at least 5 seeds.
PilotResult pilot_random_freeze(const ExperimentConfig& cfg, const Benchmark& bench);
std::vector<ModeSummary> summarize_pilot(const std::vector<PilotRow>& rows);
void write_pilot_csv(const std::vector<PilotRow>& rows, const std::filesystem::path& path);
std::vector<PilotRow> read_pilot_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  Real beta = 0.0;
  Real alpha = 0.0;
  std::uint64_t seed = 0;
  std::size_t step = 0;
  Real target_accuracy = 0.0;
};

struct SweepSummary {
  Real beta = 0.0;
  Real alpha = 0.0;
  MeanStd target_accuracy;  // over seeds, at the final step
};

/// Every (beta, alpha, seed) in the grids; an empty grid means the single
/// configured value. Rows at every eval_stride global steps (if nonzero)
/// plus the final step.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg, const Benchmark& bench);
std::vector<SweepSummary> summarize_sweep(const std::vector<SweepRow>& rows);
/// max - min of the per-setting means.
Real accuracy_spread(const std::vector<SweepSummary>& summary);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);
std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Conflict diagnosis

inline constexpr std::size_t kDefaultDiagStride = 25;

struct DiagnoseResult {
  TwoStageResult run;
  std::optional<Correlation> batch_correlation;   // mean skewness vs sim_ssl_oracle
  std::optional<Correlation> sample_correlation;  // per-sample, when recorded
  std::optional<AnmVerdict> anm;                   // needs >= 30 records
};

/// Trains with audits enabled (stride kDefaultDiagStride when unset).
DiagnoseResult diagnose(const ExperimentConfig& cfg, const Benchmark& bench);
DiagnoseResult analyze_conflicts(TwoStageResult run);

}  // namespace skewgrad

// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0
//
// Procedural point-cloud primitives, synthetic domain shift, and XYZ
// persistence for the labeled-source / unlabeled-target benchmark.

#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "skewgrad/autodiff.hpp"

namespace skewgrad {

using ad::Matrix;
using ad::Real;

enum class Domain { Source, Target };

const char* domain_name(Domain d);
Domain parse_domain(const std::string& s);

/// Procedural primitive families. Class ids index this list.
enum class Primitive : int { Sphere = 0, Cube, Cylinder, Cone, Torus, PlanePatch };
inline constexpr int kPrimitiveCount = 6;
const char* primitive_name(Primitive p);

inline constexpr std::size_t kMinPoints = 8;

struct PointCloud {
  Matrix points;              // N x 3
  std::optional<int> label;   // absent for unlabeled target samples
  Domain domain = Domain::Source;
  std::uint64_t id = 0;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
  /// Throws std::invalid_argument when the cloud violates N >= 8 or has
  /// non-finite coordinates.
  void validate() const;
};

struct ShiftConfig {
  Real jitter_sigma = 0.0;
  Real drop_fraction = 0.0;
  std::optional<std::pair<std::array<Real, 3>, Real>> occlusion;  // (unit normal, offset)
  Real scale = 1.0;

  void validate() const;
  bool is_identity() const;
};

/// Who is asking for a hidden target label.
enum class LabelAccess { Oracle, Evaluate };

/// Counts reads of hidden target labels, per access purpose. Tests reset it
/// and assert nothing outside the oracle-gradient and evaluation paths reads.
struct HiddenLabelAudit {
  static void reset();
  static std::size_t reads(LabelAccess purpose);
  static std::size_t total_reads();
  static void record(LabelAccess purpose);
};

class DomainDataset {
 public:
  DomainDataset() = default;
  DomainDataset(Domain domain, int class_count, std::uint64_t seed);

  Domain domain() const { return domain_; }
  int class_count() const { return class_count_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return samples_.size(); }
  bool labels_hidden() const { return labels_hidden_; }

  const PointCloud& operator[](std::size_t i) const { return samples_.at(i); }
  const std::vector<PointCloud>& samples() const { return samples_; }

  /// Appends a sample; the domain tag must match and the id must be new.
  void push_back(PointCloud pc);
  /// Moves every visible label into the hidden store.
  void hide_labels();
  /// Reads a hidden label. Every call is recorded in HiddenLabelAudit.
  int reveal_label(std::size_t index, LabelAccess purpose) const;
  /// Sets visible labels (pseudo-labels). The hidden store is kept.
  void set_visible_label(std::size_t index, int label);

 private:
  Domain domain_ = Domain::Source;
  int class_count_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<PointCloud> samples_;
  std::vector<int> hidden_labels_;
  bool labels_hidden_ = false;
};

/// splitmix64 mix of two words; used for per-sample derived seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Centroid to the origin, max radius to 1.
void normalize_unit_sphere(Matrix& points);

PointCloud generate_shape(int class_id, std::size_t n_points, std::uint64_t seed);

PointCloud apply_domain_shift(const PointCloud& pc, const ShiftConfig& cfg, std::uint64_t seed);

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads one cloud: one point per line, three space-separated reals,
/// '#' comment lines ignored. Label and domain come from the manifest.
PointCloud load_xyz(const std::filesystem::path& path);
void save_xyz(const PointCloud& pc, const std::filesystem::path& path);

struct ManifestEntry {
  std::uint64_t id = 0;
  std::string file;  // relative to the manifest directory
  int label = 0;
  Domain domain = Domain::Source;
};

/// Writes XYZ files plus manifest.json under dir. Returns the manifest path.
std::filesystem::path save_dataset_files(const DomainDataset& source, const DomainDataset& target,
                                         const std::filesystem::path& dir);
/// Loads (source, target) from a manifest; target labels land in the hidden store.
std::pair<DomainDataset, DomainDataset> load_manifest(const std::filesystem::path& manifest,
                                                      int class_count);

struct Benchmark {
  DomainDataset source;
  DomainDataset target;  // labels hidden
};

Benchmark make_uda_benchmark(std::size_t n_per_class_source, std::size_t n_per_class_target,
                             int class_count, std::size_t n_points, const ShiftConfig& cfg,
                             std::uint64_t seed);

}  // namespace skewgrad

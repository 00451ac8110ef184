// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0

#include "skewgrad/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace skewgrad {

namespace fs = std::filesystem;
using Rng = std::mt19937_64;

const char* domain_name(Domain d) { return d == Domain::Source ? "source" : "target"; }

Domain parse_domain(const std::string& s) {
  if (s == "source") return Domain::Source;
  if (s == "target") return Domain::Target;
  throw FormatError("unknown domain '" + s + "' (expected source or target)");
}

const char* primitive_name(Primitive p) {
  switch (p) {
    case Primitive::Sphere: return "sphere";
    case Primitive::Cube: return "cube";
    case Primitive::Cylinder: return "cylinder";
    case Primitive::Cone: return "cone";
    case Primitive::Torus: return "torus";
    case Primitive::PlanePatch: return "plane_patch";
  }
  return "unknown";
}

void PointCloud::validate() const {
  if (points.cols() != 3) {
    throw std::invalid_argument("point cloud " + std::to_string(id) + ": expected N x 3, got " +
                                ad::shape_of(points).str());
  }
  if (size() < kMinPoints) {
    throw std::invalid_argument("point cloud " + std::to_string(id) + ": " + std::to_string(size()) +
                                " points, need at least " + std::to_string(kMinPoints));
  }
  if (!points.allFinite()) {
    throw std::invalid_argument("point cloud " + std::to_string(id) + ": non-finite coordinate");
  }
}

void ShiftConfig::validate() const {
  if (!(jitter_sigma >= 0.0)) throw std::invalid_argument("shift.jitter_sigma must be >= 0");
  if (!(drop_fraction >= 0.0 && drop_fraction < 1.0)) {
    throw std::invalid_argument("shift.drop_fraction must be in [0, 1)");
  }
  if (!(scale > 0.0)) throw std::invalid_argument("shift.scale must be > 0");
  if (occlusion) {
    const auto& n = occlusion->first;
    const Real norm = std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]);
    if (std::abs(norm - 1.0) > 1e-6) throw std::invalid_argument("shift.occlusion normal must be unit length");
  }
}

bool ShiftConfig::is_identity() const {
  return jitter_sigma == 0.0 && drop_fraction == 0.0 && !occlusion && scale == 1.0;
}

// ---------------------------------------------------------------------------
// Hidden-label audit

namespace {
std::atomic<std::size_t> g_oracle_reads{0};
std::atomic<std::size_t> g_evaluate_reads{0};
}  // namespace

void HiddenLabelAudit::reset() {
  g_oracle_reads = 0;
  g_evaluate_reads = 0;
}

std::size_t HiddenLabelAudit::reads(LabelAccess purpose) {
  return purpose == LabelAccess::Oracle ? g_oracle_reads.load() : g_evaluate_reads.load();
}

std::size_t HiddenLabelAudit::total_reads() { return g_oracle_reads.load() + g_evaluate_reads.load(); }

void HiddenLabelAudit::record(LabelAccess purpose) {
  (purpose == LabelAccess::Oracle ? g_oracle_reads : g_evaluate_reads).fetch_add(1);
}

// ---------------------------------------------------------------------------
// DomainDataset

DomainDataset::DomainDataset(Domain domain, int class_count, std::uint64_t seed)
    : domain_(domain), class_count_(class_count), seed_(seed) {}

void DomainDataset::push_back(PointCloud pc) {
  if (pc.domain != domain_) {
    throw std::invalid_argument(std::string("sample ") + std::to_string(pc.id) + " has domain " +
                                domain_name(pc.domain) + ", dataset is " + domain_name(domain_));
  }
  for (const auto& s : samples_) {
    if (s.id == pc.id) throw std::invalid_argument("duplicate sample id " + std::to_string(pc.id));
  }
  if (labels_hidden()) {
    hidden_labels_.push_back(pc.label.value_or(-1));
    pc.label.reset();
  }
  samples_.push_back(std::move(pc));
}

void DomainDataset::hide_labels() {
  if (labels_hidden_) return;
  labels_hidden_ = true;
  hidden_labels_.clear();
  for (auto& s : samples_) {
    hidden_labels_.push_back(s.label.value_or(-1));
    s.label.reset();
  }
}

int DomainDataset::reveal_label(std::size_t index, LabelAccess purpose) const {
  HiddenLabelAudit::record(purpose);
  if (labels_hidden()) return hidden_labels_.at(index);
  const auto& l = samples_.at(index).label;
  if (!l) throw std::logic_error("sample " + std::to_string(samples_[index].id) + " has no label");
  return *l;
}

void DomainDataset::set_visible_label(std::size_t index, int label) { samples_.at(index).label = label; }

// ---------------------------------------------------------------------------
// Generation

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void normalize_unit_sphere(Matrix& points) {
  const Eigen::RowVector3d centroid = points.colwise().mean();
  points.rowwise() -= centroid;
  const Real radius = points.rowwise().norm().maxCoeff();
  if (radius > 0.0) points /= radius;
}

namespace {

using Vec3 = Eigen::RowVector3d;

Vec3 unit_normal(Rng& rng) {
  std::normal_distribution<Real> n(0.0, 1.0);
  for (;;) {
    Vec3 v(n(rng), n(rng), n(rng));
    const Real len = v.norm();
    if (len > 1e-12) return v / len;
  }
}

// Uniform point on a disk of radius r in the (y, z) plane.
std::pair<Real, Real> disk_point(Rng& rng, Real r) {
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  const Real rad = r * std::sqrt(u(rng));
  const Real th = 2.0 * std::numbers::pi * u(rng);
  return {rad * std::cos(th), rad * std::sin(th)};
}

Matrix sample_primitive(Primitive kind, std::size_t n, Rng& rng) {
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  auto uniform = [&](Real lo, Real hi) { return lo + (hi - lo) * u(rng); };
  Matrix pts(static_cast<Eigen::Index>(n), 3);
  const auto rows = static_cast<Eigen::Index>(n);

  switch (kind) {
    case Primitive::Sphere:
      for (Eigen::Index i = 0; i < rows; ++i) pts.row(i) = unit_normal(rng);
      break;

    case Primitive::Cube:
      for (Eigen::Index i = 0; i < rows; ++i) {
        const int face = std::min(5, static_cast<int>(u(rng) * 6.0));
        const Real a = uniform(-1.0, 1.0), b = uniform(-1.0, 1.0);
        const Real s = (face % 2 == 0) ? 1.0 : -1.0;
        switch (face / 2) {
          case 0: pts.row(i) = Vec3(s, a, b); break;
          case 1: pts.row(i) = Vec3(a, s, b); break;
          default: pts.row(i) = Vec3(a, b, s); break;
        }
      }
      break;

    case Primitive::Cylinder: {
      // Axis along x; lateral surface plus both caps, area-weighted.
      const Real r = uniform(0.35, 0.6), half = uniform(0.8, 1.2);
      const Real lateral = 2.0 * std::numbers::pi * r * 2.0 * half;
      const Real cap = std::numbers::pi * r * r;
      for (Eigen::Index i = 0; i < rows; ++i) {
        const Real pick = u(rng) * (lateral + 2.0 * cap);
        if (pick < lateral) {
          const Real th = 2.0 * std::numbers::pi * u(rng);
          pts.row(i) = Vec3(uniform(-half, half), r * std::cos(th), r * std::sin(th));
        } else {
          const auto [y, z] = disk_point(rng, r);
          pts.row(i) = Vec3(pick < lateral + cap ? half : -half, y, z);
        }
      }
      break;
    }

    case Primitive::Cone: {
      // Axis along x, apex at +height, base disk at x = 0.
      const Real r = uniform(0.5, 0.8), height = uniform(1.3, 1.8);
      const Real slant = std::hypot(r, height);
      const Real lateral = std::numbers::pi * r * slant;
      const Real base = std::numbers::pi * r * r;
      for (Eigen::Index i = 0; i < rows; ++i) {
        if (u(rng) * (lateral + base) < lateral) {
          // Radius at distance t from the apex grows linearly; area density ~ t.
          const Real t = std::sqrt(u(rng));
          const Real th = 2.0 * std::numbers::pi * u(rng);
          pts.row(i) = Vec3(height * (1.0 - t), r * t * std::cos(th), r * t * std::sin(th));
        } else {
          const auto [y, z] = disk_point(rng, r);
          pts.row(i) = Vec3(0.0, y, z);
        }
      }
      break;
    }

    case Primitive::Torus: {
      // Ring in the xy plane; rejection on the (R + r cos v) area element.
      const Real big = 1.0, small = uniform(0.2, 0.4);
      for (Eigen::Index i = 0; i < rows;) {
        const Real a = 2.0 * std::numbers::pi * u(rng);
        const Real v = 2.0 * std::numbers::pi * u(rng);
        if (u(rng) * (big + small) > big + small * std::cos(v)) continue;
        const Real ring = big + small * std::cos(v);
        pts.row(i++) = Vec3(ring * std::cos(a), ring * std::sin(a), small * std::sin(v));
      }
      break;
    }

    case Primitive::PlanePatch: {
      const Real half_y = uniform(0.3, 0.7);
      for (Eigen::Index i = 0; i < rows; ++i) pts.row(i) = Vec3(uniform(-1.0, 1.0), uniform(-half_y, half_y), 0.0);
      break;
    }
  }
  return pts;
}

}  // namespace

PointCloud generate_shape(int class_id, std::size_t n_points, std::uint64_t seed) {
  if (class_id < 0 || class_id >= kPrimitiveCount) {
    throw std::invalid_argument("unknown class_id " + std::to_string(class_id) + " (have " +
                                std::to_string(kPrimitiveCount) + " primitives)");
  }
  if (n_points < kMinPoints) {
    throw std::invalid_argument("n_points must be >= " + std::to_string(kMinPoints));
  }
  Rng rng(seed);
  PointCloud pc;
  pc.points = sample_primitive(static_cast<Primitive>(class_id), n_points, rng);
  normalize_unit_sphere(pc.points);
  pc.label = class_id;
  pc.id = seed;
  return pc;
}

PointCloud apply_domain_shift(const PointCloud& pc, const ShiftConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (cfg.is_identity()) return pc;
  Rng rng(seed);

  Matrix pts = pc.points * cfg.scale;

  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(pts.rows()));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    if (cfg.occlusion) {
      const auto& [n, offset] = *cfg.occlusion;
      const Real proj = pts(i, 0) * n[0] + pts(i, 1) * n[1] + pts(i, 2) * n[2];
      if (proj > offset) continue;
    }
    keep.push_back(i);
  }

  if (cfg.drop_fraction > 0.0) {
    const auto drop = static_cast<std::size_t>(std::floor(static_cast<Real>(keep.size()) * cfg.drop_fraction));
    std::shuffle(keep.begin(), keep.end(), rng);
    keep.resize(keep.size() - drop);
    std::sort(keep.begin(), keep.end());
  }

  if (keep.size() < kMinPoints) {
    throw std::invalid_argument("domain shift leaves " + std::to_string(keep.size()) + " points of sample " +
                                std::to_string(pc.id) + "; loosen occlusion offset or drop_fraction");
  }

  Matrix out(static_cast<Eigen::Index>(keep.size()), 3);
  for (std::size_t k = 0; k < keep.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = pts.row(keep[k]);

  if (cfg.jitter_sigma > 0.0) {
    std::normal_distribution<Real> noise(0.0, cfg.jitter_sigma);
    for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] += noise(rng);
  }
  normalize_unit_sphere(out);

  PointCloud shifted = pc;
  shifted.points = std::move(out);
  return shifted;
}

// ---------------------------------------------------------------------------
// XYZ files

PointCloud load_xyz(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<Real> coords;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') continue;
    std::istringstream ls(line);
    Real v[3];
    std::string extra;
    if (!(ls >> v[0] >> v[1] >> v[2]) || (ls >> extra) || !std::isfinite(v[0]) || !std::isfinite(v[1]) ||
        !std::isfinite(v[2])) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected three finite reals, got '" +
                        line + "'");
    }
    coords.insert(coords.end(), v, v + 3);
  }
  if (coords.empty()) throw FormatError(path.string() + ": no points");
  PointCloud pc;
  pc.points = Eigen::Map<Matrix>(coords.data(), static_cast<Eigen::Index>(coords.size() / 3), 3);
  return pc;
}

void save_xyz(const PointCloud& pc, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  char buf[128];
  for (Eigen::Index i = 0; i < pc.points.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12f %.12f %.12f\n", pc.points(i, 0), pc.points(i, 1), pc.points(i, 2));
    out << buf;
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

fs::path save_dataset_files(const DomainDataset& source, const DomainDataset& target, const fs::path& dir) {
  nlohmann::json manifest = nlohmann::json::array();
  for (const DomainDataset* ds : {&source, &target}) {
    const std::string sub = domain_name(ds->domain());
    fs::create_directories(dir / sub);
    for (std::size_t i = 0; i < ds->size(); ++i) {
      const PointCloud& pc = (*ds)[i];
      char name[64];
      std::snprintf(name, sizeof name, "%s/%06llu.xyz", sub.c_str(), static_cast<unsigned long long>(pc.id));
      save_xyz(pc, dir / name);
      // Writing the manifest is a dataset export, so target labels are
      // read under the evaluation purpose.
      const int label = ds->labels_hidden() ? ds->reveal_label(i, LabelAccess::Evaluate) : pc.label.value_or(-1);
      manifest.push_back({{"id", pc.id}, {"file", name}, {"label", label}, {"domain", sub}});
    }
  }
  const fs::path path = dir / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << manifest.dump(1) << "\n";
  return path;
}

std::pair<DomainDataset, DomainDataset> load_manifest(const fs::path& manifest_path, int class_count) {
  std::ifstream in(manifest_path);
  if (!in) throw FormatError("cannot open " + manifest_path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  if (!manifest.is_array()) throw FormatError(manifest_path.string() + ": expected a JSON array");
  DomainDataset source(Domain::Source, class_count, 0);
  DomainDataset target(Domain::Target, class_count, 0);
  target.hide_labels();
  for (const auto& e : manifest) {
    ManifestEntry entry;
    try {
      entry.id = e.at("id").get<std::uint64_t>();
      entry.file = e.at("file").get<std::string>();
      entry.label = e.at("label").get<int>();
      entry.domain = parse_domain(e.at("domain").get<std::string>());
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(manifest_path.string() + ": bad entry " + e.dump() + ": " + ex.what());
    }
    if (entry.label < 0 || entry.label >= class_count) {
      throw FormatError(manifest_path.string() + ": label " + std::to_string(entry.label) + " out of range");
    }
    PointCloud pc = load_xyz(manifest_path.parent_path() / entry.file);
    pc.id = entry.id;
    pc.label = entry.label;
    pc.domain = entry.domain;
    pc.validate();
    (entry.domain == Domain::Source ? source : target).push_back(std::move(pc));
  }
  return {std::move(source), std::move(target)};
}

// ---------------------------------------------------------------------------

Benchmark make_uda_benchmark(std::size_t n_per_class_source, std::size_t n_per_class_target, int class_count,
                             std::size_t n_points, const ShiftConfig& cfg, std::uint64_t seed) {
  if (class_count < 4 || class_count > kPrimitiveCount) {
    throw std::invalid_argument("class_count must be in [4, " + std::to_string(kPrimitiveCount) + "]");
  }
  cfg.validate();
  Benchmark b{DomainDataset(Domain::Source, class_count, seed), DomainDataset(Domain::Target, class_count, seed)};
  std::uint64_t next_id = 0;
  for (int c = 0; c < class_count; ++c) {
    for (std::size_t i = 0; i < n_per_class_source; ++i) {
      const std::uint64_t id = next_id++;
      PointCloud pc = generate_shape(c, n_points, mix_seed(seed, id));
      pc.id = id;
      pc.domain = Domain::Source;
      b.source.push_back(std::move(pc));
    }
  }
  for (int c = 0; c < class_count; ++c) {
    for (std::size_t i = 0; i < n_per_class_target; ++i) {
      const std::uint64_t id = next_id++;
      PointCloud pc = generate_shape(c, n_points, mix_seed(seed, id));
      pc = apply_domain_shift(pc, cfg, mix_seed(~seed, id));
      pc.id = id;
      pc.domain = Domain::Target;
      b.target.push_back(std::move(pc));
    }
  }
  b.target.hide_labels();
  return b;
}

}  // namespace skewgrad

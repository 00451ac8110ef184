// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "skewgrad/pointcloud.hpp"
#include "support.hpp"

using namespace skewgrad;
using skewgrad::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("generate_shape is deterministic and normalized") {
  for (int k = 0; k < kPrimitiveCount; ++k) {
    const PointCloud a = generate_shape(k, 256, 7);
    const PointCloud b = generate_shape(k, 256, 7);
    CHECK(a.points == b.points);
    CHECK(a.label == k);
    CHECK(a.size() == 256);
    CHECK(a.points.colwise().mean().norm() < 1e-9);
    CHECK(a.points.rowwise().norm().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(generate_shape(k, 256, 8).points != a.points);
  }
  CHECK_THROWS_AS(generate_shape(kPrimitiveCount, 64, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_shape(-1, 64, 0), std::invalid_argument);
  CHECK_THROWS_AS(generate_shape(0, kMinPoints - 1, 0), std::invalid_argument);
}

TEST_CASE("cube points lie on the faces") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PointCloud pc = generate_shape(static_cast<int>(Primitive::Cube), 512, seed);
    const Eigen::RowVector3d lo = pc.points.colwise().minCoeff();
    const Eigen::RowVector3d hi = pc.points.colwise().maxCoeff();
    // Normalization is a translation plus uniform scale, so the faces stay axis-aligned.
    CHECK((hi - lo).maxCoeff() - (hi - lo).minCoeff() < 0.05);
    for (Eigen::Index i = 0; i < pc.points.rows(); ++i) {
      bool on_face = false;
      for (int a = 0; a < 3; ++a) {
        on_face = on_face || std::abs(pc.points(i, a) - lo[a]) < 1e-9 || std::abs(pc.points(i, a) - hi[a]) < 1e-9;
      }
      REQUIRE(on_face);
    }
  }
}

TEST_CASE("sphere points are equidistant from the centroid") {
  const PointCloud pc = generate_shape(static_cast<int>(Primitive::Sphere), 300, 3);
  const Eigen::VectorXd r = pc.points.rowwise().norm();
  // Sampling noise moves the centroid slightly off the true centre.
  CHECK(r.maxCoeff() - r.minCoeff() < 0.2);
}

TEST_CASE("apply_domain_shift") {
  const PointCloud pc = generate_shape(0, 256, 11);
  SUBCASE("identity returns the input") {
    const PointCloud out = apply_domain_shift(pc, ShiftConfig{}, 5);
    CHECK(out.points == pc.points);
    CHECK(out.id == pc.id);
  }
  SUBCASE("drop removes an exact count") {
    ShiftConfig cfg;
    cfg.drop_fraction = 0.5;
    const PointCloud out = apply_domain_shift(pc, cfg, 5);
    CHECK(out.size() == 128);
    CHECK(out.label == pc.label);
  }
  SUBCASE("occlusion removes the half-space") {
    ShiftConfig cfg;
    cfg.occlusion = std::make_pair(std::array<Real, 3>{0, 0, 1}, 0.2);
    std::size_t expected = 0;
    for (Eigen::Index i = 0; i < pc.points.rows(); ++i) expected += pc.points(i, 2) > 0.2 ? 0 : 1;
    CHECK(apply_domain_shift(pc, cfg, 5).size() == expected);
  }
  SUBCASE("over-aggressive shift is rejected") {
    ShiftConfig cfg;
    cfg.occlusion = std::make_pair(std::array<Real, 3>{0, 0, 1}, -2.0);
    CHECK_THROWS_WITH_AS(apply_domain_shift(pc, cfg, 5), doctest::Contains("points"), std::invalid_argument);
  }
  SUBCASE("invalid configs") {
    ShiftConfig cfg;
    cfg.drop_fraction = 1.0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.jitter_sigma = -0.1;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.scale = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.occlusion = std::make_pair(std::array<Real, 3>{0, 0, 2}, 0.0);
    CHECK_THROWS(cfg.validate());
  }
}

TEST_CASE("jitter displacement statistics") {
  ShiftConfig cfg;
  cfg.jitter_sigma = 0.01;
  std::vector<Real> residuals;
  for (std::uint64_t s = 0; s < 48; ++s) {
    const PointCloud pc = generate_shape(static_cast<int>(s % 4), 256, 100 + s);
    const PointCloud out = apply_domain_shift(pc, cfg, s);
    REQUIRE(out.size() == pc.size());
    // Undo the renormalization: least-squares fit out ~ a * pc + t, per cloud.
    const Eigen::RowVector3d mp = pc.points.colwise().mean();
    const Eigen::RowVector3d mo = out.points.colwise().mean();
    const Matrix cp = pc.points.rowwise() - mp;
    const Matrix co = out.points.rowwise() - mo;
    const Real a = cp.cwiseProduct(co).sum() / cp.squaredNorm();
    const Matrix res = (co - a * cp) / a;
    for (Eigen::Index i = 0; i < res.size(); ++i) residuals.push_back(res.data()[i]);
  }
  REQUIRE(residuals.size() >= 10000);
  Real ss = 0.0;
  for (Real r : residuals) ss += r * r;
  const Real sd = std::sqrt(ss / static_cast<Real>(residuals.size()));
  CHECK(std::abs(sd - 0.01) < 0.001);
}

TEST_CASE("xyz round trip and errors") {
  TempDir dir("xyz");
  SUBCASE("three valid lines") {
    std::ofstream(dir.path() / "three.xyz") << "# comment\n0 0 0\n1.5 -2 3e-1\n4 5 6\n";
    const PointCloud pc = load_xyz(dir.path() / "three.xyz");
    CHECK(pc.size() == 3);
    CHECK(pc.points(1, 2) == doctest::Approx(0.3));
  }
  SUBCASE("empty file") {
    std::ofstream(dir.path() / "empty.xyz");
    CHECK_THROWS_AS(load_xyz(dir.path() / "empty.xyz"), FormatError);
  }
  SUBCASE("malformed line names its number") {
    std::ofstream(dir.path() / "bad.xyz") << "0 0 0\n1 2\n";
    CHECK_THROWS_WITH_AS(load_xyz(dir.path() / "bad.xyz"), doctest::Contains(":2:"), FormatError);
    std::ofstream(dir.path() / "extra.xyz") << "0 0 0\n0 0 0\n1 2 3 4\n";
    CHECK_THROWS_WITH_AS(load_xyz(dir.path() / "extra.xyz"), doctest::Contains(":3:"), FormatError);
    std::ofstream(dir.path() / "nan.xyz") << "nan 0 0\n";
    CHECK_THROWS_AS(load_xyz(dir.path() / "nan.xyz"), FormatError);
  }
  SUBCASE("random cloud round trip") {
    const PointCloud pc = apply_domain_shift(generate_shape(2, 200, 4), BenchmarkConfig::default_target_shift(), 9);
    save_xyz(pc, dir.path() / "rt.xyz");
    const PointCloud back = load_xyz(dir.path() / "rt.xyz");
    REQUIRE(back.size() == pc.size());
    CHECK((back.points - pc.points).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(load_xyz(dir.path() / "missing.xyz"), FormatError);
}

TEST_CASE("DomainDataset invariants") {
  DomainDataset ds(Domain::Source, 4, 1);
  PointCloud pc = generate_shape(0, 16, 1);
  pc.id = 3;
  ds.push_back(pc);
  CHECK_THROWS_AS(ds.push_back(pc), std::invalid_argument);
  pc.id = 4;
  pc.domain = Domain::Target;
  CHECK_THROWS_AS(ds.push_back(pc), std::invalid_argument);
}

TEST_CASE("benchmark construction") {
  const ShiftConfig shift = BenchmarkConfig::default_target_shift();
  const Benchmark a = make_uda_benchmark(5, 3, 4, 64, shift, 21);
  const Benchmark b = make_uda_benchmark(5, 3, 4, 64, shift, 21);
  REQUIRE(a.source.size() == 20);
  REQUIRE(a.target.size() == 12);
  CHECK(a.source.domain() == Domain::Source);
  CHECK(a.target.domain() == Domain::Target);
  CHECK(a.target.labels_hidden());
  CHECK_FALSE(a.source.labels_hidden());

  std::vector<int> src_counts(4, 0), tgt_counts(4, 0);
  std::set<std::uint64_t> ids;
  HiddenLabelAudit::reset();
  for (std::size_t i = 0; i < a.source.size(); ++i) {
    src_counts[static_cast<std::size_t>(*a.source[i].label)]++;
    CHECK(a.source[i].points == b.source[i].points);
    ids.insert(a.source[i].id);
  }
  for (std::size_t i = 0; i < a.target.size(); ++i) {
    CHECK_FALSE(a.target[i].label.has_value());
    CHECK(a.target[i].points == b.target[i].points);
    tgt_counts[static_cast<std::size_t>(a.target.reveal_label(i, LabelAccess::Evaluate))]++;
    ids.insert(a.target[i].id);
  }
  CHECK(src_counts == std::vector<int>{5, 5, 5, 5});
  CHECK(tgt_counts == std::vector<int>{3, 3, 3, 3});
  CHECK(ids.size() == 32);
  CHECK(HiddenLabelAudit::reads(LabelAccess::Evaluate) == 12);
  CHECK(HiddenLabelAudit::reads(LabelAccess::Oracle) == 0);
  CHECK_THROWS(make_uda_benchmark(2, 2, 3, 64, shift, 1));
}

TEST_CASE("dataset files and manifest") {
  TempDir dir("manifest");
  const Benchmark bench = make_uda_benchmark(2, 2, 4, 32, BenchmarkConfig::default_target_shift(), 5);
  const auto manifest = save_dataset_files(bench.source, bench.target, dir.path() / "d1");
  save_dataset_files(bench.source, bench.target, dir.path() / "d2");
  CHECK(slurp(manifest) == slurp(dir.path() / "d2" / "manifest.json"));

  const auto entries = nlohmann::json::parse(slurp(manifest));
  REQUIRE(entries.size() == 16);
  HiddenLabelAudit::reset();
  for (const auto& e : entries) {
    const auto id = e.at("id").get<std::uint64_t>();
    const int label = e.at("label").get<int>();
    const DomainDataset& ds = e.at("domain") == "source" ? bench.source : bench.target;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds[i].id == id) CHECK(label == (ds.labels_hidden() ? ds.reveal_label(i, LabelAccess::Evaluate) : *ds[i].label));
    }
  }

  auto [source, target] = load_manifest(manifest, 4);
  REQUIRE(source.size() == bench.source.size());
  REQUIRE(target.size() == bench.target.size());
  CHECK(target.labels_hidden());
  for (std::size_t i = 0; i < source.size(); ++i) {
    CHECK((source[i].points - bench.source[i].points).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(source[i].label == bench.source[i].label);
  }
  CHECK_THROWS_AS(load_manifest(dir.path() / "nope.json", 4), FormatError);
}

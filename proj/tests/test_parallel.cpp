#include <doctest.h>

// The OpenMP kernels must reproduce their serial references bit for bit:
// every kernel writes disjoint slots and derives per-row/per-scan RNGs,
// so the thread count can never leak into results.

#include "ood3d/matcher.hpp"
#include "ood3d/parallel.hpp"
#include "ood3d/pipeline.hpp"
#include "ood3d/scorers.hpp"
#include "ood3d/synth.hpp"
#include "helpers.hpp"

using namespace ood3d;
using namespace ood3d::testing;

namespace {

std::vector<Scan> synth_scans(int n, bool with_maps) {
  WorldConfig world = default_world();
  world.n_scans = n;
  world.extent = 40.0;
  world.feature_dim_low = 5;
  world.feature_dim_high = 9;
  world.background_points = 30;
  world.with_feature_maps = with_maps;
  world.rng_seed = 99;
  DatasetManifest manifest;
  manifest.name = "par";
  for (const auto& spec : world.classes) {
    (spec.open ? manifest.open_classes : manifest.known_classes).push_back(spec.name);
  }
  const SynthContext ctx(world, default_emulation(), manifest);
  std::vector<Scan> scans;
  for (int i = 0; i < n; ++i) scans.push_back(generate_scan(ctx, i));
  return scans;
}

}  // namespace

TEST_CASE("worker_count respects OOD3D_THREADS lower bound") {
  CHECK(worker_count() >= 1);
}

TEST_CASE("parallel_for covers every index exactly once") {
  std::vector<int> hits(1000, 0);
  parallel_for(1000, [&](std::int64_t i) { hits[static_cast<std::size_t>(i)] += 1; });
  for (const int h : hits) CHECK(h == 1);
}

TEST_CASE("max_pool3x3 equals its serial reference") {
  Rng rng(1);
  for (int rep = 0; rep < 10; ++rep) {
    FeatureMap m;
    m.rows = static_cast<int>(rng.uniform_int(1, 24));
    m.cols = static_cast<int>(rng.uniform_int(1, 24));
    m.dim = static_cast<int>(rng.uniform_int(1, 6));
    m.data.resize(static_cast<std::size_t>(m.rows * m.cols * m.dim));
    for (auto& v : m.data) v = static_cast<float>(rng.normal(0, 3));
    CHECK(max_pool3x3(m) == max_pool3x3_serial(m));
  }
}

TEST_CASE("annotate_scans equals its serial reference for every scorer") {
  std::vector<Scan> scans = synth_scans(10, false);
  DetectorEmulation emu = default_emulation();
  emu.mc.samples = 5;
  // regenerate with MC samples on
  {
    WorldConfig world = default_world();
    world.n_scans = 10;
    world.extent = 40.0;
    world.feature_dim_low = 5;
    world.background_points = 30;
    world.rng_seed = 98;
    DatasetManifest manifest;
    manifest.name = "par";
    for (const auto& spec : world.classes) {
      (spec.open ? manifest.open_classes : manifest.known_classes).push_back(spec.name);
    }
    const SynthContext ctx(world, emu, manifest);
    scans.clear();
    for (int i = 0; i < 10; ++i) scans.push_back(generate_scan(ctx, i));
  }

  for (const ScorerMethod method :
       {ScorerMethod::DefaultScore, ScorerMethod::MaxLogit, ScorerMethod::Msp,
        ScorerMethod::Energy, ScorerMethod::OdinTemperature, ScorerMethod::McDropout}) {
    ScorerConfig cfg;
    cfg.method = method;
    std::vector<Scan> a = scans;
    std::vector<Scan> b = scans;
    annotate_scans(a, cfg);
    annotate_scans_serial(b, cfg);
    CHECK(a == b);
  }
}

TEST_CASE("match_scans equals its serial reference") {
  std::vector<Scan> scans = synth_scans(16, false);
  ScorerConfig scorer;
  scorer.method = ScorerMethod::DefaultScore;
  annotate_scans(scans, scorer);
  const RunConfig run;
  const auto par = match_scans(scans, run);
  const auto ser = match_scans_serial(scans, run);
  REQUIRE(par.size() == ser.size());
  for (std::size_t i = 0; i < par.size(); ++i) {
    CHECK(par[i].pairs == ser[i].pairs);
    CHECK(par[i].unmatched_detections == ser[i].unmatched_detections);
    CHECK(par[i].unmatched_gts == ser[i].unmatched_gts);
    CHECK(par[i].confusion == ser[i].confusion);
  }
}

TEST_CASE("fabricate_map equals its serial reference") {
  WorldConfig world = default_world();
  world.extent = 30.0;
  world.feature_dim_low = 7;
  world.feature_dim_high = 12;
  world.rng_seed = 5;
  DatasetManifest manifest;
  manifest.name = "par";
  for (const auto& spec : world.classes) {
    (spec.open ? manifest.open_classes : manifest.known_classes).push_back(spec.name);
  }
  const SynthContext ctx(world, default_emulation(), manifest);

  std::vector<GroundTruthObject> objects;
  objects.push_back(make_gt({3, 4, 1, 2, 2, 2, 0.3}, 0, false));
  objects.push_back(make_gt({-6, 2, 1, 2, 2, 2, -0.7}, 3, true));
  std::vector<ClassMix> mix(2);
  mix[0].parts = {{0, 1.0}};
  mix[1].parts = {{3, 1.0}};

  for (const bool high : {false, true}) {
    CHECK(ctx.fabricate_map(objects, mix, high, 42) ==
          ctx.fabricate_map_serial(objects, mix, high, 42));
  }
}

TEST_CASE("annotate_with_head equals its serial reference") {
  std::vector<Scan> scans = synth_scans(8, true);
  HeadModel model;
  const int dim = 5 + 7 + 3;  // low-dim embedding + box params + logits
  model.head = make_head(dim, 3);
  model.probe.source = ProbeSource::LowDim;
  model.probe.interpolate = true;
  model.probe.pool3x3 = true;
  model.norm_extent = 40.0;

  std::vector<Scan> a = scans;
  std::vector<Scan> b = scans;
  annotate_with_head(a, model);
  annotate_with_head_serial(b, model);
  CHECK(a == b);
}

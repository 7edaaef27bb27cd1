// Serial-vs-OpenMP comparison for the data-parallel kernels. Each kernel
// is checked for bitwise equality with its serial reference before the
// speedup is reported.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ood3d/matcher.hpp"
#include "ood3d/parallel.hpp"
#include "ood3d/pipeline.hpp"
#include "ood3d/scorers.hpp"
#include "ood3d/synth.hpp"

using namespace ood3d;
using Clock = std::chrono::steady_clock;

namespace {

double run_ms(const std::function<void()>& fn, int reps) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    const auto t1 = Clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void report(const char* name, double serial_ms, double parallel_ms, bool equal) {
  std::printf("%-24s %10.2f ms %10.2f ms %8.2fx   %s\n", name, serial_ms, parallel_ms,
              serial_ms / parallel_ms, equal ? "match" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int scale = argc > 1 ? std::atoi(argv[1]) : 1;
  std::printf("workers: %d\n", worker_count());
  std::printf("%-24s %13s %13s %9s   %s\n", "kernel", "serial", "openmp", "speedup", "check");

  WorldConfig world = default_world();
  world.n_scans = 60 * scale;
  world.extent = 80.0;
  world.feature_dim_low = 64;
  world.feature_dim_high = 128;
  world.with_feature_maps = false;
  world.rng_seed = 7;
  DetectorEmulation emu = default_emulation();
  emu.mc.samples = 8;

  DatasetManifest manifest;
  manifest.name = "bench";
  for (const auto& spec : world.classes) {
    (spec.open ? manifest.open_classes : manifest.known_classes).push_back(spec.name);
  }
  const SynthContext ctx(world, emu, manifest);

  std::vector<Scan> scans(static_cast<std::size_t>(world.n_scans));
  for (int i = 0; i < world.n_scans; ++i) {
    scans[static_cast<std::size_t>(i)] = generate_scan(ctx, i);
  }

  // 3x3 max pooling
  {
    std::vector<ClassMix> mix(scans[0].ground_truth.size());
    for (std::size_t i = 0; i < mix.size(); ++i) {
      mix[i].parts = {{scans[0].ground_truth[i].class_id, 1.0}};
    }
    FeatureMap map = ctx.fabricate_map_serial(scans[0].ground_truth, mix, true, 11);
    FeatureMap out_serial;
    FeatureMap out_parallel;
    const double s = run_ms([&] { out_serial = max_pool3x3_serial(map); }, 3);
    const double p = run_ms([&] { out_parallel = max_pool3x3(map); }, 3);
    report("max_pool3x3", s, p, out_serial == out_parallel);
  }

  // map fabrication
  {
    std::vector<ClassMix> mix(scans[0].ground_truth.size());
    for (std::size_t i = 0; i < mix.size(); ++i) {
      mix[i].parts = {{scans[0].ground_truth[i].class_id, 1.0}};
    }
    FeatureMap out_serial;
    FeatureMap out_parallel;
    const double s =
        run_ms([&] { out_serial = ctx.fabricate_map_serial(scans[0].ground_truth, mix, true, 11); }, 3);
    const double p =
        run_ms([&] { out_parallel = ctx.fabricate_map(scans[0].ground_truth, mix, true, 11); }, 3);
    report("fabricate_map", s, p, out_serial == out_parallel);
  }

  // scorer annotation
  {
    ScorerConfig cfg;
    cfg.method = ScorerMethod::McDropout;
    std::vector<Scan> a = scans;
    std::vector<Scan> b = scans;
    const double s = run_ms([&] { annotate_scans_serial(a, cfg); }, 3);
    const double p = run_ms([&] { annotate_scans(b, cfg); }, 3);
    report("annotate_scans", s, p, a == b);
  }

  // matching
  {
    std::vector<Scan> a = scans;
    ScorerConfig cfg;
    cfg.method = ScorerMethod::Energy;
    annotate_scans(a, cfg);
    RunConfig run;
    std::vector<MatchReport> rs;
    std::vector<MatchReport> rp;
    const double s = run_ms([&] { rs = match_scans_serial(a, run); }, 3);
    const double p = run_ms([&] { rp = match_scans(a, run); }, 3);
    bool equal = rs.size() == rp.size();
    for (std::size_t i = 0; equal && i < rs.size(); ++i) {
      equal = rs[i].pairs == rp[i].pairs && rs[i].confusion == rp[i].confusion;
    }
    report("match_scans", s, p, equal);
  }

  // point-in-box
  {
    Rng rng(3);
    PointCloud cloud;
    const std::size_t n = 2000000u * static_cast<std::size_t>(scale);
    cloud.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      cloud.points.push_back({static_cast<float>(rng.uniform(-40, 40)),
                              static_cast<float>(rng.uniform(-40, 40)),
                              static_cast<float>(rng.uniform(0, 4)), 0.5f});
    }
    Box3D box{1.0, -2.0, 1.0, 20.0, 15.0, 2.0, 0.8};
    std::vector<std::int64_t> is;
    std::vector<std::int64_t> ip;
    const double s = run_ms([&] { is = points_in_box_serial(cloud, box); }, 3);
    const double p = run_ms([&] { ip = points_in_box(cloud, box); }, 3);
    report("points_in_box", s, p, is == ip);
  }

  return 0;
}

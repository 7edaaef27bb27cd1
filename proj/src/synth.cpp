#include "ood3d/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "ood3d/errors.hpp"
#include "ood3d/parallel.hpp"
#include "ood3d/scan_io.hpp"

namespace ood3d {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kIntensityMean = 0.45;
constexpr double kIntensityStd = 0.18;
constexpr int kMapPadCells = 2;

std::vector<double> unit_vector(int dim, Rng& rng) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
  } while (norm <= 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

int open_scan_count(const WorldConfig& world) {
  return static_cast<int>(std::lround(world.open_scan_fraction * world.n_scans));
}

bool is_open_scan(const WorldConfig& world, int scan_index) {
  return scan_index < open_scan_count(world);
}

}  // namespace

WorldConfig default_world() {
  WorldConfig w;
  w.classes = {
      {"car", false, {4.5, 1.9, 1.6}, {0.30, 0.10, 0.10}, {2, 8}, {30, 80}},
      {"pedestrian", false, {0.8, 0.8, 1.7}, {0.10, 0.10, 0.10}, {1, 6}, {10, 30}},
      {"cyclist", false, {1.8, 0.6, 1.7}, {0.15, 0.08, 0.10}, {1, 4}, {15, 40}},
      {"stroller", true, {0.9, 0.6, 1.1}, {0.10, 0.08, 0.10}, {1, 3}, {10, 30}},
  };
  return w;
}

DetectorEmulation default_emulation() { return DetectorEmulation{}; }

void validate_world_config(const WorldConfig& world) {
  if (world.n_scans < 0) throw ConfigError("n_scans must be >= 0");
  if (world.open_scan_fraction < 0.0 || world.open_scan_fraction > 1.0) {
    throw ConfigError("open_scan_fraction must be in [0,1]");
  }
  if (!(world.extent > 0.0)) throw ConfigError("extent must be > 0");
  if (!(world.cell_size > 0.0)) throw ConfigError("cell_size must be > 0");
  if (world.feature_dim_low < 1 || world.feature_dim_high < 1) {
    throw ConfigError("feature dims must be >= 1");
  }
  bool has_known = false;
  bool has_open = false;
  std::set<std::string> names;
  for (const auto& spec : world.classes) {
    (spec.open ? has_open : has_known) = true;
    if (spec.name.empty()) throw ConfigError("class name must be non-empty");
    if (!names.insert(spec.name).second) {
      throw ConfigError("duplicate class name: " + spec.name);
    }
    for (int a = 0; a < 3; ++a) {
      if (!(spec.size_mean[static_cast<std::size_t>(a)] > 0.0)) {
        throw ConfigError("size prior must be positive for class " + spec.name);
      }
    }
    if (spec.count_range[0] > spec.count_range[1] || spec.count_range[0] < 0 ||
        spec.points_range[0] > spec.points_range[1] || spec.points_range[0] < 0) {
      throw ConfigError("count/points ranges must be ordered and non-negative for " + spec.name);
    }
  }
  if (!has_known || !has_open) {
    throw ConfigError("world needs at least one known and one open class");
  }
}

SynthContext::SynthContext(const WorldConfig& world, const DetectorEmulation& emu,
                           const DatasetManifest& manifest)
    : world_(world), emu_(emu), manifest_(manifest) {}

int SynthContext::grid_cells() const {
  // two padding cells per side keep jittered edge detections on the map
  return static_cast<int>(std::ceil(world_.extent / world_.cell_size)) + 2 * kMapPadCells;
}

std::vector<double> SynthContext::class_mean(int class_id, bool high_dim) const {
  const int dim = high_dim ? world_.feature_dim_high : world_.feature_dim_low;
  const std::uint64_t tag = high_dim ? hash_string("mean-high") : hash_string("mean-low");
  if (!manifest_.is_open_class(class_id)) {
    Rng rng(mix_seed(mix_seed(emu_.embedding.feature_seed, tag),
                     static_cast<std::uint64_t>(class_id)));
    auto v = unit_vector(dim, rng);
    for (double& x : v) x *= emu_.embedding.class_sep;
    return v;
  }
  // Open-class means sit a configurable number of noise sigmas away from
  // the known-class centroid: the single knob that sets task difficulty.
  std::vector<double> centroid(static_cast<std::size_t>(dim), 0.0);
  const int n_known = static_cast<int>(manifest_.known_count());
  for (int c = 0; c < n_known; ++c) {
    const auto mean_c = class_mean(c, high_dim);
    for (int i = 0; i < dim; ++i) centroid[static_cast<std::size_t>(i)] += mean_c[static_cast<std::size_t>(i)];
  }
  for (double& x : centroid) x /= static_cast<double>(n_known);
  Rng rng(mix_seed(mix_seed(emu_.embedding.feature_seed, tag ^ hash_string("open")),
                   static_cast<std::uint64_t>(class_id)));
  const auto dir = unit_vector(dim, rng);
  const double shift = emu_.embedding.open_shift_sigmas * emu_.embedding.noise_std;
  for (int i = 0; i < dim; ++i) {
    centroid[static_cast<std::size_t>(i)] += shift * dir[static_cast<std::size_t>(i)];
  }
  return centroid;
}

std::vector<double> SynthContext::mix_mean(const ClassMix& mix, bool high_dim) const {
  const int dim = high_dim ? world_.feature_dim_high : world_.feature_dim_low;
  std::vector<double> out(static_cast<std::size_t>(dim), 0.0);
  for (const auto& [class_id, weight] : mix.parts) {
    const auto mean_c = class_mean(class_id, high_dim);
    for (int i = 0; i < dim; ++i) {
      out[static_cast<std::size_t>(i)] += weight * mean_c[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

namespace {

void fabricate_row(const SynthContext& ctx, const std::vector<GroundTruthObject>& objects,
                   const std::vector<std::vector<double>>& means, FeatureMap& map, int row,
                   std::uint64_t row_seed) {
  const auto& emb = ctx.emulation().embedding;
  const double r2 = 2.0 * emb.influence_radius * emb.influence_radius;
  const double cutoff = 18.0 * emb.influence_radius * emb.influence_radius;  // w < ~1e-4
  Rng rng(row_seed);
  std::vector<double> acc(static_cast<std::size_t>(map.dim));
  for (int c = 0; c < map.cols; ++c) {
    const double x = map.origin_x + c * map.cell_size;
    const double y = map.origin_y + row * map.cell_size;
    std::fill(acc.begin(), acc.end(), 0.0);
    double wsum = 0.0;
    for (std::size_t o = 0; o < objects.size(); ++o) {
      const double dx = objects[o].box.cx - x;
      const double dy = objects[o].box.cy - y;
      const double d2 = dx * dx + dy * dy;
      if (d2 > cutoff) continue;
      const double w = std::exp(-d2 / r2);
      wsum += w;
      const auto& mu = means[o];
      for (int i = 0; i < map.dim; ++i) acc[static_cast<std::size_t>(i)] += w * mu[static_cast<std::size_t>(i)];
    }
    float* cell = map.cell(row, c);
    const double denom = wsum + 0.25;  // background decays toward zero
    for (int i = 0; i < map.dim; ++i) {
      cell[i] = static_cast<float>(acc[static_cast<std::size_t>(i)] / denom +
                                   emb.map_noise_std * rng.normal());
    }
  }
}

}  // namespace

FeatureMap SynthContext::fabricate_map_serial(const std::vector<GroundTruthObject>& objects,
                                              const std::vector<ClassMix>& mix, bool high_dim,
                                              std::uint64_t scan_seed) const {
  FeatureMap map;
  const int g = grid_cells();
  map.rows = g;
  map.cols = g;
  map.dim = high_dim ? world_.feature_dim_high : world_.feature_dim_low;
  map.cell_size = world_.cell_size;
  map.origin_x = -0.5 * world_.extent + (0.5 - kMapPadCells) * world_.cell_size;
  map.origin_y = -0.5 * world_.extent + (0.5 - kMapPadCells) * world_.cell_size;
  map.data.assign(static_cast<std::size_t>(g) * static_cast<std::size_t>(g) *
                      static_cast<std::size_t>(map.dim),
                  0.0f);

  std::vector<std::vector<double>> means(objects.size());
  for (std::size_t o = 0; o < objects.size(); ++o) means[o] = mix_mean(mix[o], high_dim);

  const std::uint64_t tag =
      mix_seed(scan_seed, high_dim ? hash_string("map-high") : hash_string("map-low"));
  for (int r = 0; r < g; ++r) {
    fabricate_row(*this, objects, means, map, r, mix_seed(tag, static_cast<std::uint64_t>(r)));
  }
  return map;
}

FeatureMap SynthContext::fabricate_map(const std::vector<GroundTruthObject>& objects,
                                       const std::vector<ClassMix>& mix, bool high_dim,
                                       std::uint64_t scan_seed) const {
  FeatureMap map;
  const int g = grid_cells();
  map.rows = g;
  map.cols = g;
  map.dim = high_dim ? world_.feature_dim_high : world_.feature_dim_low;
  map.cell_size = world_.cell_size;
  map.origin_x = -0.5 * world_.extent + (0.5 - kMapPadCells) * world_.cell_size;
  map.origin_y = -0.5 * world_.extent + (0.5 - kMapPadCells) * world_.cell_size;
  map.data.assign(static_cast<std::size_t>(g) * static_cast<std::size_t>(g) *
                      static_cast<std::size_t>(map.dim),
                  0.0f);

  std::vector<std::vector<double>> means(objects.size());
  for (std::size_t o = 0; o < objects.size(); ++o) means[o] = mix_mean(mix[o], high_dim);

  const std::uint64_t tag =
      mix_seed(scan_seed, high_dim ? hash_string("map-high") : hash_string("map-low"));
  parallel_for(g, [&](std::int64_t r) {
    fabricate_row(*this, objects, means, map, static_cast<int>(r),
                  mix_seed(tag, static_cast<std::uint64_t>(r)));
  });
  return map;
}

std::vector<std::vector<double>> emulate_mc_samples(const Detection& det,
                                                    const DetectorEmulation& emu, int k,
                                                    bool open_origin, Rng& rng) {
  const double std = emu.mc.noise_std * (open_origin ? emu.mc.open_widen : 1.0);
  std::vector<std::vector<double>> samples(static_cast<std::size_t>(k));
  for (int s = 0; s < k; ++s) {
    auto& sample = samples[static_cast<std::size_t>(s)];
    sample.resize(det.logits.size());
    for (std::size_t i = 0; i < det.logits.size(); ++i) {
      sample[i] = det.logits[i] + std * rng.normal();
    }
  }
  return samples;
}

std::vector<Detection> SynthContext::emulate_detections(
    const std::vector<GroundTruthObject>& objects, const std::vector<ClassMix>& mix,
    const std::vector<int>& unknown_gt, Rng& rng) const {
  const int n_known = static_cast<int>(manifest_.known_count());
  std::vector<char> forged(objects.size(), 0);
  for (const int i : unknown_gt) forged[static_cast<std::size_t>(i)] = 1;

  std::vector<Detection> dets;
  for (std::size_t o = 0; o < objects.size(); ++o) {
    const GroundTruthObject& gt = objects[o];
    const bool open_origin = gt.is_open || forged[o] != 0;
    const double miss = open_origin ? emu_.miss_rate_open : emu_.miss_rate_known;
    if (rng.bernoulli(miss)) continue;

    Detection det;
    det.box = gt.box;
    det.box.cx += rng.normal(0.0, emu_.center_jitter_std);
    det.box.cy += rng.normal(0.0, emu_.center_jitter_std);
    det.box.cz += rng.normal(0.0, 0.5 * emu_.center_jitter_std);
    const BetaPrior& prior = open_origin ? emu_.score_open : emu_.score_known;
    det.score = rng.beta(prior.a, prior.b);

    // Semantically-closest known class: the object's own class when known,
    // the heaviest known blend part for forged geometry, uniform otherwise.
    int proxy = -1;
    if (!open_origin) {
      proxy = gt.class_id;
    } else {
      double best_weight = -1.0;
      for (const auto& [class_id, weight] : mix[o].parts) {
        if (class_id < n_known && weight > best_weight) {
          best_weight = weight;
          proxy = class_id;
        }
      }
      if (proxy < 0) proxy = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n_known)));
    }
    const double base = open_origin ? emu_.logits.base_open : emu_.logits.base_known;
    const double gap = open_origin ? emu_.logits.gap_open : emu_.logits.gap_known;
    det.logits.resize(static_cast<std::size_t>(n_known));
    for (int c = 0; c < n_known; ++c) {
      det.logits[static_cast<std::size_t>(c)] =
          base + (c == proxy ? gap : 0.0) + emu_.logits.noise_std * rng.normal();
    }
    det.predicted_class = static_cast<int>(
        std::max_element(det.logits.begin(), det.logits.end()) - det.logits.begin());

    const auto mean = mix_mean(mix[o], /*high_dim=*/false);
    det.embedding.resize(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) {
      det.embedding[i] = static_cast<float>(mean[i] + emu_.embedding.noise_std * rng.normal());
    }
    if (emu_.mc.samples >= 2) {
      det.logit_samples = emulate_mc_samples(det, emu_, emu_.mc.samples, open_origin, rng);
    }
    dets.push_back(std::move(det));
  }

  const int n_clutter = rng.poisson(emu_.clutter_rate);
  for (int k = 0; k < n_clutter; ++k) {
    Detection det;
    det.box.l = rng.uniform(0.5, 4.0);
    det.box.w = rng.uniform(0.4, 2.5);
    det.box.h = rng.uniform(0.5, 2.0);
    det.box.yaw = rng.uniform(-kPi, kPi);
    det.box.cx = rng.uniform(-0.475 * world_.extent, 0.475 * world_.extent);
    det.box.cy = rng.uniform(-0.475 * world_.extent, 0.475 * world_.extent);
    det.box.cz = 0.5 * det.box.h;
    det.score = rng.beta(emu_.score_clutter.a, emu_.score_clutter.b);
    const int proxy = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n_known)));
    det.logits.resize(static_cast<std::size_t>(n_known));
    for (int c = 0; c < n_known; ++c) {
      det.logits[static_cast<std::size_t>(c)] =
          emu_.logits.base_clutter + (c == proxy ? emu_.logits.gap_clutter : 0.0) +
          emu_.logits.noise_std * rng.normal();
    }
    det.predicted_class = static_cast<int>(
        std::max_element(det.logits.begin(), det.logits.end()) - det.logits.begin());
    det.embedding.resize(static_cast<std::size_t>(world_.feature_dim_low));
    for (auto& v : det.embedding) {
      v = static_cast<float>(emu_.embedding.noise_std * rng.normal());
    }
    if (emu_.mc.samples >= 2) {
      det.logit_samples = emulate_mc_samples(det, emu_, emu_.mc.samples, /*open_origin=*/true, rng);
    }
    dets.push_back(std::move(det));
  }
  return dets;
}

Scan generate_scan(const SynthContext& ctx, int scan_index) {
  const WorldConfig& world = ctx.world();
  const DatasetManifest& manifest = ctx.manifest();
  Rng rng(mix_seed(world.rng_seed, static_cast<std::uint64_t>(scan_index)));

  Scan scan;
  char id[32];
  std::snprintf(id, sizeof(id), "scan_%05d", scan_index);
  scan.scan_id = id;

  const bool open_scan = is_open_scan(world, scan_index);

  // Place objects class by class, rejecting overlapping poses.
  for (const ClassSpec& spec : world.classes) {
    if (spec.open && !open_scan) continue;
    const int class_id = manifest.class_index(spec.name);
    const int count = static_cast<int>(rng.uniform_int(spec.count_range[0], spec.count_range[1]));
    for (int k = 0; k < count; ++k) {
      Box3D box;
      for (int a = 0; a < 3; ++a) {
        const std::size_t ai = static_cast<std::size_t>(a);
        const double v = rng.normal(spec.size_mean[ai], spec.size_std[ai]);
        const double lo = std::max(0.05, 0.25 * spec.size_mean[ai]);
        (a == 0 ? box.l : a == 1 ? box.w : box.h) = std::max(v, lo);
      }
      box.yaw = rng.uniform(-kPi, kPi);
      const double margin = std::min(0.5 * std::max(box.l, box.w), 0.25 * world.extent);
      const double half = 0.5 * world.extent - margin;
      bool placed = false;
      for (int attempt = 0; attempt < 50 && !placed; ++attempt) {
        box.cx = rng.uniform(-half, half);
        box.cy = rng.uniform(-half, half);
        box.cz = 0.5 * box.h;
        placed = true;
        for (const auto& other : scan.ground_truth) {
          if (box_overlap_3d(box, other.box) > 0.0) {
            placed = false;
            break;
          }
        }
      }
      // Last resort: accept the final pose even if it overlaps, so open
      // scans always carry their open objects.
      GroundTruthObject gt;
      gt.box = box;
      gt.class_id = class_id;
      gt.is_open = spec.open;
      scan.ground_truth.push_back(std::move(gt));
    }
  }

  // Member points, uniform inside each box.
  for (auto& gt : scan.ground_truth) {
    const ClassSpec* spec = nullptr;
    for (const auto& s : world.classes) {
      if (manifest.class_index(s.name) == gt.class_id) {
        spec = &s;
        break;
      }
    }
    const int n_points =
        static_cast<int>(rng.uniform_int(spec->points_range[0], spec->points_range[1]));
    std::vector<std::int64_t> indices;
    const double c = std::cos(gt.box.yaw);
    const double s = std::sin(gt.box.yaw);
    for (int k = 0; k < n_points; ++k) {
      const double lx = rng.uniform(-0.5 * gt.box.l, 0.5 * gt.box.l);
      const double ly = rng.uniform(-0.5 * gt.box.w, 0.5 * gt.box.w);
      const double lz = rng.uniform(-0.5 * gt.box.h, 0.5 * gt.box.h);
      indices.push_back(static_cast<std::int64_t>(scan.cloud.points.size()));
      scan.cloud.points.push_back(
          {static_cast<float>(gt.box.cx + c * lx - s * ly),
           static_cast<float>(gt.box.cy + s * lx + c * ly),
           static_cast<float>(gt.box.cz + lz),
           static_cast<float>(std::max(0.0, rng.normal(kIntensityMean, kIntensityStd)))});
    }
    gt.point_indices = std::move(indices);
  }
  for (int k = 0; k < world.background_points; ++k) {
    scan.cloud.points.push_back(
        {static_cast<float>(rng.uniform(-0.5 * world.extent, 0.5 * world.extent)),
         static_cast<float>(rng.uniform(-0.5 * world.extent, 0.5 * world.extent)),
         static_cast<float>(rng.uniform(0.0, 0.25)),
         static_cast<float>(std::max(0.0, rng.normal(kIntensityMean, kIntensityStd)))});
  }

  std::vector<ClassMix> mix(scan.ground_truth.size());
  for (std::size_t i = 0; i < mix.size(); ++i) {
    mix[i].parts = {{scan.ground_truth[i].class_id, 1.0}};
  }
  scan.detections = ctx.emulate_detections(scan.ground_truth, mix, {}, rng);

  if (world.with_feature_maps) {
    const std::uint64_t map_seed = mix_seed(world.rng_seed, static_cast<std::uint64_t>(scan_index));
    scan.feature_map_low = ctx.fabricate_map(scan.ground_truth, mix, false, map_seed);
    scan.feature_map_high = ctx.fabricate_map(scan.ground_truth, mix, true, map_seed);
  }
  return scan;
}

DatasetManifest generate_world(const WorldConfig& world, const DetectorEmulation& emu,
                               const std::string& out_dir) {
  validate_world_config(world);

  DatasetManifest manifest;
  manifest.name = "synth-world";
  for (const auto& spec : world.classes) {
    (spec.open ? manifest.open_classes : manifest.known_classes).push_back(spec.name);
  }
  manifest.intensity_mean = kIntensityMean;
  manifest.intensity_std = kIntensityStd;
  manifest.base_dir = out_dir;

  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "scans", ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir);

  const SynthContext ctx(world, emu, manifest);

  std::vector<std::string> paths(static_cast<std::size_t>(world.n_scans));
  std::vector<double> sums(paths.size(), 0.0);
  std::vector<double> sq_sums(paths.size(), 0.0);
  std::vector<std::int64_t> counts(paths.size(), 0);
  std::vector<std::string> errors(paths.size());

  parallel_for(world.n_scans, [&](std::int64_t i) {
    const std::size_t idx = static_cast<std::size_t>(i);
    try {
      const Scan scan = generate_scan(ctx, static_cast<int>(i));
      char name[48];
      std::snprintf(name, sizeof(name), "scans/scan_%05d.json", static_cast<int>(i));
      paths[idx] = name;
      save_scan(scan, manifest, (fs::path(out_dir) / name).string());
      for (const Point& p : scan.cloud.points) {
        sums[idx] += p.intensity;
        sq_sums[idx] += static_cast<double>(p.intensity) * static_cast<double>(p.intensity);
      }
      counts[idx] = static_cast<std::int64_t>(scan.cloud.size());
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  });
  for (const auto& err : errors) {
    if (!err.empty()) throw IoError(err);
  }

  manifest.scan_paths = paths;
  double total = 0.0;
  double total_sq = 0.0;
  std::int64_t n = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    total += sums[i];
    total_sq += sq_sums[i];
    n += counts[i];
  }
  if (n > 0) {
    const double mean = total / static_cast<double>(n);
    manifest.intensity_mean = mean;
    manifest.intensity_std =
        std::max(1e-6, std::sqrt(std::max(0.0, total_sq / static_cast<double>(n) - mean * mean)));
  }

  save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  save_world_config(world, emu, (fs::path(out_dir) / "world_echo.json").string());
  return manifest;
}

// --- world config JSON ---

namespace {

json class_spec_to_json(const ClassSpec& s) {
  return json{{"name", s.name},
              {"open", s.open},
              {"size_mean", s.size_mean},
              {"size_std", s.size_std},
              {"count_range", s.count_range},
              {"points_range", s.points_range}};
}

ClassSpec class_spec_from_json(const json& j) {
  ClassSpec s;
  s.name = j.at("name").get<std::string>();
  s.open = j.at("open").get<bool>();
  s.size_mean = j.at("size_mean").get<std::array<double, 3>>();
  s.size_std = j.at("size_std").get<std::array<double, 3>>();
  s.count_range = j.at("count_range").get<std::array<int, 2>>();
  s.points_range = j.at("points_range").get<std::array<int, 2>>();
  return s;
}

}  // namespace

void save_world_config(const WorldConfig& world, const DetectorEmulation& emu,
                       const std::string& path) {
  json w;
  w["n_scans"] = world.n_scans;
  w["open_scan_fraction"] = world.open_scan_fraction;
  w["extent"] = world.extent;
  w["cell_size"] = world.cell_size;
  w["feature_dim_low"] = world.feature_dim_low;
  w["feature_dim_high"] = world.feature_dim_high;
  w["with_feature_maps"] = world.with_feature_maps;
  w["background_points"] = world.background_points;
  w["rng_seed"] = world.rng_seed;
  w["classes"] = json::array();
  for (const auto& spec : world.classes) w["classes"].push_back(class_spec_to_json(spec));

  json e;
  e["miss_rate_known"] = emu.miss_rate_known;
  e["miss_rate_open"] = emu.miss_rate_open;
  e["center_jitter_std"] = emu.center_jitter_std;
  e["score_known"] = {emu.score_known.a, emu.score_known.b};
  e["score_open"] = {emu.score_open.a, emu.score_open.b};
  e["score_clutter"] = {emu.score_clutter.a, emu.score_clutter.b};
  e["logit_model"] = {{"base_known", emu.logits.base_known},
                      {"base_open", emu.logits.base_open},
                      {"base_clutter", emu.logits.base_clutter},
                      {"gap_known", emu.logits.gap_known},
                      {"gap_open", emu.logits.gap_open},
                      {"gap_clutter", emu.logits.gap_clutter},
                      {"noise_std", emu.logits.noise_std}};
  e["embedding_model"] = {{"class_sep", emu.embedding.class_sep},
                          {"noise_std", emu.embedding.noise_std},
                          {"open_shift_sigmas", emu.embedding.open_shift_sigmas},
                          {"map_noise_std", emu.embedding.map_noise_std},
                          {"influence_radius", emu.embedding.influence_radius},
                          {"feature_seed", emu.embedding.feature_seed}};
  e["mc"] = {{"samples", emu.mc.samples},
             {"noise_std", emu.mc.noise_std},
             {"open_widen", emu.mc.open_widen}};
  e["clutter_rate"] = emu.clutter_rate;

  std::ofstream out(path);
  if (!out) throw IoError("cannot write world config: " + path);
  out << json{{"world", w}, {"emulation", e}}.dump(2) << "\n";
  if (!out) throw IoError("failed writing world config: " + path);
}

void load_world_config(const std::string& path, WorldConfig& world, DetectorEmulation& emu) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open world config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("world config ") + path + ": " + e.what());
  }
  try {
    const json& w = j.at("world");
    world = WorldConfig{};
    world.classes.clear();
    world.n_scans = w.value("n_scans", world.n_scans);
    world.open_scan_fraction = w.value("open_scan_fraction", world.open_scan_fraction);
    world.extent = w.value("extent", world.extent);
    world.cell_size = w.value("cell_size", world.cell_size);
    world.feature_dim_low = w.value("feature_dim_low", world.feature_dim_low);
    world.feature_dim_high = w.value("feature_dim_high", world.feature_dim_high);
    world.with_feature_maps = w.value("with_feature_maps", world.with_feature_maps);
    world.background_points = w.value("background_points", world.background_points);
    world.rng_seed = w.value("rng_seed", world.rng_seed);
    if (w.contains("classes")) {
      for (const auto& c : w.at("classes")) world.classes.push_back(class_spec_from_json(c));
    } else {
      world.classes = default_world().classes;
    }

    emu = DetectorEmulation{};
    if (j.contains("emulation")) {
      const json& e = j.at("emulation");
      emu.miss_rate_known = e.value("miss_rate_known", emu.miss_rate_known);
      emu.miss_rate_open = e.value("miss_rate_open", emu.miss_rate_open);
      emu.center_jitter_std = e.value("center_jitter_std", emu.center_jitter_std);
      auto read_beta = [&](const char* key, BetaPrior& prior) {
        if (e.contains(key)) {
          prior.a = e.at(key).at(0).get<double>();
          prior.b = e.at(key).at(1).get<double>();
        }
      };
      read_beta("score_known", emu.score_known);
      read_beta("score_open", emu.score_open);
      read_beta("score_clutter", emu.score_clutter);
      if (e.contains("logit_model")) {
        const json& lm = e.at("logit_model");
        emu.logits.base_known = lm.value("base_known", emu.logits.base_known);
        emu.logits.base_open = lm.value("base_open", emu.logits.base_open);
        emu.logits.base_clutter = lm.value("base_clutter", emu.logits.base_clutter);
        emu.logits.gap_known = lm.value("gap_known", emu.logits.gap_known);
        emu.logits.gap_open = lm.value("gap_open", emu.logits.gap_open);
        emu.logits.gap_clutter = lm.value("gap_clutter", emu.logits.gap_clutter);
        emu.logits.noise_std = lm.value("noise_std", emu.logits.noise_std);
      }
      if (e.contains("embedding_model")) {
        const json& em = e.at("embedding_model");
        emu.embedding.class_sep = em.value("class_sep", emu.embedding.class_sep);
        emu.embedding.noise_std = em.value("noise_std", emu.embedding.noise_std);
        emu.embedding.open_shift_sigmas =
            em.value("open_shift_sigmas", emu.embedding.open_shift_sigmas);
        emu.embedding.map_noise_std = em.value("map_noise_std", emu.embedding.map_noise_std);
        emu.embedding.influence_radius =
            em.value("influence_radius", emu.embedding.influence_radius);
        emu.embedding.feature_seed = em.value("feature_seed", emu.embedding.feature_seed);
      }
      if (e.contains("mc")) {
        const json& mc = e.at("mc");
        emu.mc.samples = mc.value("samples", emu.mc.samples);
        emu.mc.noise_std = mc.value("noise_std", emu.mc.noise_std);
        emu.mc.open_widen = mc.value("open_widen", emu.mc.open_widen);
      }
      emu.clutter_rate = e.value("clutter_rate", emu.clutter_rate);
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("world config ") + path + ": " + e.what());
  }
  validate_world_config(world);
}

}  // namespace ood3d

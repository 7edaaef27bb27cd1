#include "ood3d/forge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include <json.hpp>

#include "ood3d/errors.hpp"
#include "ood3d/matcher.hpp"

namespace ood3d {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

void ordered_range(const std::array<double, 2>& r, const char* name) {
  if (!(r[0] <= r[1])) throw ConfigError(std::string(name) + " range must be ordered");
}

std::array<double, 3> to_local(const Box3D& box, double x, double y, double z) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double dx = x - box.cx;
  const double dy = y - box.cy;
  return {c * dx + s * dy, -s * dx + c * dy, z - box.cz};
}

std::array<double, 3> to_world(const Box3D& box, const std::array<double, 3>& p) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  return {box.cx + c * p[0] - s * p[1], box.cy + s * p[0] + c * p[1], box.cz + p[2]};
}

// Factor from [lo, hi] minus the excluded band, area-proportional.
double sample_banded(Rng& rng, const std::array<double, 2>& range,
                     const std::array<double, 2>& band) {
  const double left = std::max(0.0, band[0] - range[0]);
  const double right = std::max(0.0, range[1] - band[1]);
  if (left + right <= 0.0) return rng.uniform(range[0], range[1]);
  const double u = rng.uniform() * (left + right);
  return u < left ? range[0] + u : band[1] + (u - left);
}

struct ClassMixBuilder {
  std::vector<ClassMix> mix;
  explicit ClassMixBuilder(const Scan& scan) {
    mix.resize(scan.ground_truth.size());
    for (std::size_t i = 0; i < scan.ground_truth.size(); ++i) {
      mix[i].parts = {{scan.ground_truth[i].class_id, 1.0}};
    }
  }
};

}  // namespace

void validate_forge_config(const ForgeConfig& cfg) {
  ordered_range(cfg.mix_range, "mix_range");
  ordered_range(cfg.scale_range, "scale_range");
  ordered_range(cfg.resize_axis_range, "resize_axis_range");
  ordered_range(cfg.resize_excluded_band, "resize_excluded_band");
  if (cfg.inject_count_range[0] > cfg.inject_count_range[1] ||
      cfg.grid_cells_range[0] > cfg.grid_cells_range[1] ||
      cfg.keep_per_cell_range[0] > cfg.keep_per_cell_range[1]) {
    throw ConfigError("forge count ranges must be ordered");
  }
  if (cfg.mix_prob < 0.0 || cfg.mix_prob > 1.0) throw ConfigError("mix_prob must be in [0,1]");
  if (cfg.topk_k < 0) throw ConfigError("topk_k must be >= 0");
  if (cfg.grid_cells_range[0] < 1 || cfg.keep_per_cell_range[0] < 1) {
    throw ConfigError("grid and keep counts must be >= 1");
  }
  if (cfg.surface_samples < 1) throw ConfigError("surface_samples must be >= 1");
}

DatasetManifest manifest_with_injected(const DatasetManifest& manifest) {
  DatasetManifest out = manifest;
  if (out.class_index(kInjectedClass) < 0) out.open_classes.push_back(kInjectedClass);
  return out;
}

std::vector<HeadInput> forge_gaussian(const std::vector<HeadInput>& inputs,
                                      const ForgeConfig& cfg) {
  Rng rng(mix_seed(cfg.rng_seed, hash_string("gaussian")));
  std::vector<HeadInput> out = inputs;
  for (const HeadInput& in : inputs) {
    if (in.label != 0) continue;
    HeadInput forged = in;
    forged.label = 1;
    for (int i = 0; i < in.embed_dim; ++i) {
      forged.x[static_cast<std::size_t>(i)] += rng.normal();
    }
    out.push_back(std::move(forged));
  }
  return out;
}

LocalPoints gt_local_points(const Scan& scan, int gt_index) {
  const GroundTruthObject& gt = scan.ground_truth[static_cast<std::size_t>(gt_index)];
  LocalPoints out;
  if (!gt.point_indices) return out;
  for (const std::int64_t idx : *gt.point_indices) {
    const Point& p = scan.cloud.points[static_cast<std::size_t>(idx)];
    out.xyz.push_back(to_local(gt.box, p.x, p.y, p.z));
    out.intensity.push_back(p.intensity);
  }
  return out;
}

std::vector<int> min_cost_assignment(const std::vector<double>& cost, int n) {
  // Hungarian with row/column potentials; 1-indexed internals.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // column -> row
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost[static_cast<std::size_t>(i0 - 1) * static_cast<std::size_t>(n) +
                                static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (match[static_cast<std::size_t>(j)] > 0) {
      row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
    }
  }
  return row_to_col;
}

namespace {

std::vector<int> match_point_sets(const LocalPoints& a, const LocalPoints& b) {
  const int n = static_cast<int>(a.xyz.size());
  if (n <= 128) {
    std::vector<double> cost(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const auto& p = a.xyz[static_cast<std::size_t>(i)];
        const auto& q = b.xyz[static_cast<std::size_t>(j)];
        const double dx = p[0] - q[0];
        const double dy = p[1] - q[1];
        const double dz = p[2] - q[2];
        cost[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
             static_cast<std::size_t>(j)] = dx * dx + dy * dy + dz * dz;
      }
    }
    return min_cost_assignment(cost, n);
  }
  // Greedy nearest-neighbour fallback for big objects.
  std::vector<int> out(static_cast<std::size_t>(n), -1);
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int pick = -1;
    for (int j = 0; j < n; ++j) {
      if (taken[static_cast<std::size_t>(j)]) continue;
      const auto& p = a.xyz[static_cast<std::size_t>(i)];
      const auto& q = b.xyz[static_cast<std::size_t>(j)];
      const double dx = p[0] - q[0];
      const double dy = p[1] - q[1];
      const double dz = p[2] - q[2];
      const double d = dx * dx + dy * dy + dz * dz;
      if (d < best) {
        best = d;
        pick = j;
      }
    }
    out[static_cast<std::size_t>(i)] = pick;
    taken[static_cast<std::size_t>(pick)] = 1;
  }
  return out;
}

LocalPoints subsample(const LocalPoints& pts, int n, Rng& rng) {
  if (static_cast<int>(pts.xyz.size()) <= n) return pts;
  const std::vector<int> keep = rng.sample_indices(static_cast<int>(pts.xyz.size()), n);
  LocalPoints out;
  for (const int i : keep) {
    out.xyz.push_back(pts.xyz[static_cast<std::size_t>(i)]);
    out.intensity.push_back(pts.intensity[static_cast<std::size_t>(i)]);
  }
  return out;
}

// Rebuild the cloud after some objects' member points were replaced.
// Point order: untouched points keep their relative order, replaced
// objects' new points are appended per object in GT order.
void rebuild_cloud(Scan& scan, const std::map<int, LocalPoints>& replacement) {
  std::vector<char> removed(scan.cloud.size(), 0);
  for (const auto& [gt_idx, pts] : replacement) {
    (void)pts;
    const auto& indices = *scan.ground_truth[static_cast<std::size_t>(gt_idx)].point_indices;
    for (const std::int64_t i : indices) removed[static_cast<std::size_t>(i)] = 1;
  }

  std::vector<std::int64_t> remap(scan.cloud.size(), -1);
  PointCloud next;
  for (std::size_t i = 0; i < scan.cloud.size(); ++i) {
    if (!removed[i]) {
      remap[i] = static_cast<std::int64_t>(next.points.size());
      next.points.push_back(scan.cloud.points[i]);
    }
  }
  for (auto& gt : scan.ground_truth) {
    if (!gt.point_indices) continue;
    std::vector<std::int64_t> kept;
    for (const std::int64_t i : *gt.point_indices) {
      if (remap[static_cast<std::size_t>(i)] >= 0) kept.push_back(remap[static_cast<std::size_t>(i)]);
    }
    gt.point_indices = std::move(kept);
  }
  for (const auto& [gt_idx, pts] : replacement) {
    GroundTruthObject& gt = scan.ground_truth[static_cast<std::size_t>(gt_idx)];
    std::vector<std::int64_t> indices;
    for (std::size_t k = 0; k < pts.xyz.size(); ++k) {
      const auto world = to_world(gt.box, pts.xyz[k]);
      indices.push_back(static_cast<std::int64_t>(next.points.size()));
      next.points.push_back({static_cast<float>(world[0]), static_cast<float>(world[1]),
                             static_cast<float>(world[2]),
                             static_cast<float>(std::max(0.0, pts.intensity[k]))});
    }
    gt.point_indices = std::move(indices);
  }
  scan.cloud = std::move(next);
}

}  // namespace

LocalPoints mixup_pair(const LocalPoints& a, const LocalPoints& b, double lambda) {
  if (a.xyz.size() != b.xyz.size()) throw DataError("mixup_pair needs equal-size point sets");
  const std::vector<int> assign = match_point_sets(a, b);
  LocalPoints out;
  out.xyz.resize(a.xyz.size());
  out.intensity.resize(a.xyz.size());
  for (std::size_t i = 0; i < a.xyz.size(); ++i) {
    const auto& p = a.xyz[i];
    const auto& q = b.xyz[static_cast<std::size_t>(assign[i])];
    out.xyz[i] = {(1.0 - lambda) * p[0] + lambda * q[0], (1.0 - lambda) * p[1] + lambda * q[1],
                  (1.0 - lambda) * p[2] + lambda * q[2]};
    out.intensity[i] = (1.0 - lambda) * a.intensity[i] + lambda * b.intensity[static_cast<std::size_t>(assign[i])];
  }
  return out;
}

void resize_object(Scan& scan, int gt_index, const std::array<double, 3>& factors) {
  GroundTruthObject& gt = scan.ground_truth[static_cast<std::size_t>(gt_index)];
  if (!gt.point_indices || gt.point_indices->empty()) {
    throw NoMemberPoints("cannot resize object " + std::to_string(gt_index) +
                         " without member points");
  }
  for (const std::int64_t idx : *gt.point_indices) {
    Point& p = scan.cloud.points[static_cast<std::size_t>(idx)];
    auto local = to_local(gt.box, p.x, p.y, p.z);
    local[0] *= factors[0];
    local[1] *= factors[1];
    local[2] *= factors[2];
    const auto world = to_world(gt.box, local);
    p.x = static_cast<float>(world[0]);
    p.y = static_cast<float>(world[1]);
    p.z = static_cast<float>(world[2]);
  }
  gt.box.l *= factors[0];
  gt.box.w *= factors[1];
  gt.box.h *= factors[2];
}

ForgedScan forge_resize(const Scan& scan, const ForgeConfig& cfg) {
  validate_forge_config(cfg);
  Rng rng(derive_seed(mix_seed(cfg.rng_seed, hash_string("resize")), scan.scan_id));

  ForgedScan out;
  out.scan = scan;
  out.gt_class_mix = ClassMixBuilder(scan).mix;

  int known_count = 0;
  int eligible = 0;
  for (const auto& gt : scan.ground_truth) {
    if (gt.is_open) continue;
    ++known_count;
    if (gt.point_indices && !gt.point_indices->empty()) ++eligible;
  }
  if (known_count > 0 && eligible == 0) {
    throw NoMemberPoints("no known object in scan " + scan.scan_id + " carries point indices");
  }

  for (int i = 0; i < static_cast<int>(scan.ground_truth.size()); ++i) {
    const auto& gt = scan.ground_truth[static_cast<std::size_t>(i)];
    if (gt.is_open || !gt.point_indices || gt.point_indices->empty()) continue;
    if (!rng.bernoulli(cfg.mix_prob)) continue;
    const std::array<double, 3> factors = {
        sample_banded(rng, cfg.resize_axis_range, cfg.resize_excluded_band),
        sample_banded(rng, cfg.resize_axis_range, cfg.resize_excluded_band),
        sample_banded(rng, cfg.resize_axis_range, cfg.resize_excluded_band)};
    resize_object(out.scan, i, factors);
    out.unknown_gt.push_back(i);
  }
  return out;
}

ForgedScan forge_pointmixup(const Scan& scan, const ForgeConfig& cfg) {
  validate_forge_config(cfg);
  Rng rng(derive_seed(mix_seed(cfg.rng_seed, hash_string("mixup")), scan.scan_id));

  std::vector<int> eligible;
  for (int i = 0; i < static_cast<int>(scan.ground_truth.size()); ++i) {
    const auto& gt = scan.ground_truth[static_cast<std::size_t>(i)];
    if (gt.point_indices &&
        static_cast<int>(gt.point_indices->size()) >= cfg.min_points) {
      eligible.push_back(i);
    }
  }
  if (eligible.size() < 2) {
    throw TooFewEligible("PointMixup needs >= 2 objects with >= " +
                         std::to_string(cfg.min_points) + " points in scan " + scan.scan_id);
  }

  ForgedScan out;
  out.scan = scan;
  out.gt_class_mix = ClassMixBuilder(scan).mix;

  std::map<int, LocalPoints> replacement;
  for (std::size_t e = 0; e < eligible.size(); ++e) {
    const int gt_idx = eligible[e];
    if (!rng.bernoulli(cfg.mix_prob)) continue;
    std::size_t partner_pos = static_cast<std::size_t>(rng.uniform_index(eligible.size() - 1));
    if (partner_pos >= e) ++partner_pos;
    const int partner_idx = eligible[partner_pos];

    LocalPoints a = gt_local_points(scan, gt_idx);
    LocalPoints b = gt_local_points(scan, partner_idx);
    const int n = static_cast<int>(std::min(a.xyz.size(), b.xyz.size()));
    a = subsample(a, n, rng);
    b = subsample(b, n, rng);
    const double lambda = rng.uniform(cfg.mix_range[0], cfg.mix_range[1]);
    replacement[gt_idx] = mixup_pair(a, b, lambda);

    out.unknown_gt.push_back(gt_idx);
    const int cls_a = scan.ground_truth[static_cast<std::size_t>(gt_idx)].class_id;
    const int cls_b = scan.ground_truth[static_cast<std::size_t>(partner_idx)].class_id;
    out.gt_class_mix[static_cast<std::size_t>(gt_idx)].parts = {{cls_a, 1.0 - lambda},
                                                                {cls_b, lambda}};
  }
  rebuild_cloud(out.scan, replacement);
  return out;
}

ForgedScan forge_inject(const Scan& scan, const std::vector<TriMesh>& mesh_bank,
                        const DatasetManifest& manifest, const ForgeConfig& cfg) {
  validate_forge_config(cfg);
  if (mesh_bank.empty()) throw ConfigError("mesh bank is empty");
  const int injected_class = manifest.class_index(kInjectedClass);
  if (injected_class < 0) {
    throw SchemaError("manifest lacks the injected class; call manifest_with_injected first");
  }

  Rng rng(derive_seed(mix_seed(cfg.rng_seed, hash_string("inject")), scan.scan_id));

  // Placement region: the scan extent as seen by the cloud; GT bounds only
  // when the scan carries no points.
  double lo_x = std::numeric_limits<double>::max();
  double hi_x = std::numeric_limits<double>::lowest();
  double lo_y = lo_x;
  double hi_y = hi_x;
  if (scan.cloud.size() >= 2) {
    for (const Point& p : scan.cloud.points) {
      lo_x = std::min(lo_x, static_cast<double>(p.x));
      hi_x = std::max(hi_x, static_cast<double>(p.x));
      lo_y = std::min(lo_y, static_cast<double>(p.y));
      hi_y = std::max(hi_y, static_cast<double>(p.y));
    }
  } else {
    for (const auto& gt : scan.ground_truth) {
      lo_x = std::min(lo_x, gt.box.cx - gt.box.l);
      hi_x = std::max(hi_x, gt.box.cx + gt.box.l);
      lo_y = std::min(lo_y, gt.box.cy - gt.box.w);
      hi_y = std::max(hi_y, gt.box.cy + gt.box.w);
    }
  }
  if (!(lo_x < hi_x) || !(lo_y < hi_y)) {
    lo_x = lo_y = -50.0;
    hi_x = hi_y = 50.0;
  }

  ForgedScan out;
  out.scan = scan;
  out.gt_class_mix = ClassMixBuilder(scan).mix;

  const int n_objects = static_cast<int>(
      rng.uniform_int(cfg.inject_count_range[0], cfg.inject_count_range[1]));
  for (int obj = 0; obj < n_objects; ++obj) {
    const TriMesh mesh =
        normalize_unit(mesh_bank[static_cast<std::size_t>(rng.uniform_index(mesh_bank.size()))]);
    auto samples = sample_surface(mesh, cfg.surface_samples, rng);

    // Grid thinning over the sampled extent, g cells per axis, first k
    // samples kept per occupied voxel.
    const int g = static_cast<int>(rng.uniform_int(cfg.grid_cells_range[0], cfg.grid_cells_range[1]));
    const int keep =
        static_cast<int>(rng.uniform_int(cfg.keep_per_cell_range[0], cfg.keep_per_cell_range[1]));
    std::array<double, 3> lo{samples[0][0], samples[0][1], samples[0][2]};
    std::array<double, 3> hi = lo;
    for (const auto& p : samples) {
      for (int a = 0; a < 3; ++a) {
        const std::size_t ai = static_cast<std::size_t>(a);
        lo[ai] = std::min(lo[ai], p[ai]);
        hi[ai] = std::max(hi[ai], p[ai]);
      }
    }
    std::map<std::int64_t, int> voxel_count;
    std::vector<std::array<double, 3>> thinned;
    for (const auto& p : samples) {
      std::int64_t key = 0;
      for (int a = 0; a < 3; ++a) {
        const std::size_t ai = static_cast<std::size_t>(a);
        const double span = std::max(hi[ai] - lo[ai], 1e-12);
        int cell = static_cast<int>((p[ai] - lo[ai]) / span * g);
        cell = std::clamp(cell, 0, g - 1);
        key = key * g + cell;
      }
      if (voxel_count[key]++ < keep) thinned.push_back(p);
    }

    std::vector<float> intensities;
    intensities.reserve(thinned.size());
    for (std::size_t i = 0; i < thinned.size(); ++i) {
      intensities.push_back(static_cast<float>(
          std::max(0.0, rng.normal(manifest.intensity_mean, manifest.intensity_std))));
    }

    const double scale = rng.uniform(cfg.scale_range[0], cfg.scale_range[1]);
    for (auto& p : thinned) {
      for (int a = 0; a < 3; ++a) p[static_cast<std::size_t>(a)] *= scale;
    }
    // Recenter on the scaled bounding box so the GT box fits tightly.
    std::array<double, 3> plo{thinned[0][0], thinned[0][1], thinned[0][2]};
    std::array<double, 3> phi = plo;
    for (const auto& p : thinned) {
      for (int a = 0; a < 3; ++a) {
        const std::size_t ai = static_cast<std::size_t>(a);
        plo[ai] = std::min(plo[ai], p[ai]);
        phi[ai] = std::max(phi[ai], p[ai]);
      }
    }
    Box3D box;
    box.l = std::max(phi[0] - plo[0], 0.05);
    box.w = std::max(phi[1] - plo[1], 0.05);
    box.h = std::max(phi[2] - plo[2], 0.05);
    box.yaw = rng.uniform(-kPi, kPi);
    for (auto& p : thinned) {
      for (int a = 0; a < 3; ++a) {
        const std::size_t ai = static_cast<std::size_t>(a);
        p[ai] -= 0.5 * (plo[ai] + phi[ai]);
      }
    }

    bool placed = false;
    for (int attempt = 0; attempt < cfg.placement_attempts && !placed; ++attempt) {
      box.cx = rng.uniform(lo_x, hi_x);
      box.cy = rng.uniform(lo_y, hi_y);
      box.cz = 0.5 * box.h;  // bottom on the ground plane
      bool collides = false;
      for (const auto& gt : out.scan.ground_truth) {
        if (box_overlap_3d(box, gt.box) > 0.0) {
          collides = true;
          break;
        }
      }
      placed = !collides;
    }
    if (!placed) {
      throw NoFreeSpace("no collision-free pose for injected object in scan " + scan.scan_id);
    }

    GroundTruthObject gt;
    gt.box = box;
    gt.class_id = injected_class;
    gt.is_open = true;
    std::vector<std::int64_t> indices;
    for (std::size_t i = 0; i < thinned.size(); ++i) {
      const auto world = to_world(box, thinned[i]);
      indices.push_back(static_cast<std::int64_t>(out.scan.cloud.points.size()));
      out.scan.cloud.points.push_back({static_cast<float>(world[0]), static_cast<float>(world[1]),
                                       static_cast<float>(world[2]), intensities[i]});
    }
    gt.point_indices = std::move(indices);
    out.unknown_gt.push_back(static_cast<int>(out.scan.ground_truth.size()));
    out.scan.ground_truth.push_back(std::move(gt));
    ClassMix mix;
    mix.parts = {{injected_class, 1.0}};
    out.gt_class_mix.push_back(std::move(mix));
  }
  return out;
}

TopkSplit forge_topk(const Scan& scan, const RunConfig& run_cfg, int k) {
  TopkSplit split;

  std::vector<int> order(scan.detections.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scan.detections[static_cast<std::size_t>(a)].score >
           scan.detections[static_cast<std::size_t>(b)].score;
  });

  for (const int det_idx : order) {
    if (static_cast<int>(split.pseudo_unknown.size()) >= k) break;
    const Detection& det = scan.detections[static_cast<std::size_t>(det_idx)];
    bool overlaps_known = false;
    for (const auto& gt : scan.ground_truth) {
      if (gt.is_open) continue;
      if (box_overlap_3d(det.box, gt.box) > 0.0) {
        overlaps_known = true;
        break;
      }
    }
    if (!overlaps_known) split.pseudo_unknown.push_back(det_idx);
  }

  const MatchReport report = match_scan(scan, run_cfg, /*with_confusion=*/false);
  for (const auto& pair : report.pairs) {
    if (!scan.ground_truth[static_cast<std::size_t>(pair.ground_truth)].is_open) {
      split.known_matched.push_back(pair.detection);
    }
  }
  std::sort(split.known_matched.begin(), split.known_matched.end());
  return split;
}

void save_head_inputs(const std::vector<HeadInput>& inputs, const std::string& provenance,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write training records: " + path);
  for (const auto& in : inputs) {
    json j;
    j["x"] = in.x;
    j["y"] = in.label;
    j["embed_dim"] = in.embed_dim;
    j["provenance"] = provenance;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("failed writing training records: " + path);
}

std::vector<HeadInput> load_head_inputs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open training records: " + path);
  std::vector<HeadInput> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      HeadInput rec;
      rec.x = j.at("x").get<std::vector<double>>();
      rec.label = j.at("y").get<int>();
      rec.embed_dim = j.value("embed_dim", 0);
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw ParseError("training record line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::string to_string(ForgeMethod m) {
  switch (m) {
    case ForgeMethod::GaussianNoise:
      return "GaussianNoise";
    case ForgeMethod::MeshInjection:
      return "MeshInjection";
    case ForgeMethod::PointMixup:
      return "PointMixup";
    case ForgeMethod::Resizing:
      return "Resizing";
    case ForgeMethod::TopK:
      return "TopK";
  }
  return "TopK";
}

ForgeMethod forge_method_from_string(const std::string& s) {
  if (s == "GaussianNoise") return ForgeMethod::GaussianNoise;
  if (s == "MeshInjection") return ForgeMethod::MeshInjection;
  if (s == "PointMixup") return ForgeMethod::PointMixup;
  if (s == "Resizing") return ForgeMethod::Resizing;
  if (s == "TopK") return ForgeMethod::TopK;
  throw ConfigError("unknown forge method: " + s);
}

}  // namespace ood3d

#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ood3d/mlp.hpp"
#include "ood3d/rng.hpp"
#include "ood3d/scan_io.hpp"
#include "ood3d/types.hpp"

namespace ood3d::testing {

// Smallest |pre-activation| across the hidden layers. The central
// finite-difference oracle assumes local smoothness, so grad-check
// fixtures must stay clear of the rectifier kinks.
inline double kink_margin(const MlpHead& head, const std::vector<double>& x) {
  std::vector<double> a = x;
  double margin = 1e300;
  for (std::size_t l = 0; l + 1 < head.layers.size(); ++l) {
    const AffineLayer& layer = head.layers[l];
    std::vector<double> z(static_cast<std::size_t>(layer.out), 0.0);
    for (int o = 0; o < layer.out; ++o) {
      double acc = layer.biases[static_cast<std::size_t>(o)];
      for (int i = 0; i < layer.in; ++i) {
        acc += layer.weights[static_cast<std::size_t>(o) * static_cast<std::size_t>(layer.in) +
                             static_cast<std::size_t>(i)] *
               a[static_cast<std::size_t>(i)];
      }
      z[static_cast<std::size_t>(o)] = acc;
      margin = std::min(margin, std::abs(acc));
    }
    a = z;
    for (double& v : a) v = std::max(v, 0.0);
  }
  return margin;
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Scratch directory, recursively removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ood3d_" + tag + "_" + std::to_string(++counter) + "_" +
             std::to_string(static_cast<std::uint64_t>(
                 std::chrono::steady_clock::now().time_since_epoch().count())));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline DatasetManifest tiny_manifest() {
  DatasetManifest m;
  m.name = "test";
  m.known_classes = {"car", "pedestrian", "cyclist"};
  m.open_classes = {"stroller"};
  m.intensity_mean = 0.4;
  m.intensity_std = 0.2;
  return m;
}

inline Detection make_detection(const Box3D& box, double score, std::vector<double> logits) {
  Detection d;
  d.box = box;
  d.score = score;
  d.predicted_class = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[static_cast<std::size_t>(d.predicted_class)]) {
      d.predicted_class = static_cast<int>(i);
    }
  }
  d.logits = std::move(logits);
  return d;
}

inline GroundTruthObject make_gt(const Box3D& box, int class_id, bool is_open) {
  GroundTruthObject g;
  g.box = box;
  g.class_id = class_id;
  g.is_open = is_open;
  return g;
}

// Randomized but always-valid scan for round-trip and invariant tests.
inline Scan random_scan(Rng& rng, const DatasetManifest& manifest, bool with_maps = false) {
  Scan scan;
  scan.scan_id = "rt_" + std::to_string(rng.next_u64());

  const int n_points = static_cast<int>(rng.uniform_int(0, 60));
  for (int i = 0; i < n_points; ++i) {
    scan.cloud.points.push_back({static_cast<float>(rng.uniform(-80, 80)),
                                 static_cast<float>(rng.uniform(-80, 80)),
                                 static_cast<float>(rng.uniform(-2, 4)),
                                 static_cast<float>(rng.uniform(0, 1))});
  }

  const int n_gt = static_cast<int>(rng.uniform_int(0, 6));
  for (int g = 0; g < n_gt; ++g) {
    Box3D box{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 2),
              rng.uniform(0.3, 6),  rng.uniform(0.3, 3),  rng.uniform(0.3, 3),
              rng.uniform(-3.1, 3.1)};
    const int class_id = static_cast<int>(rng.uniform_index(manifest.class_count()));
    GroundTruthObject gt = make_gt(box, class_id, manifest.is_open_class(class_id));
    if (n_points > 0 && rng.bernoulli(0.7)) {
      std::vector<std::int64_t> indices;
      const int k = static_cast<int>(rng.uniform_int(0, std::min(n_points, 8)));
      for (int i = 0; i < k; ++i) indices.push_back(rng.uniform_int(0, n_points - 1));
      gt.point_indices = std::move(indices);
    }
    scan.ground_truth.push_back(std::move(gt));
  }

  const int n_det = static_cast<int>(rng.uniform_int(0, 6));
  const int emb_dim = static_cast<int>(rng.uniform_int(2, 8));
  for (int d = 0; d < n_det; ++d) {
    Box3D box{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(0, 2),
              rng.uniform(0.3, 6),  rng.uniform(0.3, 3),  rng.uniform(0.3, 3),
              rng.uniform(-3.1, 3.1)};
    std::vector<double> logits;
    for (std::size_t c = 0; c < manifest.known_count(); ++c) logits.push_back(rng.normal(0, 3));
    Detection det = make_detection(box, rng.uniform(), std::move(logits));
    for (int i = 0; i < emb_dim; ++i) {
      det.embedding.push_back(static_cast<float>(rng.normal(0, 2)));
    }
    if (rng.bernoulli(0.4)) det.ood_score = rng.uniform();
    if (rng.bernoulli(0.3)) {
      const int n_samples = static_cast<int>(rng.uniform_int(2, 4));
      for (int s = 0; s < n_samples; ++s) {
        std::vector<double> sample;
        for (std::size_t c = 0; c < manifest.known_count(); ++c) sample.push_back(rng.normal(0, 3));
        det.logit_samples.push_back(std::move(sample));
      }
    }
    scan.detections.push_back(std::move(det));
  }

  if (with_maps) {
    FeatureMap map;
    map.rows = static_cast<int>(rng.uniform_int(2, 6));
    map.cols = static_cast<int>(rng.uniform_int(2, 6));
    map.dim = static_cast<int>(rng.uniform_int(1, 5));
    map.origin_x = rng.uniform(-10, 10);
    map.origin_y = rng.uniform(-10, 10);
    map.cell_size = rng.uniform(0.5, 3.0);
    map.data.resize(static_cast<std::size_t>(map.rows) * static_cast<std::size_t>(map.cols) *
                    static_cast<std::size_t>(map.dim));
    for (auto& v : map.data) v = static_cast<float>(rng.normal(0, 1));
    scan.feature_map_low = map;
    if (rng.bernoulli(0.5)) {
      map.dim += 2;
      map.data.resize(static_cast<std::size_t>(map.rows) * static_cast<std::size_t>(map.cols) *
                      static_cast<std::size_t>(map.dim));
      for (auto& v : map.data) v = static_cast<float>(rng.normal(0, 1));
      scan.feature_map_high = map;
    }
  }
  return scan;
}

}  // namespace ood3d::testing

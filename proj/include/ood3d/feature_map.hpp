#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace ood3d {

// BEV grid of feature vectors. origin is the world (x, y) of cell (0, 0)'s
// center; x maps to columns, y to rows. data is row-major rows x cols x dim.
struct FeatureMap {
  int rows = 0;
  int cols = 0;
  int dim = 0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 1.0;
  std::vector<float> data;

  const float* cell(int r, int c) const {
    return data.data() + (static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                          static_cast<std::size_t>(c)) *
                             static_cast<std::size_t>(dim);
  }
  float* cell(int r, int c) {
    return data.data() + (static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                          static_cast<std::size_t>(c)) *
                             static_cast<std::size_t>(dim);
  }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

enum class ProbeSource { LowDim, HighDim };

struct ProbeConfig {
  ProbeSource source = ProbeSource::LowDim;
  bool interpolate = false;
  bool pool3x3 = false;
};

// Throws SchemaError on bad dimensions or non-finite data.
void validate_feature_map(const FeatureMap& m);

// Continuous grid coordinates; cell centers map to integers.
std::pair<double, double> world_to_grid(const FeatureMap& m, double x, double y);

// Per-channel 3x3 max pooling, stride 1, replicate padding at the borders.
// The OpenMP kernel parallelizes over rows; the serial version is the
// reference for the equivalence tests.
FeatureMap max_pool3x3(const FeatureMap& m);
FeatureMap max_pool3x3_serial(const FeatureMap& m);

// Feature vector at a world-space center. Pooling (when requested) is
// applied to the whole map first; prefer pooling once per scan via
// max_pool3x3 and probing with pool3x3=false when many detections share
// the map. Centers within half a cell outside the grid are clamped to the
// border; farther out throws OutOfBounds.
std::vector<float> probe(const FeatureMap& m, double x, double y, const ProbeConfig& cfg);

// Probe an already-prepared map (pooled or not) without re-pooling.
std::vector<float> probe_prepared(const FeatureMap& m, double x, double y, bool interpolate);

}  // namespace ood3d

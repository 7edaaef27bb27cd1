#include "ood3d/feature_map.hpp"

#include <algorithm>
#include <cmath>

#include "ood3d/errors.hpp"
#include "ood3d/parallel.hpp"

namespace ood3d {

void validate_feature_map(const FeatureMap& m) {
  if (m.rows <= 0 || m.cols <= 0 || m.dim <= 0) {
    throw SchemaError("feature map dimensions must be positive");
  }
  if (!(m.cell_size > 0.0) || !std::isfinite(m.cell_size) || !std::isfinite(m.origin_x) ||
      !std::isfinite(m.origin_y)) {
    throw SchemaError("feature map spatial metadata invalid");
  }
  const std::size_t expect = static_cast<std::size_t>(m.rows) * static_cast<std::size_t>(m.cols) *
                             static_cast<std::size_t>(m.dim);
  if (m.data.size() != expect) throw SchemaError("feature map data size mismatch");
  for (const float v : m.data) {
    if (!std::isfinite(v)) throw SchemaError("feature map contains non-finite value");
  }
}

std::pair<double, double> world_to_grid(const FeatureMap& m, double x, double y) {
  return {(y - m.origin_y) / m.cell_size, (x - m.origin_x) / m.cell_size};
}

namespace {

void pool_row(const FeatureMap& in, FeatureMap& out, int r) {
  const int rows = in.rows;
  const int cols = in.cols;
  const int dim = in.dim;
  const int r0 = std::max(r - 1, 0);
  const int r1 = std::min(r + 1, rows - 1);
  for (int c = 0; c < cols; ++c) {
    const int c0 = std::max(c - 1, 0);
    const int c1 = std::min(c + 1, cols - 1);
    float* dst = out.cell(r, c);
    const float* first = in.cell(r0, c0);
    for (int d = 0; d < dim; ++d) dst[d] = first[d];
    for (int rr = r0; rr <= r1; ++rr) {
      for (int cc = c0; cc <= c1; ++cc) {
        const float* src = in.cell(rr, cc);
        for (int d = 0; d < dim; ++d) dst[d] = std::max(dst[d], src[d]);
      }
    }
  }
}

}  // namespace

FeatureMap max_pool3x3_serial(const FeatureMap& m) {
  FeatureMap out = m;
  for (int r = 0; r < m.rows; ++r) pool_row(m, out, r);
  return out;
}

FeatureMap max_pool3x3(const FeatureMap& m) {
  FeatureMap out = m;
  parallel_for(m.rows, [&](std::int64_t r) { pool_row(m, out, static_cast<int>(r)); });
  return out;
}

std::vector<float> probe_prepared(const FeatureMap& m, double x, double y, bool interpolate) {
  auto [row, col] = world_to_grid(m, x, y);
  // Detector centers can jitter slightly past the map extent; tolerate up
  // to half a cell and clamp onto the border cell.
  if (row < -0.5 || col < -0.5 || row > m.rows - 0.5 || col > m.cols - 0.5) {
    throw OutOfBounds("probe center outside feature map extent");
  }
  row = std::clamp(row, 0.0, static_cast<double>(m.rows - 1));
  col = std::clamp(col, 0.0, static_cast<double>(m.cols - 1));

  std::vector<float> out(static_cast<std::size_t>(m.dim));
  if (interpolate) {
    const int r0 = static_cast<int>(std::floor(row));
    const int c0 = static_cast<int>(std::floor(col));
    const int r1 = std::min(r0 + 1, m.rows - 1);
    const int c1 = std::min(c0 + 1, m.cols - 1);
    const double fr = row - r0;
    const double fc = col - c0;
    const double w00 = (1.0 - fr) * (1.0 - fc);
    const double w01 = (1.0 - fr) * fc;
    const double w10 = fr * (1.0 - fc);
    const double w11 = fr * fc;
    const float* p00 = m.cell(r0, c0);
    const float* p01 = m.cell(r0, c1);
    const float* p10 = m.cell(r1, c0);
    const float* p11 = m.cell(r1, c1);
    for (int d = 0; d < m.dim; ++d) {
      out[static_cast<std::size_t>(d)] = static_cast<float>(w00 * p00[d] + w01 * p01[d] +
                                                            w10 * p10[d] + w11 * p11[d]);
    }
  } else {
    // Nearest cell, rounding half away from zero.
    const int r = static_cast<int>(std::round(row));
    const int c = static_cast<int>(std::round(col));
    const float* src = m.cell(std::clamp(r, 0, m.rows - 1), std::clamp(c, 0, m.cols - 1));
    std::copy(src, src + m.dim, out.begin());
  }
  return out;
}

std::vector<float> probe(const FeatureMap& m, double x, double y, const ProbeConfig& cfg) {
  if (cfg.pool3x3) {
    const FeatureMap pooled = max_pool3x3(m);
    return probe_prepared(pooled, x, y, cfg.interpolate);
  }
  return probe_prepared(m, x, y, cfg.interpolate);
}

}  // namespace ood3d

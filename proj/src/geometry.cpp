#include "ood3d/geometry.hpp"

#include <algorithm>
#include <string>

#include "ood3d/errors.hpp"
#include "ood3d/parallel.hpp"

namespace ood3d {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

double normalize_yaw(double yaw) {
  if (yaw >= -kPi && yaw < kPi) return yaw;  // bit-stable for in-range values
  double y = std::fmod(yaw + kPi, kTwoPi);
  if (y < 0.0) y += kTwoPi;
  return y - kPi;
}

Box3D checked_box(const Box3D& b) {
  const double fields[7] = {b.cx, b.cy, b.cz, b.l, b.w, b.h, b.yaw};
  for (double f : fields) {
    if (!std::isfinite(f)) throw SchemaError("box field is not finite");
  }
  if (b.l <= 0.0 || b.w <= 0.0 || b.h <= 0.0) {
    throw SchemaError("box extents must be strictly positive");
  }
  Box3D out = b;
  out.yaw = normalize_yaw(b.yaw);
  return out;
}

double box_volume(const Box3D& b) { return b.l * b.w * b.h; }

double center_distance(const Box3D& a, const Box3D& b) {
  const double dx = a.cx - b.cx;
  const double dy = a.cy - b.cy;
  const double dz = a.cz - b.cz;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double center_distance_bev(const Box3D& a, const Box3D& b) {
  const double dx = a.cx - b.cx;
  const double dy = a.cy - b.cy;
  return std::sqrt(dx * dx + dy * dy);
}

std::array<std::array<double, 2>, 4> box_corners_bev(const Box3D& b) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double hl = 0.5 * b.l;
  const double hw = 0.5 * b.w;
  // Local corners in CCW order; l runs along local x.
  const double lx[4] = {hl, -hl, -hl, hl};
  const double ly[4] = {hw, hw, -hw, -hw};
  std::array<std::array<double, 2>, 4> out{};
  for (int i = 0; i < 4; ++i) {
    out[static_cast<std::size_t>(i)] = {b.cx + c * lx[i] - s * ly[i], b.cy + s * lx[i] + c * ly[i]};
  }
  return out;
}

double polygon_area(const std::vector<std::array<double, 2>>& poly) {
  if (poly.size() < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    acc += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(acc);
}

std::vector<std::array<double, 2>> convex_clip(const std::vector<std::array<double, 2>>& subject,
                                               const std::vector<std::array<double, 2>>& clip) {
  std::vector<std::array<double, 2>> poly = subject;
  std::vector<std::array<double, 2>> next;
  for (std::size_t e = 0; e < clip.size() && !poly.empty(); ++e) {
    const auto& a = clip[e];
    const auto& b = clip[(e + 1) % clip.size()];
    const double ex = b[0] - a[0];
    const double ey = b[1] - a[1];
    // Inside = left of (or on) the directed clip edge.
    auto side = [&](const std::array<double, 2>& p) {
      return ex * (p[1] - a[1]) - ey * (p[0] - a[0]);
    };
    next.clear();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const auto& p = poly[i];
      const auto& q = poly[(i + 1) % poly.size()];
      const double sp = side(p);
      const double sq = side(q);
      if (sp >= 0.0) next.push_back(p);
      if ((sp > 0.0 && sq < 0.0) || (sp < 0.0 && sq > 0.0)) {
        const double t = sp / (sp - sq);
        next.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
      }
    }
    poly = next;
  }
  return poly;
}

double box_overlap_3d(const Box3D& a, const Box3D& b) {
  const double zlo = std::max(a.cz - 0.5 * a.h, b.cz - 0.5 * b.h);
  const double zhi = std::min(a.cz + 0.5 * a.h, b.cz + 0.5 * b.h);
  const double dz = zhi - zlo;
  if (dz <= 0.0) return 0.0;

  const auto ca = box_corners_bev(a);
  const auto cb = box_corners_bev(b);
  const std::vector<std::array<double, 2>> pa(ca.begin(), ca.end());
  const std::vector<std::array<double, 2>> pb(cb.begin(), cb.end());
  const double area = polygon_area(convex_clip(pa, pb));
  return area * dz;
}

bool point_in_box(const Box3D& b, double x, double y, double z) {
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double dx = x - b.cx;
  const double dy = y - b.cy;
  const double dz = z - b.cz;
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= 0.5 * b.l && std::abs(ly) <= 0.5 * b.w && std::abs(dz) <= 0.5 * b.h;
}

std::vector<std::int64_t> points_in_box_serial(const PointCloud& cloud, const Box3D& b) {
  std::vector<std::int64_t> out;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point& p = cloud.points[i];
    if (point_in_box(b, p.x, p.y, p.z)) out.push_back(static_cast<std::int64_t>(i));
  }
  return out;
}

std::vector<std::int64_t> points_in_box(const PointCloud& cloud, const Box3D& b) {
  const std::int64_t n = static_cast<std::int64_t>(cloud.points.size());
  if (n < 4096) return points_in_box_serial(cloud, b);

  std::vector<unsigned char> hit(static_cast<std::size_t>(n), 0);
  parallel_for(n, [&](std::int64_t i) {
    const Point& p = cloud.points[static_cast<std::size_t>(i)];
    hit[static_cast<std::size_t>(i)] = point_in_box(b, p.x, p.y, p.z) ? 1 : 0;
  });
  std::vector<std::int64_t> out;
  for (std::int64_t i = 0; i < n; ++i) {
    if (hit[static_cast<std::size_t>(i)]) out.push_back(i);
  }
  return out;
}

}  // namespace ood3d

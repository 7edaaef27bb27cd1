#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace ood3d {

// Upright 3D box: center, extents, single heading angle about +z.
// yaw is kept normalized to [-pi, pi).
struct Box3D {
  double cx = 0.0;
  double cy = 0.0;
  double cz = 0.0;
  double l = 1.0;
  double w = 1.0;
  double h = 1.0;
  double yaw = 0.0;

  friend bool operator==(const Box3D&, const Box3D&) = default;
};

struct Point {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float intensity = 0.0f;

  friend bool operator==(const Point&, const Point&) = default;
};

struct PointCloud {
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;
};

double normalize_yaw(double yaw);

// Throws SchemaError when extents are non-positive or any field is
// non-finite. Returns the box with yaw normalized.
Box3D checked_box(const Box3D& b);

double box_volume(const Box3D& b);

double center_distance(const Box3D& a, const Box3D& b);
double center_distance_bev(const Box3D& a, const Box3D& b);

// BEV footprint corners, counter-clockwise.
std::array<std::array<double, 2>, 4> box_corners_bev(const Box3D& b);

// Exact intersection volume of two yaw-rotated upright boxes: convex
// polygon clipping in the BEV plane times the vertical overlap.
double box_overlap_3d(const Box3D& a, const Box3D& b);

// Boundary points count as inside.
bool point_in_box(const Box3D& b, double x, double y, double z);

// Indices of cloud points inside the box, ascending. The OpenMP kernel
// flags points in parallel and gathers serially; points_in_box_serial is
// the reference the tests compare against.
std::vector<std::int64_t> points_in_box(const PointCloud& cloud, const Box3D& b);
std::vector<std::int64_t> points_in_box_serial(const PointCloud& cloud, const Box3D& b);

// Sutherland-Hodgman clip of a convex subject polygon against a convex
// clip polygon (both CCW). Exposed for tests.
std::vector<std::array<double, 2>> convex_clip(const std::vector<std::array<double, 2>>& subject,
                                               const std::vector<std::array<double, 2>>& clip);

double polygon_area(const std::vector<std::array<double, 2>>& poly);

}  // namespace ood3d

#include "ood3d/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ood3d/errors.hpp"

namespace ood3d {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::array<double, 3> sub(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

double triangle_area(const std::array<double, 3>& a, const std::array<double, 3>& b,
                     const std::array<double, 3>& c) {
  const auto u = sub(b, a);
  const auto v = sub(c, a);
  const double cx = u[1] * v[2] - u[2] * v[1];
  const double cy = u[2] * v[0] - u[0] * v[2];
  const double cz = u[0] * v[1] - u[1] * v[0];
  return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

// Quad helper: two triangles a-b-c, a-c-d.
void push_quad(std::vector<std::array<int, 3>>& faces, int a, int b, int c, int d) {
  faces.push_back({a, b, c});
  faces.push_back({a, c, d});
}

void append_axis_box(TriMesh& mesh, double x0, double x1, double y0, double y1, double z0,
                     double z1) {
  const int base = static_cast<int>(mesh.vertices.size());
  mesh.vertices.push_back({x0, y0, z0});
  mesh.vertices.push_back({x1, y0, z0});
  mesh.vertices.push_back({x1, y1, z0});
  mesh.vertices.push_back({x0, y1, z0});
  mesh.vertices.push_back({x0, y0, z1});
  mesh.vertices.push_back({x1, y0, z1});
  mesh.vertices.push_back({x1, y1, z1});
  mesh.vertices.push_back({x0, y1, z1});
  push_quad(mesh.faces, base + 0, base + 1, base + 2, base + 3);  // bottom
  push_quad(mesh.faces, base + 4, base + 5, base + 6, base + 7);  // top
  push_quad(mesh.faces, base + 0, base + 1, base + 5, base + 4);
  push_quad(mesh.faces, base + 1, base + 2, base + 6, base + 5);
  push_quad(mesh.faces, base + 2, base + 3, base + 7, base + 6);
  push_quad(mesh.faces, base + 3, base + 0, base + 4, base + 7);
}

}  // namespace

TriMesh load_off(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open OFF file: " + path);

  std::string token;
  if (!(in >> token) || token != "OFF") {
    throw ParseError("missing OFF header in " + path);
  }
  std::size_t n_vertices = 0;
  std::size_t n_faces = 0;
  std::size_t n_edges = 0;
  if (!(in >> n_vertices >> n_faces >> n_edges)) {
    throw ParseError("malformed OFF counts in " + path);
  }

  TriMesh mesh;
  mesh.name = path;
  mesh.vertices.resize(n_vertices);
  for (std::size_t i = 0; i < n_vertices; ++i) {
    if (!(in >> mesh.vertices[i][0] >> mesh.vertices[i][1] >> mesh.vertices[i][2])) {
      throw ParseError("malformed OFF vertex " + std::to_string(i) + " in " + path);
    }
  }
  for (std::size_t f = 0; f < n_faces; ++f) {
    std::size_t arity = 0;
    if (!(in >> arity) || arity < 3) {
      throw ParseError("malformed OFF face " + std::to_string(f) + " in " + path);
    }
    std::vector<int> poly(arity);
    for (std::size_t k = 0; k < arity; ++k) {
      if (!(in >> poly[k]) || poly[k] < 0 || poly[k] >= static_cast<int>(n_vertices)) {
        throw ParseError("OFF face index out of range in " + path);
      }
    }
    // Fan-triangulate anything beyond triangles.
    for (std::size_t k = 1; k + 1 < arity; ++k) {
      mesh.faces.push_back({poly[0], poly[k], poly[k + 1]});
    }
  }
  if (mesh.faces.empty()) throw ParseError("OFF mesh has no faces: " + path);
  return mesh;
}

void mesh_bounds(const TriMesh& mesh, std::array<double, 3>& lo, std::array<double, 3>& hi) {
  lo = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
        std::numeric_limits<double>::max()};
  hi = {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
        std::numeric_limits<double>::lowest()};
  for (const auto& v : mesh.vertices) {
    for (int a = 0; a < 3; ++a) {
      lo[static_cast<std::size_t>(a)] = std::min(lo[static_cast<std::size_t>(a)], v[static_cast<std::size_t>(a)]);
      hi[static_cast<std::size_t>(a)] = std::max(hi[static_cast<std::size_t>(a)], v[static_cast<std::size_t>(a)]);
    }
  }
}

TriMesh normalize_unit(const TriMesh& mesh) {
  std::array<double, 3> lo;
  std::array<double, 3> hi;
  mesh_bounds(mesh, lo, hi);
  double extent = 0.0;
  for (int a = 0; a < 3; ++a) {
    extent = std::max(extent, hi[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)]);
  }
  if (!(extent > 0.0)) throw DataError("degenerate mesh extent: " + mesh.name);
  TriMesh out = mesh;
  for (auto& v : out.vertices) {
    for (int a = 0; a < 3; ++a) {
      const std::size_t i = static_cast<std::size_t>(a);
      v[i] = (v[i] - 0.5 * (lo[i] + hi[i])) / extent;
    }
  }
  return out;
}

std::vector<std::array<double, 3>> sample_surface(const TriMesh& mesh, int count, Rng& rng) {
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& face = mesh.faces[f];
    total += triangle_area(mesh.vertices[static_cast<std::size_t>(face[0])],
                           mesh.vertices[static_cast<std::size_t>(face[1])],
                           mesh.vertices[static_cast<std::size_t>(face[2])]);
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw DataError("mesh has zero surface area: " + mesh.name);

  std::vector<std::array<double, 3>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double pick = rng.uniform() * total;
    const std::size_t f = static_cast<std::size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    const auto& face = mesh.faces[std::min(f, mesh.faces.size() - 1)];
    const auto& a = mesh.vertices[static_cast<std::size_t>(face[0])];
    const auto& b = mesh.vertices[static_cast<std::size_t>(face[1])];
    const auto& c = mesh.vertices[static_cast<std::size_t>(face[2])];
    // sqrt trick for uniform barycentric coordinates
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    const double wa = 1.0 - r1;
    const double wb = r1 * (1.0 - r2);
    const double wc = r1 * r2;
    out.push_back({wa * a[0] + wb * b[0] + wc * c[0], wa * a[1] + wb * b[1] + wc * c[1],
                   wa * a[2] + wb * b[2] + wc * c[2]});
  }
  return out;
}

TriMesh make_box_mesh() {
  TriMesh m;
  m.name = "box";
  append_axis_box(m, -0.5, 0.5, -0.35, 0.35, -0.3, 0.3);
  return m;
}

TriMesh make_cylinder_mesh(int segments) {
  TriMesh m;
  m.name = "cylinder";
  const double r = 0.35;
  const double h = 0.5;
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * kPi * i / segments;
    m.vertices.push_back({r * std::cos(a), r * std::sin(a), -h});
    m.vertices.push_back({r * std::cos(a), r * std::sin(a), h});
  }
  const int bottom_center = static_cast<int>(m.vertices.size());
  m.vertices.push_back({0.0, 0.0, -h});
  const int top_center = static_cast<int>(m.vertices.size());
  m.vertices.push_back({0.0, 0.0, h});
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    push_quad(m.faces, 2 * i, 2 * j, 2 * j + 1, 2 * i + 1);
    m.faces.push_back({2 * i, 2 * j, bottom_center});
    m.faces.push_back({2 * i + 1, 2 * j + 1, top_center});
  }
  return m;
}

TriMesh make_cone_mesh(int segments) {
  TriMesh m;
  m.name = "cone";
  const double r = 0.4;
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * kPi * i / segments;
    m.vertices.push_back({r * std::cos(a), r * std::sin(a), -0.5});
  }
  const int apex = static_cast<int>(m.vertices.size());
  m.vertices.push_back({0.0, 0.0, 0.5});
  const int base_center = static_cast<int>(m.vertices.size());
  m.vertices.push_back({0.0, 0.0, -0.5});
  for (int i = 0; i < segments; ++i) {
    const int j = (i + 1) % segments;
    m.faces.push_back({i, j, apex});
    m.faces.push_back({i, j, base_center});
  }
  return m;
}

TriMesh make_l_shape_mesh() {
  TriMesh m;
  m.name = "l_shape";
  append_axis_box(m, -0.5, 0.5, -0.5, -0.1, -0.5, 0.5);   // long arm
  append_axis_box(m, -0.5, -0.1, -0.1, 0.5, -0.5, 0.5);   // short arm
  return m;
}

TriMesh make_table_mesh() {
  TriMesh m;
  m.name = "table";
  append_axis_box(m, -0.5, 0.5, -0.5, 0.5, 0.3, 0.5);  // top
  append_axis_box(m, -0.5, -0.4, -0.5, -0.4, -0.5, 0.3);
  append_axis_box(m, 0.4, 0.5, -0.5, -0.4, -0.5, 0.3);
  append_axis_box(m, -0.5, -0.4, 0.4, 0.5, -0.5, 0.3);
  append_axis_box(m, 0.4, 0.5, 0.4, 0.5, -0.5, 0.3);
  return m;
}

std::vector<TriMesh> builtin_mesh_bank() {
  return {make_box_mesh(), make_cylinder_mesh(), make_cone_mesh(), make_l_shape_mesh(),
          make_table_mesh()};
}

}  // namespace ood3d

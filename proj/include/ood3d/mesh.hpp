#pragma once

#include <array>
#include <string>
#include <vector>

#include "ood3d/rng.hpp"

namespace ood3d {

struct TriMesh {
  std::string name;
  std::vector<std::array<double, 3>> vertices;
  std::vector<std::array<int, 3>> faces;
};

// ASCII OFF reader (vertex/face counts header, triangles or fans).
TriMesh load_off(const std::string& path);

// Center at the origin and scale so the largest axis extent is 1.
TriMesh normalize_unit(const TriMesh& mesh);

// Area-weighted uniform surface samples.
std::vector<std::array<double, 3>> sample_surface(const TriMesh& mesh, int count, Rng& rng);

// Axis-aligned bounds.
void mesh_bounds(const TriMesh& mesh, std::array<double, 3>& lo, std::array<double, 3>& hi);

TriMesh make_box_mesh();
TriMesh make_cylinder_mesh(int segments = 16);
TriMesh make_cone_mesh(int segments = 16);
TriMesh make_l_shape_mesh();
TriMesh make_table_mesh();

// The procedural bank the injection pipeline ships with.
std::vector<TriMesh> builtin_mesh_bank();

}  // namespace ood3d

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ood3d/config.hpp"
#include "ood3d/mesh.hpp"
#include "ood3d/mlp.hpp"
#include "ood3d/types.hpp"

namespace ood3d {

enum class ForgeMethod { GaussianNoise, MeshInjection, PointMixup, Resizing, TopK };

struct ForgeConfig {
  ForgeMethod method = ForgeMethod::TopK;
  std::uint64_t rng_seed = 0;
  int topk_k = 5;
  double mix_prob = 0.2;  // selection probability for PointMixup and Resizing
  std::array<double, 2> mix_range = {0.3, 0.7};
  int min_points = 5;
  std::array<int, 2> inject_count_range = {15, 25};
  int surface_samples = 200;
  std::array<int, 2> grid_cells_range = {5, 10};   // cells per axis on the unit object
  std::array<int, 2> keep_per_cell_range = {1, 3};
  std::array<double, 2> scale_range = {1.0, 4.0};
  std::array<double, 2> resize_axis_range = {0.5, 2.0};
  std::array<double, 2> resize_excluded_band = {0.9, 1.1};
  int placement_attempts = 100;
};

void validate_forge_config(const ForgeConfig& cfg);

// Per-object class blend, used to refabricate synthetic feature maps for
// forged geometry (mixup objects blend two classes).
struct ClassMix {
  std::vector<std::pair<int, double>> parts;
};

struct ForgedScan {
  Scan scan;
  std::vector<int> unknown_gt;         // GT indices to label unknown for head training
  std::vector<ClassMix> gt_class_mix;  // parallel to scan.ground_truth
};

// Class name assigned to injected objects; appended to open_classes when
// a forged dataset is written.
inline constexpr const char* kInjectedClass = "injected";
DatasetManifest manifest_with_injected(const DatasetManifest& manifest);

// Every forge operation derives its RNG from cfg.rng_seed (mixed with the
// scan id where there is one), so forging is pure given (inputs, seed).

// Label-1 copies of the known-labelled inputs with N(0,1) added to the
// embedding segment; originals are retained first, label 0.
std::vector<HeadInput> forge_gaussian(const std::vector<HeadInput>& inputs,
                                      const ForgeConfig& cfg);

// Rescales a sampled subset of known objects along all three axes with
// per-axis factors from resize_axis_range minus the excluded band; member
// points follow in the box-local frame. Objects without member points are
// never altered; a scan whose known objects all lack them throws
// NoMemberPoints.
ForgedScan forge_resize(const Scan& scan, const ForgeConfig& cfg);

// Replaces eligible objects (>= min_points members) with the optimal-
// assignment interpolation between their point set and a random partner's.
ForgedScan forge_pointmixup(const Scan& scan, const ForgeConfig& cfg);

// Inserts surface-sampled, grid-thinned, rescaled mesh objects at
// collision-free ground poses. The manifest must already contain the
// injected class (see manifest_with_injected).
ForgedScan forge_inject(const Scan& scan, const std::vector<TriMesh>& mesh_bank,
                        const DatasetManifest& manifest, const ForgeConfig& cfg);

struct TopkSplit {
  std::vector<int> pseudo_unknown;  // top-K confident, zero overlap with known GT
  std::vector<int> known_matched;   // detections matched to a known GT
};

// Autolabelling split; known_matched comes from the matcher under run_cfg.
TopkSplit forge_topk(const Scan& scan, const RunConfig& run_cfg, int k);

// Exact minimum-total-cost assignment (Hungarian, O(n^3)) for an n x n
// row-major cost matrix; returns the column chosen for each row.
std::vector<int> min_cost_assignment(const std::vector<double>& cost, int n);

// Point-set interpolation helpers, exposed for the endpoint tests.
struct LocalPoints {
  std::vector<std::array<double, 3>> xyz;
  std::vector<double> intensity;
};
LocalPoints gt_local_points(const Scan& scan, int gt_index);
// Pairs a against b (per min-squared-distance assignment for
// |a| <= 128, greedy nearest otherwise) and interpolates with factor
// lambda. a and b must have equal size.
LocalPoints mixup_pair(const LocalPoints& a, const LocalPoints& b, double lambda);

// Per-axis resize applied to one object in its local frame; exposed for
// the identity-path test.
void resize_object(Scan& scan, int gt_index, const std::array<double, 3>& factors);

// JSON-lines training records: {"x":[...], "y":0|1, "provenance": str}.
void save_head_inputs(const std::vector<HeadInput>& inputs, const std::string& provenance,
                      const std::string& path);
std::vector<HeadInput> load_head_inputs(const std::string& path);

std::string to_string(ForgeMethod m);
ForgeMethod forge_method_from_string(const std::string& s);

}  // namespace ood3d

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ood3d/forge.hpp"
#include "ood3d/rng.hpp"
#include "ood3d/types.hpp"

namespace ood3d {

struct ClassSpec {
  std::string name;
  bool open = false;
  std::array<double, 3> size_mean = {4.0, 1.8, 1.6};
  std::array<double, 3> size_std = {0.3, 0.1, 0.1};
  std::array<int, 2> count_range = {1, 4};   // objects per scan (open: per open scan)
  std::array<int, 2> points_range = {20, 60};
};

struct WorldConfig {
  int n_scans = 200;
  double open_scan_fraction = 0.75;
  std::vector<ClassSpec> classes;
  double extent = 100.0;     // square scan area, centered on the origin
  double cell_size = 1.4;    // 3 pooled cells span a 2.1 m radius
  int feature_dim_low = 192;
  int feature_dim_high = 512;
  bool with_feature_maps = false;
  int background_points = 256;
  std::uint64_t rng_seed = 0;
};

struct BetaPrior {
  double a = 2.0;
  double b = 2.0;
};

// Kept near unit scale so raw logits can feed the head next to normalized
// box parameters. The single-stage metrics are rank-based, so uniformly
// scaling this family leaves their AUROCs unchanged.
struct LogitModel {
  double base_known = 0.0;
  double base_open = 0.62;
  double base_clutter = 0.33;
  double gap_known = 2.0;
  double gap_open = 0.8;
  double gap_clutter = 0.5;
  double noise_std = 0.4;
};

struct EmbeddingModel {
  double class_sep = 3.0;         // norm of known class means
  double noise_std = 0.5;
  double open_shift_sigmas = 3.0; // open-mean displacement from the known centroid
  double map_noise_std = 0.25;
  double influence_radius = 2.5;  // metres, gaussian falloff for map fabrication
  // Seeds the per-class mean directions. Part of the emulated detector,
  // not the world: two worlds with the same emulation share a backbone,
  // so heads trained on one transfer to the other.
  std::uint64_t feature_seed = 0xfea7;
};

struct McModel {
  int samples = 0;  // 0 disables logit_samples generation
  double noise_std = 0.5;
  double open_widen = 2.0;
};

struct DetectorEmulation {
  double miss_rate_known = 0.15;
  double miss_rate_open = 0.35;
  double center_jitter_std = 0.35;
  BetaPrior score_known = {5.0, 2.2};
  BetaPrior score_open = {3.2, 2.8};
  BetaPrior score_clutter = {2.0, 5.0};
  LogitModel logits;
  EmbeddingModel embedding;
  McModel mc;
  double clutter_rate = 2.0;  // false detections per scan (Poisson)
};

// 3 known classes + 1 open class, 5-20 objects per scan, 100 m extent.
WorldConfig default_world();
DetectorEmulation default_emulation();

void validate_world_config(const WorldConfig& world);

// JSON world file: {"world": {...}, "emulation": {...}}.
void save_world_config(const WorldConfig& world, const DetectorEmulation& emu,
                       const std::string& path);
void load_world_config(const std::string& path, WorldConfig& world, DetectorEmulation& emu);

// Deterministic per-class embedding means and map fabrication. Means are
// derived on demand from (world seed, class id, dim), so classes appended
// later (the injected class) get stable means too.
class SynthContext {
 public:
  SynthContext(const WorldConfig& world, const DetectorEmulation& emu,
               const DatasetManifest& manifest);

  const WorldConfig& world() const { return world_; }
  const DetectorEmulation& emulation() const { return emu_; }
  const DatasetManifest& manifest() const { return manifest_; }

  std::vector<double> class_mean(int class_id, bool high_dim) const;
  std::vector<double> mix_mean(const ClassMix& mix, bool high_dim) const;

  int grid_cells() const;

  // Distance-weighted blend of nearby objects' class means plus noise.
  // OpenMP over rows with per-row derived RNGs; the serial variant is the
  // reference.
  FeatureMap fabricate_map(const std::vector<GroundTruthObject>& objects,
                           const std::vector<ClassMix>& mix, bool high_dim,
                           std::uint64_t scan_seed) const;
  FeatureMap fabricate_map_serial(const std::vector<GroundTruthObject>& objects,
                                  const std::vector<ClassMix>& mix, bool high_dim,
                                  std::uint64_t scan_seed) const;

  // Per-GT Bernoulli hits with jittered centers plus Poisson clutter.
  // unknown_gt marks objects emulated with the open-origin models.
  std::vector<Detection> emulate_detections(const std::vector<GroundTruthObject>& objects,
                                            const std::vector<ClassMix>& mix,
                                            const std::vector<int>& unknown_gt, Rng& rng) const;

 private:
  WorldConfig world_;
  DetectorEmulation emu_;
  DatasetManifest manifest_;
};

// k noisy draws around the detection's logits; open-origin detections use
// wider noise.
std::vector<std::vector<double>> emulate_mc_samples(const Detection& det,
                                                    const DetectorEmulation& emu, int k,
                                                    bool open_origin, Rng& rng);

// Writes scans/, manifest.json and world_echo.json under out_dir and
// returns the manifest. Scan generation is parallel over scan indices
// with derived seeds; output is byte-deterministic.
DatasetManifest generate_world(const WorldConfig& world, const DetectorEmulation& emu,
                               const std::string& out_dir);

// In-memory generation of a single scan (index-seeded), exposed for tests.
Scan generate_scan(const SynthContext& ctx, int scan_index);

}  // namespace ood3d

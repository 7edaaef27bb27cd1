#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ood3d/config.hpp"
#include "ood3d/forge.hpp"
#include "ood3d/matcher.hpp"
#include "ood3d/metrics.hpp"
#include "ood3d/mlp.hpp"
#include "ood3d/scan_io.hpp"
#include "ood3d/synth.hpp"

namespace ood3d {

// Box parameters are normalized before entering the head: centers by the
// map extent, sizes by a fixed 10 m scale, yaw by pi. Dumps stay raw.
std::vector<double> normalized_box_params(const Box3D& box, double extent);

HeadInput make_head_input(const std::vector<float>& embedding, const Box3D& box,
                          const std::vector<double>& logits, double extent, int label);

// Map selected and pooled once per scan so per-detection probes are cheap.
struct PreparedProbe {
  std::optional<FeatureMap> map;  // empty: fall back to detection embeddings
  bool interpolate = false;
};
PreparedProbe prepare_probe(const Scan& scan, const ProbeConfig& cfg);

// Probe the prepared map at the detection center, or fall back to the
// detection's own embedding when the scan has no maps.
std::vector<float> detection_embedding(const PreparedProbe& prepared, const Detection& det);

// Training methods: the five generation pipelines plus the Oracle (real
// annotated unknowns, the upper-bound reference).
enum class TrainMethod { Oracle, GaussianNoise, MeshInjection, PointMixup, Resizing, TopK };

std::string to_string(TrainMethod m);
TrainMethod train_method_from_string(const std::string& s);

struct TrainPipelineConfig {
  TrainMethod method = TrainMethod::Oracle;
  ForgeConfig forge;
  ProbeConfig probe;
  TrainConfig train;
  RunConfig run;  // matcher settings for label assembly
};

struct HeadModel {
  MlpHead head;
  ProbeConfig probe;
  double norm_extent = 100.0;
  TrainConfig train_echo;
  std::string forge_method;
};

// Small JSON (widths, probe, config echo) plus an f64 weights blob.
void save_head_model(const HeadModel& model, const std::string& path);
HeadModel load_head_model(const std::string& path);

struct TrainOutput {
  HeadModel model;
  std::vector<double> epoch_losses;
  std::size_t n_inputs = 0;
  std::size_t n_unknown = 0;
};

// Builds HeadInputs per the scan-retention contract (TopK and Oracle keep
// scans with real unknowns; every other method trains only on the scans
// without them), then trains the head. MeshInjection / PointMixup /
// Resizing need the dataset's world_echo.json to refabricate feature maps
// and re-emulate detections for the forged geometry.
TrainOutput train_head_pipeline(const DatasetManifest& manifest, const TrainPipelineConfig& cfg);

// Build the training records only (what train_head_pipeline consumes).
std::vector<HeadInput> build_head_inputs(const DatasetManifest& manifest,
                                         const TrainPipelineConfig& cfg);

void annotate_with_head(std::vector<Scan>& scans, const HeadModel& model);
void annotate_with_head_serial(std::vector<Scan>& scans, const HeadModel& model);

// How detections get their ood_score during evaluation.
struct ScoringSpec {
  enum class Mode { Scorer, Head, Preexisting };
  Mode mode = Mode::Scorer;
  ScorerConfig scorer;
  HeadModel head;
  std::string label = "DefaultScore";
};

struct EvalRow {
  double delta_thresh = 0.0;
  double d_thresh = 0.0;
  std::string sort_mode;
  std::string method;
  double hits_open = 0.0;
  double hits_closed = 0.0;
  MetricReport metrics;
};

EvalRow evaluate_scans(std::vector<Scan> scans, const RunConfig& cfg, const ScoringSpec& scoring);

// Applies the subset filter, scores, matches and reduces. Deterministic
// for fixed seeds and inputs.
EvalRow evaluate_dataset(const DatasetManifest& manifest, const RunConfig& cfg,
                         const ScoringSpec& scoring);

struct SweepSpec {
  std::vector<double> delta_thresh;
  std::vector<double> d_thresh;
  std::vector<SortMode> sort_modes;
  std::vector<ScoringSpec> methods;
};

SweepSpec load_sweep_spec(const std::string& path);

std::vector<EvalRow> run_sweep(const DatasetManifest& manifest, const RunConfig& base,
                               const SweepSpec& spec);

// CSV schema (10 columns):
// delta_thresh,d_thresh,sort_mode,method,hits_open,hits_closed,auroc,fpr95,aupr_e,aupr_s
inline constexpr const char* kReportCsvHeader =
    "delta_thresh,d_thresh,sort_mode,method,hits_open,hits_closed,auroc,fpr95,aupr_e,aupr_s";

std::string report_csv(const std::vector<EvalRow>& rows);
std::string report_markdown(const std::vector<EvalRow>& rows);
std::vector<EvalRow> parse_report_csv(const std::string& text);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace ood3d

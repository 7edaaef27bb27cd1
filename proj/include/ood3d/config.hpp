#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "ood3d/scorers.hpp"

namespace ood3d {

enum class SortMode { DetectorScore, OodScore };
enum class EvalSubset { AllScans, OpenScansOnly };
enum class DistanceMode { Euclidean3D, EuclideanBEV };

// Evaluation protocol hyperparameters. Defaults mirror the final choices
// of the protocol study: delta 0.3, d 2.0 m, detector-score sorting,
// open-scans-only subset.
struct RunConfig {
  double d_thresh = 2.0;
  double delta_thresh = 0.3;
  double ood_thresh = 0.5;
  SortMode sort_mode = SortMode::DetectorScore;
  EvalSubset eval_subset = EvalSubset::OpenScansOnly;
  DistanceMode distance_mode = DistanceMode::Euclidean3D;
  std::uint64_t rng_seed = 0;

  ScorerConfig scorer;
};

void validate_run_config(const RunConfig& cfg);

// Flat key=value text files; '#' starts a comment. Core keys match the
// RunConfig field names; "scorer."-prefixed keys fill the embedded
// ScorerConfig; "train." / "probe." / "forge." keys are routed to the
// pipeline configs and left untouched here.
struct KeyValues {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
};

KeyValues parse_key_values_text(const std::string& text);
KeyValues load_key_values(const std::string& path);

RunConfig run_config_from_key_values(const KeyValues& kv);
RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);

std::string to_string(SortMode m);
std::string to_string(EvalSubset s);
std::string to_string(DistanceMode m);
SortMode sort_mode_from_string(const std::string& s);
EvalSubset eval_subset_from_string(const std::string& s);
DistanceMode distance_mode_from_string(const std::string& s);

}  // namespace ood3d

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ood3d/feature_map.hpp"
#include "ood3d/geometry.hpp"

namespace ood3d {

// One predicted box from the base detector, as read from a dump.
struct Detection {
  Box3D box;
  double score = 0.0;                  // detector confidence in [0, 1]
  std::vector<double> logits;          // length = known-class count
  int predicted_class = 0;             // argmax of logits, validated on load
  std::vector<float> embedding;        // feature vector at the predicted center
  std::optional<double> ood_score;     // p_OOD, filled by the scorers
  std::vector<std::vector<double>> logit_samples;  // MC forward passes, optional

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct GroundTruthObject {
  Box3D box;
  int class_id = 0;   // index into manifest class table (known first, then open)
  bool is_open = false;
  std::optional<std::vector<std::int64_t>> point_indices;

  friend bool operator==(const GroundTruthObject&, const GroundTruthObject&) = default;
};

struct Scan {
  std::string scan_id;
  PointCloud cloud;
  std::vector<GroundTruthObject> ground_truth;
  std::vector<Detection> detections;
  std::optional<FeatureMap> feature_map_low;
  std::optional<FeatureMap> feature_map_high;

  bool has_open_gt() const {
    for (const auto& g : ground_truth) {
      if (g.is_open) return true;
    }
    return false;
  }

  friend bool operator==(const Scan&, const Scan&) = default;
};

struct DatasetManifest {
  std::string name;
  std::vector<std::string> known_classes;  // set C
  std::vector<std::string> open_classes;   // set O
  std::vector<std::string> scan_paths;     // relative to base_dir
  double intensity_mean = 0.0;
  double intensity_std = 1.0;

  std::string base_dir;  // directory of the manifest file; not serialized

  std::size_t known_count() const { return known_classes.size(); }
  std::size_t class_count() const { return known_classes.size() + open_classes.size(); }

  // class ids index known classes first, then open classes.
  bool is_open_class(int class_id) const {
    return class_id >= static_cast<int>(known_classes.size());
  }
  const std::string& class_name(int class_id) const;
  // Returns -1 when the name is unknown.
  int class_index(const std::string& name) const;
};

// Throws SchemaError when a scan violates a type invariant (box extents,
// logits length, argmax consistency, point index range, ...).
void validate_scan(const Scan& scan, const DatasetManifest& manifest);

}  // namespace ood3d

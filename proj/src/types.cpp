#include "ood3d/types.hpp"

#include <algorithm>
#include <cmath>

#include "ood3d/errors.hpp"

namespace ood3d {

const std::string& DatasetManifest::class_name(int class_id) const {
  const std::size_t id = static_cast<std::size_t>(class_id);
  if (id < known_classes.size()) return known_classes[id];
  const std::size_t open_id = id - known_classes.size();
  if (open_id < open_classes.size()) return open_classes[open_id];
  throw SchemaError("class id out of range: " + std::to_string(class_id));
}

int DatasetManifest::class_index(const std::string& name) const {
  for (std::size_t i = 0; i < known_classes.size(); ++i) {
    if (known_classes[i] == name) return static_cast<int>(i);
  }
  for (std::size_t i = 0; i < open_classes.size(); ++i) {
    if (open_classes[i] == name) return static_cast<int>(known_classes.size() + i);
  }
  return -1;
}

namespace {

void validate_detection(const Detection& d, const DatasetManifest& manifest,
                        const std::string& scan_id) {
  checked_box(d.box);
  if (!std::isfinite(d.score) || d.score < 0.0 || d.score > 1.0) {
    throw SchemaError("detection score outside [0,1] in scan " + scan_id);
  }
  if (d.logits.size() != manifest.known_count()) {
    throw SchemaError("detection logits length " + std::to_string(d.logits.size()) +
                      " != known-class count " + std::to_string(manifest.known_count()) +
                      " in scan " + scan_id);
  }
  if (d.logits.empty()) throw SchemaError("detection has empty logits in scan " + scan_id);
  double max_logit = d.logits[0];
  for (const double v : d.logits) {
    if (!std::isfinite(v)) throw SchemaError("non-finite logit in scan " + scan_id);
    max_logit = std::max(max_logit, v);
  }
  if (d.predicted_class < 0 || d.predicted_class >= static_cast<int>(d.logits.size()) ||
      d.logits[static_cast<std::size_t>(d.predicted_class)] != max_logit) {
    throw SchemaError("predicted_class disagrees with logits argmax in scan " + scan_id);
  }
  // Head outputs live in [0,1] but MaxLogit/Energy annotations are
  // unbounded reals; the metrics are rank-based, so only finiteness is a
  // schema requirement.
  if (d.ood_score && !std::isfinite(*d.ood_score)) {
    throw SchemaError("non-finite ood_score in scan " + scan_id);
  }
  for (const auto& sample : d.logit_samples) {
    if (sample.size() != d.logits.size()) {
      throw SchemaError("logit sample length mismatch in scan " + scan_id);
    }
    for (const double v : sample) {
      if (!std::isfinite(v)) throw SchemaError("non-finite logit sample in scan " + scan_id);
    }
  }
  for (const float v : d.embedding) {
    if (!std::isfinite(v)) throw SchemaError("non-finite embedding value in scan " + scan_id);
  }
}

}  // namespace

void validate_scan(const Scan& scan, const DatasetManifest& manifest) {
  if (scan.scan_id.empty()) throw SchemaError("scan_id must be non-empty");
  for (const Point& p : scan.cloud.points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.intensity)) {
      throw SchemaError("non-finite point in scan " + scan.scan_id);
    }
    if (p.intensity < 0.0f) throw SchemaError("negative intensity in scan " + scan.scan_id);
  }
  for (const auto& g : scan.ground_truth) {
    checked_box(g.box);
    if (g.class_id < 0 || g.class_id >= static_cast<int>(manifest.class_count())) {
      throw SchemaError("ground truth class id out of range in scan " + scan.scan_id);
    }
    if (g.is_open != manifest.is_open_class(g.class_id)) {
      throw SchemaError("is_open flag disagrees with class partition in scan " + scan.scan_id);
    }
    if (g.point_indices) {
      for (const std::int64_t idx : *g.point_indices) {
        if (idx < 0 || idx >= static_cast<std::int64_t>(scan.cloud.size())) {
          throw SchemaError("ground truth point index out of range in scan " + scan.scan_id);
        }
      }
    }
  }
  for (const auto& d : scan.detections) validate_detection(d, manifest, scan.scan_id);
  if (scan.feature_map_low) validate_feature_map(*scan.feature_map_low);
  if (scan.feature_map_high) validate_feature_map(*scan.feature_map_high);
}

}  // namespace ood3d

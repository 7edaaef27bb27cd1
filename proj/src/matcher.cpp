#include "ood3d/matcher.hpp"

#include <algorithm>
#include <cmath>

#include "ood3d/errors.hpp"
#include "ood3d/parallel.hpp"

namespace ood3d {

namespace {

double pair_distance(const Box3D& a, const Box3D& b, DistanceMode mode) {
  return mode == DistanceMode::Euclidean3D ? center_distance(a, b) : center_distance_bev(a, b);
}

}  // namespace

MatchReport match_scan(const Scan& scan, const RunConfig& cfg, bool with_confusion) {
  MatchReport report;
  for (const auto& g : scan.ground_truth) {
    if (g.is_open) {
      ++report.n_open_gt;
    } else {
      ++report.n_closed_gt;
    }
  }

  // Detector-score gate comes before sorting.
  std::vector<int> survivors;
  for (int i = 0; i < static_cast<int>(scan.detections.size()); ++i) {
    if (scan.detections[static_cast<std::size_t>(i)].score >= cfg.delta_thresh) {
      survivors.push_back(i);
    }
  }
  if (with_confusion) {
    for (const int i : survivors) {
      if (!scan.detections[static_cast<std::size_t>(i)].ood_score) {
        throw MissingOodScore("detection " + std::to_string(i) + " of scan " + scan.scan_id +
                              " has no ood_score");
      }
    }
  }

  auto sort_key = [&](int i) {
    const Detection& d = scan.detections[static_cast<std::size_t>(i)];
    return cfg.sort_mode == SortMode::DetectorScore ? d.score : d.ood_score.value_or(0.0);
  };
  std::stable_sort(survivors.begin(), survivors.end(),
                   [&](int a, int b) { return sort_key(a) > sort_key(b); });

  const std::size_t n_gt = scan.ground_truth.size();
  std::vector<char> gt_matched(n_gt, 0);
  std::vector<char> det_matched(scan.detections.size(), 0);
  std::size_t n_matched = 0;

  for (const int det_idx : survivors) {
    if (n_matched == n_gt) break;  // all GTs already matched
    const Detection& det = scan.detections[static_cast<std::size_t>(det_idx)];

    int best_gt = -1;
    double best_dist = 0.0;
    for (std::size_t g = 0; g < n_gt; ++g) {
      if (gt_matched[g]) continue;
      const double dist = pair_distance(det.box, scan.ground_truth[g].box, cfg.distance_mode);
      if (best_gt < 0 || dist < best_dist) {  // equidistant ties keep the lower GT index
        best_gt = static_cast<int>(g);
        best_dist = dist;
      }
    }
    if (best_gt < 0 || !(best_dist < cfg.d_thresh)) continue;  // ignored

    gt_matched[static_cast<std::size_t>(best_gt)] = 1;
    det_matched[static_cast<std::size_t>(det_idx)] = 1;
    ++n_matched;
    report.pairs.push_back({det_idx, best_gt, best_dist});

    const bool is_open = scan.ground_truth[static_cast<std::size_t>(best_gt)].is_open;
    if (is_open) {
      ++report.matched_open;
    } else {
      ++report.matched_closed;
    }
    if (with_confusion) {
      const double p_ood = *det.ood_score;
      report.scored_samples.push_back({p_ood, is_open});
      const bool predicted_unknown = p_ood > cfg.ood_thresh;
      if (is_open) {
        (predicted_unknown ? report.confusion.tp : report.confusion.fn) += 1;
      } else {
        (predicted_unknown ? report.confusion.fp : report.confusion.tn) += 1;
      }
    }
  }

  for (const int i : survivors) {
    if (!det_matched[static_cast<std::size_t>(i)]) report.unmatched_detections.push_back(i);
  }
  std::sort(report.unmatched_detections.begin(), report.unmatched_detections.end());
  for (std::size_t g = 0; g < n_gt; ++g) {
    if (!gt_matched[g]) report.unmatched_gts.push_back(static_cast<int>(g));
  }
  return report;
}

std::vector<MatchReport> match_scans_serial(const std::vector<Scan>& scans, const RunConfig& cfg,
                                            bool with_confusion) {
  std::vector<MatchReport> reports;
  reports.reserve(scans.size());
  for (const Scan& s : scans) reports.push_back(match_scan(s, cfg, with_confusion));
  return reports;
}

std::vector<MatchReport> match_scans(const std::vector<Scan>& scans, const RunConfig& cfg,
                                     bool with_confusion) {
  std::vector<MatchReport> reports(scans.size());
  std::vector<std::string> errors(scans.size());
  parallel_for(static_cast<std::int64_t>(scans.size()), [&](std::int64_t i) {
    const std::size_t idx = static_cast<std::size_t>(i);
    try {
      reports[idx] = match_scan(scans[idx], cfg, with_confusion);
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  });
  for (const auto& err : errors) {
    if (!err.empty()) throw MissingOodScore(err);
  }
  return reports;
}

HitRates hit_rates(const std::vector<MatchReport>& reports) {
  std::int64_t open_total = 0;
  std::int64_t closed_total = 0;
  std::int64_t open_hit = 0;
  std::int64_t closed_hit = 0;
  for (const auto& r : reports) {
    open_total += r.n_open_gt;
    closed_total += r.n_closed_gt;
    open_hit += r.matched_open;
    closed_hit += r.matched_closed;
  }
  if (open_total == 0 || closed_total == 0) {
    throw EmptyPartition("hit rate undefined: a GT partition is empty");
  }
  return {static_cast<double>(open_hit) / static_cast<double>(open_total),
          static_cast<double>(closed_hit) / static_cast<double>(closed_total)};
}

std::vector<ScoredSample> pool_samples(const std::vector<MatchReport>& reports) {
  std::vector<ScoredSample> out;
  for (const auto& r : reports) {
    out.insert(out.end(), r.scored_samples.begin(), r.scored_samples.end());
  }
  return out;
}

}  // namespace ood3d

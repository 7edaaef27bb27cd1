#pragma once

#include <cstdint>
#include <vector>

#include "ood3d/config.hpp"
#include "ood3d/types.hpp"

namespace ood3d {

// One (ood_score, label) pair per matched prediction; the stream every
// threshold-free metric consumes.
struct ScoredSample {
  double score = 0.0;
  bool is_open = false;
};

struct MatchPair {
  int detection = 0;
  int ground_truth = 0;
  double distance = 0.0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct Confusion {
  std::int64_t tp = 0;  // matched open GT, predicted unknown
  std::int64_t fp = 0;  // matched closed GT, predicted unknown
  std::int64_t tn = 0;  // matched closed GT, predicted known
  std::int64_t fn = 0;  // matched open GT, predicted known

  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct MatchReport {
  std::vector<MatchPair> pairs;              // in greedy match order
  std::vector<int> unmatched_detections;     // survivors with no GT in range, ascending
  std::vector<int> unmatched_gts;            // misses, ascending
  std::vector<ScoredSample> scored_samples;  // one per pair, in pair order
  Confusion confusion;
  std::int64_t n_open_gt = 0;    // partition totals for this scan
  std::int64_t n_closed_gt = 0;
  std::int64_t matched_open = 0;
  std::int64_t matched_closed = 0;
};

struct HitRates {
  double hits_open = 0.0;
  double hits_closed = 0.0;
};

// Greedy confidence-sorted assignment:
//   1. drop detections with score < delta_thresh,
//   2. sort survivors descending by the sort_mode key (ties: ascending
//      detection index),
//   3. walk the order, stopping early once every GT is matched; each
//      detection takes the closest unmatched GT if that distance is
//      < d_thresh (equidistant GTs: lowest index), otherwise it is
//      ignored and contributes to no metric,
//   4. each pair emits a ScoredSample labelled by the GT partition,
//   5. confusion counts predict unknown iff ood_score > ood_thresh.
// When with_confusion is false, scored samples and confusion stay empty
// and detections may omit ood_score; otherwise a survivor without an
// ood_score throws MissingOodScore.
MatchReport match_scan(const Scan& scan, const RunConfig& cfg, bool with_confusion = true);

// Per-scan matching across a dataset. OpenMP over scans, reports in scan
// order; the serial variant is the reference for equivalence tests.
std::vector<MatchReport> match_scans(const std::vector<Scan>& scans, const RunConfig& cfg,
                                     bool with_confusion = true);
std::vector<MatchReport> match_scans_serial(const std::vector<Scan>& scans, const RunConfig& cfg,
                                            bool with_confusion = true);

// Fraction of GTs per partition matched by some surviving prediction.
// Throws EmptyPartition when a partition has no GTs at all.
HitRates hit_rates(const std::vector<MatchReport>& reports);

// Ordered concatenation of every report's scored samples.
std::vector<ScoredSample> pool_samples(const std::vector<MatchReport>& reports);

}  // namespace ood3d

#pragma once

#include <cstdint>
#include <vector>

#include "ood3d/matcher.hpp"

namespace ood3d {

enum class PositiveClass { Open, Closed };

struct MetricReport {
  double auroc = 0.0;
  double fpr95 = 0.0;
  double aupr_e = 0.0;  // open classes as positives
  double aupr_s = 0.0;  // known classes as positives
  std::int64_t n_open = 0;
  std::int64_t n_closed = 0;
};

// Probability that a random open sample outscores a random closed one,
// ties counted 1/2 (Mann-Whitney). Throws DegenerateInput when either
// class is empty.
double auroc(const std::vector<ScoredSample>& samples);

// FPR at the largest observed-score threshold reaching TPR >= tpr_target,
// predicting open iff score >= threshold (the smallest accepted set that
// achieves the target recall).
double fpr_at_tpr(const std::vector<ScoredSample>& samples, double tpr_target = 0.95);

// Area under the precision-recall curve with step-wise (non-interpolated)
// precision over distinct-score thresholds. positives=Closed ranks by
// (1 - ood_score).
double aupr(const std::vector<ScoredSample>& samples, PositiveClass positives);

MetricReport compute_metrics(const std::vector<ScoredSample>& samples);

}  // namespace ood3d

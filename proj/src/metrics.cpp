#include "ood3d/metrics.hpp"

#include <algorithm>

#include "ood3d/errors.hpp"

namespace ood3d {

namespace {

void require_both_classes(const std::vector<ScoredSample>& samples) {
  bool has_open = false;
  bool has_closed = false;
  for (const auto& s : samples) {
    (s.is_open ? has_open : has_closed) = true;
  }
  if (!has_open || !has_closed) {
    throw DegenerateInput("metric needs at least one open and one closed sample");
  }
}

std::vector<std::size_t> order_by_score_desc(const std::vector<ScoredSample>& samples) {
  std::vector<std::size_t> idx(samples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].score > samples[b].score;
  });
  return idx;
}

}  // namespace

double auroc(const std::vector<ScoredSample>& samples) {
  require_both_classes(samples);

  std::vector<std::size_t> idx(samples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return samples[a].score < samples[b].score;
  });

  // Rank-sum with average ranks over tie groups. Ranks are multiples of
  // 1/2, so the accumulation below is exact in doubles and agrees
  // bit-for-bit with the O(n^2) pair count.
  double rank_sum_open = 0.0;
  std::int64_t n_open = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && samples[idx[j]].score == samples[idx[i]].score) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (samples[idx[k]].is_open) {
        rank_sum_open += avg_rank;
        ++n_open;
      }
    }
    i = j;
  }
  const std::int64_t n_closed = static_cast<std::int64_t>(samples.size()) - n_open;
  const double u = rank_sum_open - 0.5 * static_cast<double>(n_open) *
                                       static_cast<double>(n_open + 1);
  return u / (static_cast<double>(n_open) * static_cast<double>(n_closed));
}

double fpr_at_tpr(const std::vector<ScoredSample>& samples, double tpr_target) {
  require_both_classes(samples);
  const auto idx = order_by_score_desc(samples);

  std::int64_t n_open = 0;
  std::int64_t n_closed = 0;
  for (const auto& s : samples) {
    (s.is_open ? n_open : n_closed) += 1;
  }

  // Sweep thresholds over distinct observed scores from high to low;
  // predict open iff score >= threshold. Return the FPR at the first
  // (largest) threshold whose TPR reaches the target.
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    const double thresh = samples[idx[i]].score;
    while (j < idx.size() && samples[idx[j]].score == thresh) {
      (samples[idx[j]].is_open ? tp : fp) += 1;
      ++j;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(n_open);
    if (tpr >= tpr_target) {
      return static_cast<double>(fp) / static_cast<double>(n_closed);
    }
    i = j;
  }
  return 1.0;  // unreachable for tpr_target <= 1
}

double aupr(const std::vector<ScoredSample>& samples, PositiveClass positives) {
  if (samples.empty()) throw DegenerateInput("aupr needs samples");

  std::vector<ScoredSample> ranked(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (positives == PositiveClass::Open) {
      ranked[i] = samples[i];
    } else {
      ranked[i] = {1.0 - samples[i].score, !samples[i].is_open};
    }
  }
  std::int64_t n_pos = 0;
  for (const auto& s : ranked) n_pos += s.is_open ? 1 : 0;
  if (n_pos == 0) throw DegenerateInput("aupr needs at least one positive sample");

  const auto idx = order_by_score_desc(ranked);

  // Step-wise precision at each achieved recall level, tie groups taken
  // together.
  double area = 0.0;
  double prev_recall = 0.0;
  std::int64_t tp = 0;
  std::int64_t taken = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    const double thresh = ranked[idx[i]].score;
    while (j < idx.size() && ranked[idx[j]].score == thresh) {
      tp += ranked[idx[j]].is_open ? 1 : 0;
      ++taken;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(taken);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return area;
}

MetricReport compute_metrics(const std::vector<ScoredSample>& samples) {
  MetricReport r;
  for (const auto& s : samples) {
    (s.is_open ? r.n_open : r.n_closed) += 1;
  }
  r.auroc = auroc(samples);
  r.fpr95 = fpr_at_tpr(samples, 0.95);
  r.aupr_e = aupr(samples, PositiveClass::Open);
  r.aupr_s = aupr(samples, PositiveClass::Closed);
  return r;
}

}  // namespace ood3d

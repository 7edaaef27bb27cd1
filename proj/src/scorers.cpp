#include "ood3d/scorers.hpp"

#include <algorithm>
#include <cmath>

#include "ood3d/errors.hpp"
#include "ood3d/parallel.hpp"

namespace ood3d {

namespace {

std::vector<double> softmax_scaled(const std::vector<double>& logits, double temperature) {
  std::vector<double> p(logits.size());
  double max_scaled = logits[0] / temperature;
  for (const double v : logits) max_scaled = std::max(max_scaled, v / temperature);
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] / temperature - max_scaled);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

void require_logits(const Detection& d) {
  if (d.logits.empty()) throw EmptyLogits("detection has no logits");
}

}  // namespace

double score_default(const Detection& d) { return 1.0 - d.score; }

double score_max_logit(const Detection& d) {
  require_logits(d);
  return -*std::max_element(d.logits.begin(), d.logits.end());
}

double score_msp(const Detection& d, double temperature) {
  require_logits(d);
  const auto p = softmax_scaled(d.logits, temperature);
  return 1.0 - *std::max_element(p.begin(), p.end());
}

double score_energy(const Detection& d, double temperature) {
  require_logits(d);
  // E = -T log sum_i exp(l_i / T), evaluated with the max shift so that
  // huge logits do not overflow.
  double m = d.logits[0] / temperature;
  for (const double v : d.logits) m = std::max(m, v / temperature);
  double sum = 0.0;
  for (const double v : d.logits) sum += std::exp(v / temperature - m);
  return -temperature * (m + std::log(sum));
}

double score_mc_dropout(const Detection& d, McAggregation aggregation) {
  if (d.logit_samples.size() < 2) {
    throw MissingSamples("MC Dropout needs at least 2 logit samples");
  }
  const std::size_t n_classes = d.logit_samples.front().size();
  if (n_classes == 0) throw EmptyLogits("MC sample has no logits");

  if (aggregation == McAggregation::PredictiveEntropy) {
    std::vector<double> mean(n_classes, 0.0);
    for (const auto& sample : d.logit_samples) {
      const auto p = softmax_scaled(sample, 1.0);
      for (std::size_t i = 0; i < n_classes; ++i) mean[i] += p[i];
    }
    for (double& v : mean) v /= static_cast<double>(d.logit_samples.size());
    double entropy = 0.0;
    for (const double p : mean) {
      if (p > 0.0) entropy -= p * std::log(p);
    }
    if (n_classes == 1) return 0.0;
    return entropy / std::log(static_cast<double>(n_classes));
  }

  // MaxProbVariance: population variance across samples of the max
  // softmax probability.
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& sample : d.logit_samples) {
    const auto p = softmax_scaled(sample, 1.0);
    const double mx = *std::max_element(p.begin(), p.end());
    sum += mx;
    sum_sq += mx * mx;
  }
  const double n = static_cast<double>(d.logit_samples.size());
  const double mean = sum / n;
  return std::max(0.0, sum_sq / n - mean * mean);
}

double score_detection(const Detection& d, const ScorerConfig& cfg) {
  switch (cfg.method) {
    case ScorerMethod::DefaultScore:
      return score_default(d);
    case ScorerMethod::MaxLogit:
      return score_max_logit(d);
    case ScorerMethod::Msp:
      return score_msp(d, cfg.temperature);
    case ScorerMethod::Energy:
      return score_energy(d, cfg.temperature);
    case ScorerMethod::OdinTemperature:
      return score_msp(d, cfg.temperature);
    case ScorerMethod::McDropout:
      return score_mc_dropout(d, cfg.mc_aggregation);
  }
  throw ConfigError("unknown scorer method");
}

void annotate_scans_serial(std::vector<Scan>& scans, const ScorerConfig& cfg) {
  for (Scan& scan : scans) {
    for (Detection& d : scan.detections) d.ood_score = score_detection(d, cfg);
  }
}

void annotate_scans(std::vector<Scan>& scans, const ScorerConfig& cfg) {
  parallel_for(static_cast<std::int64_t>(scans.size()), [&](std::int64_t i) {
    for (Detection& d : scans[static_cast<std::size_t>(i)].detections) {
      d.ood_score = score_detection(d, cfg);
    }
  });
}

std::string to_string(ScorerMethod m) {
  switch (m) {
    case ScorerMethod::DefaultScore:
      return "DefaultScore";
    case ScorerMethod::MaxLogit:
      return "MaxLogit";
    case ScorerMethod::Msp:
      return "Msp";
    case ScorerMethod::Energy:
      return "Energy";
    case ScorerMethod::OdinTemperature:
      return "OdinTemperature";
    case ScorerMethod::McDropout:
      return "McDropout";
  }
  return "DefaultScore";
}

ScorerMethod scorer_method_from_string(const std::string& s) {
  if (s == "DefaultScore") return ScorerMethod::DefaultScore;
  if (s == "MaxLogit") return ScorerMethod::MaxLogit;
  if (s == "Msp") return ScorerMethod::Msp;
  if (s == "Energy") return ScorerMethod::Energy;
  if (s == "OdinTemperature") return ScorerMethod::OdinTemperature;
  if (s == "McDropout") return ScorerMethod::McDropout;
  throw ConfigError("unknown scorer method: " + s);
}

std::string to_string(McAggregation a) {
  return a == McAggregation::PredictiveEntropy ? "PredictiveEntropy" : "MaxProbVariance";
}

McAggregation mc_aggregation_from_string(const std::string& s) {
  if (s == "PredictiveEntropy") return McAggregation::PredictiveEntropy;
  if (s == "MaxProbVariance") return McAggregation::MaxProbVariance;
  throw ConfigError("unknown MC aggregation: " + s);
}

}  // namespace ood3d

#pragma once

#include <string>
#include <vector>

#include "ood3d/types.hpp"

namespace ood3d {

// Single-stage scoring methods. All scorers share one contract: higher
// output means more unknown, so every score can feed the rank-based
// metrics without per-method flags.
enum class ScorerMethod { DefaultScore, MaxLogit, Msp, Energy, OdinTemperature, McDropout };

enum class McAggregation { PredictiveEntropy, MaxProbVariance };

struct ScorerConfig {
  ScorerMethod method = ScorerMethod::DefaultScore;
  double temperature = 1.0;        // T for Msp / Energy; OdinTemperature defaults to 1000
  McAggregation mc_aggregation = McAggregation::PredictiveEntropy;
};

// ODIN is temperature-scaled MSP here; the input-perturbation step needs
// gradients through the base network and detection dumps do not carry those.
inline constexpr double kOdinDefaultTemperature = 1000.0;

double score_default(const Detection& d);
double score_max_logit(const Detection& d);
double score_msp(const Detection& d, double temperature);
double score_energy(const Detection& d, double temperature);
double score_mc_dropout(const Detection& d, McAggregation aggregation);

double score_detection(const Detection& d, const ScorerConfig& cfg);

// Fill ood_score on every detection of every scan. OpenMP over scans;
// the serial variant is the reference for the equivalence tests.
void annotate_scans(std::vector<Scan>& scans, const ScorerConfig& cfg);
void annotate_scans_serial(std::vector<Scan>& scans, const ScorerConfig& cfg);

std::string to_string(ScorerMethod m);
ScorerMethod scorer_method_from_string(const std::string& s);
std::string to_string(McAggregation a);
McAggregation mc_aggregation_from_string(const std::string& s);

}  // namespace ood3d

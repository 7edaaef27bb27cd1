#include "ood3d/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ood3d/errors.hpp"

namespace ood3d {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not a number: " + value);
  }
}

}  // namespace

std::string KeyValues::get(const std::string& key, const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : parse_double(key, it->second);
}

std::int64_t KeyValues::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not an integer: " + it->second);
  }
}

std::uint64_t KeyValues::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not an unsigned integer: " + it->second);
  }
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  auto it = values.find(key);
  if (it == values.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ConfigError("config key '" + key + "' is not a boolean: " + it->second);
}

KeyValues parse_key_values_text(const std::string& text) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + " is not key=value: " + line);
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("empty key on config line " + std::to_string(line_no));
    kv.values[key] = value;
  }
  return kv;
}

KeyValues load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_key_values_text(buf.str());
}

void validate_run_config(const RunConfig& cfg) {
  if (!(cfg.d_thresh > 0.0) || !std::isfinite(cfg.d_thresh)) {
    throw ConfigError("d_thresh must be > 0");
  }
  if (cfg.delta_thresh < 0.0 || cfg.delta_thresh > 1.0) {
    throw ConfigError("delta_thresh must be in [0,1]");
  }
  if (cfg.ood_thresh < 0.0 || cfg.ood_thresh > 1.0) {
    throw ConfigError("ood_thresh must be in [0,1]");
  }
  if (!(cfg.scorer.temperature > 0.0)) throw ConfigError("scorer.temperature must be > 0");
}

RunConfig run_config_from_key_values(const KeyValues& kv) {
  static const std::set<std::string> known = {
      "d_thresh",  "delta_thresh",  "ood_thresh", "sort_mode",
      "eval_subset", "distance_mode", "rng_seed",
      "scorer.method", "scorer.temperature", "scorer.mc_aggregation"};
  for (const auto& [key, value] : kv.values) {
    (void)value;
    if (known.count(key)) continue;
    const std::size_t dot = key.find('.');
    const std::string prefix = dot == std::string::npos ? "" : key.substr(0, dot);
    if (prefix == "train" || prefix == "probe" || prefix == "forge") continue;
    throw ConfigError("unknown config key: " + key);
  }

  RunConfig cfg;
  cfg.d_thresh = kv.get_double("d_thresh", cfg.d_thresh);
  cfg.delta_thresh = kv.get_double("delta_thresh", cfg.delta_thresh);
  cfg.ood_thresh = kv.get_double("ood_thresh", cfg.ood_thresh);
  cfg.sort_mode = sort_mode_from_string(kv.get("sort_mode", to_string(cfg.sort_mode)));
  cfg.eval_subset = eval_subset_from_string(kv.get("eval_subset", to_string(cfg.eval_subset)));
  cfg.distance_mode =
      distance_mode_from_string(kv.get("distance_mode", to_string(cfg.distance_mode)));
  cfg.rng_seed = kv.get_u64("rng_seed", cfg.rng_seed);
  cfg.scorer.method =
      scorer_method_from_string(kv.get("scorer.method", to_string(cfg.scorer.method)));
  if (cfg.scorer.method == ScorerMethod::OdinTemperature) {
    cfg.scorer.temperature = kOdinDefaultTemperature;
  }
  cfg.scorer.temperature = kv.get_double("scorer.temperature", cfg.scorer.temperature);
  cfg.scorer.mc_aggregation =
      mc_aggregation_from_string(kv.get("scorer.mc_aggregation", to_string(cfg.scorer.mc_aggregation)));
  validate_run_config(cfg);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return run_config_from_key_values(load_key_values(path));
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config file: " + path);
  out.precision(17);
  out << "d_thresh=" << cfg.d_thresh << "\n";
  out << "delta_thresh=" << cfg.delta_thresh << "\n";
  out << "ood_thresh=" << cfg.ood_thresh << "\n";
  out << "sort_mode=" << to_string(cfg.sort_mode) << "\n";
  out << "eval_subset=" << to_string(cfg.eval_subset) << "\n";
  out << "distance_mode=" << to_string(cfg.distance_mode) << "\n";
  out << "rng_seed=" << cfg.rng_seed << "\n";
  out << "scorer.method=" << to_string(cfg.scorer.method) << "\n";
  out << "scorer.temperature=" << cfg.scorer.temperature << "\n";
  out << "scorer.mc_aggregation=" << to_string(cfg.scorer.mc_aggregation) << "\n";
  if (!out) throw IoError("failed writing config file: " + path);
}

std::string to_string(SortMode m) {
  return m == SortMode::DetectorScore ? "DetectorScore" : "OodScore";
}

std::string to_string(EvalSubset s) {
  return s == EvalSubset::AllScans ? "AllScans" : "OpenScansOnly";
}

std::string to_string(DistanceMode m) {
  return m == DistanceMode::Euclidean3D ? "Euclidean3D" : "EuclideanBEV";
}

SortMode sort_mode_from_string(const std::string& s) {
  if (s == "DetectorScore") return SortMode::DetectorScore;
  if (s == "OodScore") return SortMode::OodScore;
  throw ConfigError("unknown sort_mode: " + s);
}

EvalSubset eval_subset_from_string(const std::string& s) {
  if (s == "AllScans") return EvalSubset::AllScans;
  if (s == "OpenScansOnly") return EvalSubset::OpenScansOnly;
  throw ConfigError("unknown eval_subset: " + s);
}

DistanceMode distance_mode_from_string(const std::string& s) {
  if (s == "Euclidean3D") return DistanceMode::Euclidean3D;
  if (s == "EuclideanBEV") return DistanceMode::EuclideanBEV;
  throw ConfigError("unknown distance_mode: " + s);
}

}  // namespace ood3d

#include "ood3d/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ood3d/errors.hpp"
#include "ood3d/parallel.hpp"

namespace ood3d {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSizeScale = 10.0;

std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_csv_double(const std::string& s) {
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw ParseError("bad number in report CSV: " + s);
  }
}

}  // namespace

std::vector<double> normalized_box_params(const Box3D& box, double extent) {
  const double e = extent > 0.0 ? extent : 1.0;
  return {box.cx / e, box.cy / e, box.cz / e, box.l / kSizeScale,
          box.w / kSizeScale, box.h / kSizeScale, box.yaw / kPi};
}

HeadInput make_head_input(const std::vector<float>& embedding, const Box3D& box,
                          const std::vector<double>& logits, double extent, int label) {
  HeadInput in;
  in.embed_dim = static_cast<int>(embedding.size());
  in.label = label;
  in.x.reserve(embedding.size() + 7 + logits.size());
  for (const float v : embedding) in.x.push_back(static_cast<double>(v));
  const auto params = normalized_box_params(box, extent);
  in.x.insert(in.x.end(), params.begin(), params.end());
  in.x.insert(in.x.end(), logits.begin(), logits.end());
  return in;
}

PreparedProbe prepare_probe(const Scan& scan, const ProbeConfig& cfg) {
  PreparedProbe out;
  out.interpolate = cfg.interpolate;
  const std::optional<FeatureMap>& src =
      cfg.source == ProbeSource::HighDim ? scan.feature_map_high : scan.feature_map_low;
  if (!src) return out;
  out.map = cfg.pool3x3 ? max_pool3x3(*src) : *src;
  return out;
}

std::vector<float> detection_embedding(const PreparedProbe& prepared, const Detection& det) {
  if (prepared.map) {
    return probe_prepared(*prepared.map, det.box.cx, det.box.cy, prepared.interpolate);
  }
  if (det.embedding.empty()) {
    throw DataError("detection carries no embedding and the scan has no feature map");
  }
  return det.embedding;
}

std::string to_string(TrainMethod m) {
  switch (m) {
    case TrainMethod::Oracle:
      return "Oracle";
    case TrainMethod::GaussianNoise:
      return "GaussianNoise";
    case TrainMethod::MeshInjection:
      return "MeshInjection";
    case TrainMethod::PointMixup:
      return "PointMixup";
    case TrainMethod::Resizing:
      return "Resizing";
    case TrainMethod::TopK:
      return "TopK";
  }
  return "Oracle";
}

TrainMethod train_method_from_string(const std::string& s) {
  if (s == "Oracle") return TrainMethod::Oracle;
  if (s == "GaussianNoise") return TrainMethod::GaussianNoise;
  if (s == "MeshInjection") return TrainMethod::MeshInjection;
  if (s == "PointMixup") return TrainMethod::PointMixup;
  if (s == "Resizing") return TrainMethod::Resizing;
  if (s == "TopK") return TrainMethod::TopK;
  throw ConfigError("unknown train method: " + s);
}


// --- model io ---

namespace {

json probe_to_json(const ProbeConfig& p) {
  return json{{"source", p.source == ProbeSource::HighDim ? "HighDim" : "LowDim"},
              {"interpolate", p.interpolate},
              {"pool3x3", p.pool3x3}};
}

ProbeConfig probe_from_json(const json& j) {
  ProbeConfig p;
  const std::string source = j.value("source", "LowDim");
  if (source == "HighDim") {
    p.source = ProbeSource::HighDim;
  } else if (source == "LowDim") {
    p.source = ProbeSource::LowDim;
  } else {
    throw ConfigError("unknown probe source: " + source);
  }
  p.interpolate = j.value("interpolate", false);
  p.pool3x3 = j.value("pool3x3", false);
  return p;
}

}  // namespace

void save_head_model(const HeadModel& model, const std::string& path) {
  const fs::path p(path);
  const std::string blob_rel = p.stem().string() + ".weights.blob";

  json j;
  j["input_dim"] = model.head.input_dim();
  j["widths"] = head_widths(model.head.input_dim());
  j["probe"] = probe_to_json(model.probe);
  j["norm_extent"] = model.norm_extent;
  j["forge_method"] = model.forge_method;
  j["train"] = {{"epochs", model.train_echo.epochs},
                {"lr0", model.train_echo.lr0},
                {"poly_power", model.train_echo.poly_power},
                {"loss", model.train_echo.loss == LossKind::Focal ? "Focal" : "Bce"},
                {"focal_gamma", model.train_echo.focal_gamma},
                {"focal_alpha", model.train_echo.focal_alpha},
                {"batch_size", model.train_echo.batch_size},
                {"rng_seed", model.train_echo.rng_seed}};
  j["weights_blob"] = blob_rel;

  BlobF64 blob;
  blob.data = model.head.flatten();
  blob.dims = {static_cast<std::uint32_t>(blob.data.size())};
  save_blob(blob, (p.parent_path() / blob_rel).string());

  std::ofstream out(path);
  if (!out) throw IoError("cannot write model: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing model: " + path);
}

HeadModel load_head_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model ") + path + ": " + e.what());
  }

  HeadModel model;
  try {
    const int input_dim = j.at("input_dim").get<int>();
    model.head = make_head(input_dim, 0);
    const auto widths = j.at("widths").get<std::vector<int>>();
    if (widths != head_widths(input_dim)) {
      throw SchemaError("model widths violate the halving rule: " + path);
    }
    model.probe = probe_from_json(j.at("probe"));
    model.norm_extent = j.at("norm_extent").get<double>();
    model.forge_method = j.value("forge_method", "");
    if (j.contains("train")) {
      const json& t = j.at("train");
      model.train_echo.epochs = t.value("epochs", model.train_echo.epochs);
      model.train_echo.lr0 = t.value("lr0", model.train_echo.lr0);
      model.train_echo.poly_power = t.value("poly_power", model.train_echo.poly_power);
      model.train_echo.loss = t.value("loss", "Bce") == std::string("Focal") ? LossKind::Focal
                                                                             : LossKind::Bce;
      model.train_echo.focal_gamma = t.value("focal_gamma", model.train_echo.focal_gamma);
      model.train_echo.focal_alpha = t.value("focal_alpha", model.train_echo.focal_alpha);
      model.train_echo.batch_size = t.value("batch_size", model.train_echo.batch_size);
      model.train_echo.rng_seed = t.value("rng_seed", model.train_echo.rng_seed);
    }
    const std::string blob_rel = j.at("weights_blob").get<std::string>();
    const BlobF64 blob = load_blob_f64((fs::path(path).parent_path() / blob_rel).string());
    model.head.unflatten(blob.data);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model ") + path + ": " + e.what());
  }
  return model;
}

// --- training pipelines ---

namespace {

double dataset_extent(const DatasetManifest& manifest, const std::vector<Scan>& scans) {
  const fs::path echo = fs::path(manifest.base_dir) / "world_echo.json";
  if (fs::exists(echo)) {
    WorldConfig world;
    DetectorEmulation emu;
    load_world_config(echo.string(), world, emu);
    return world.extent;
  }
  double max_abs = 0.0;
  for (const Scan& scan : scans) {
    for (const auto& gt : scan.ground_truth) {
      max_abs = std::max({max_abs, std::abs(gt.box.cx), std::abs(gt.box.cy)});
    }
    for (const auto& det : scan.detections) {
      max_abs = std::max({max_abs, std::abs(det.box.cx), std::abs(det.box.cy)});
    }
  }
  return std::max(1.0, 2.0 * max_abs);
}

struct SynthRefab {
  WorldConfig world;
  DetectorEmulation emu;
  DatasetManifest manifest;
};

SynthRefab load_refab_context(const DatasetManifest& manifest, TrainMethod method) {
  const fs::path echo = fs::path(manifest.base_dir) / "world_echo.json";
  if (!fs::exists(echo)) {
    throw DataError(to_string(method) +
                    " training needs re-emulated features and therefore a synth dataset "
                    "(world_echo.json not found in " +
                    manifest.base_dir + ")");
  }
  SynthRefab ctx;
  load_world_config(echo.string(), ctx.world, ctx.emu);
  ctx.manifest =
      method == TrainMethod::MeshInjection ? manifest_with_injected(manifest) : manifest;
  return ctx;
}

void append_matched_inputs(const Scan& scan, const PreparedProbe& prepared, const RunConfig& run,
                           const std::set<int>& unknown_gt, double extent,
                           std::vector<HeadInput>& out) {
  const MatchReport report = match_scan(scan, run, /*with_confusion=*/false);
  for (const auto& pair : report.pairs) {
    const Detection& det = scan.detections[static_cast<std::size_t>(pair.detection)];
    const GroundTruthObject& gt = scan.ground_truth[static_cast<std::size_t>(pair.ground_truth)];
    const int label = (gt.is_open || unknown_gt.count(pair.ground_truth)) ? 1 : 0;
    out.push_back(make_head_input(detection_embedding(prepared, det), det.box, det.logits,
                                  extent, label));
  }
}

}  // namespace

namespace {

std::vector<HeadInput> build_inputs_impl(const DatasetManifest& manifest,
                                         const TrainPipelineConfig& cfg, double& extent_out) {
  const std::vector<Scan> scans = load_scans(manifest);
  const double extent = dataset_extent(manifest, scans);
  extent_out = extent;
  std::vector<HeadInput> inputs;

  switch (cfg.method) {
    case TrainMethod::Oracle: {
      for (const Scan& scan : scans) {
        const PreparedProbe prepared = prepare_probe(scan, cfg.probe);
        append_matched_inputs(scan, prepared, cfg.run, {}, extent, inputs);
      }
      break;
    }
    case TrainMethod::TopK: {
      for (const Scan& scan : scans) {
        const PreparedProbe prepared = prepare_probe(scan, cfg.probe);
        const TopkSplit split = forge_topk(scan, cfg.run, cfg.forge.topk_k);
        const std::set<int> unknown(split.pseudo_unknown.begin(), split.pseudo_unknown.end());
        for (const int det_idx : split.pseudo_unknown) {
          const Detection& det = scan.detections[static_cast<std::size_t>(det_idx)];
          inputs.push_back(make_head_input(detection_embedding(prepared, det), det.box,
                                           det.logits, extent, 1));
        }
        for (const int det_idx : split.known_matched) {
          if (unknown.count(det_idx)) continue;
          const Detection& det = scan.detections[static_cast<std::size_t>(det_idx)];
          inputs.push_back(make_head_input(detection_embedding(prepared, det), det.box,
                                           det.logits, extent, 0));
        }
      }
      break;
    }
    case TrainMethod::GaussianNoise: {
      // Generation methods do not rely on real OOD data: scans carrying
      // real unknowns are dropped from their training sets outright.
      for (const Scan& scan : scans) {
        if (scan.has_open_gt()) continue;
        const PreparedProbe prepared = prepare_probe(scan, cfg.probe);
        append_matched_inputs(scan, prepared, cfg.run, {}, extent, inputs);
      }
      inputs = forge_gaussian(inputs, cfg.forge);
      break;
    }
    case TrainMethod::MeshInjection:
    case TrainMethod::PointMixup:
    case TrainMethod::Resizing: {
      const SynthRefab refab = load_refab_context(manifest, cfg.method);
      const SynthContext ctx(refab.world, refab.emu, refab.manifest);
      const std::vector<TriMesh> bank = builtin_mesh_bank();
      for (const Scan& scan : scans) {
        if (scan.has_open_gt()) continue;  // same retention rule as above
        ForgedScan forged;
        try {
          if (cfg.method == TrainMethod::Resizing) {
            forged = forge_resize(scan, cfg.forge);
          } else if (cfg.method == TrainMethod::PointMixup) {
            forged = forge_pointmixup(scan, cfg.forge);
          } else {
            forged = forge_inject(scan, bank, refab.manifest, cfg.forge);
          }
        } catch (const DataError&) {
          // Sparse scan (too few eligible objects, no member points, no
          // free space): keep it as pure known-label material.
          forged.scan = scan;
          forged.unknown_gt.clear();
          forged.gt_class_mix.assign(scan.ground_truth.size(), ClassMix{});
          for (std::size_t i = 0; i < scan.ground_truth.size(); ++i) {
            forged.gt_class_mix[i].parts = {{scan.ground_truth[i].class_id, 1.0}};
          }
        }

        // The emulated detector re-runs over the forged geometry, exactly
        // where the real pipeline would re-run the frozen base detector.
        const std::uint64_t seed =
            derive_seed(mix_seed(cfg.train.rng_seed, hash_string("re-emulate")), scan.scan_id);
        Rng rng(seed);
        forged.scan.detections = ctx.emulate_detections(forged.scan.ground_truth,
                                                        forged.gt_class_mix, forged.unknown_gt,
                                                        rng);
        if (scan.feature_map_low) {
          forged.scan.feature_map_low =
              ctx.fabricate_map(forged.scan.ground_truth, forged.gt_class_mix, false, seed);
        }
        if (scan.feature_map_high) {
          forged.scan.feature_map_high =
              ctx.fabricate_map(forged.scan.ground_truth, forged.gt_class_mix, true, seed);
        }

        const PreparedProbe prepared = prepare_probe(forged.scan, cfg.probe);
        const std::set<int> unknown(forged.unknown_gt.begin(), forged.unknown_gt.end());
        append_matched_inputs(forged.scan, prepared, cfg.run, unknown, extent, inputs);
      }
      break;
    }
  }
  return inputs;
}

}  // namespace

std::vector<HeadInput> build_head_inputs(const DatasetManifest& manifest,
                                         const TrainPipelineConfig& cfg) {
  double extent = 0.0;
  return build_inputs_impl(manifest, cfg, extent);
}

TrainOutput train_head_pipeline(const DatasetManifest& manifest, const TrainPipelineConfig& cfg) {
  double extent = 0.0;
  const std::vector<HeadInput> inputs = build_inputs_impl(manifest, cfg, extent);
  TrainOutput out;
  out.n_inputs = inputs.size();
  for (const auto& in : inputs) out.n_unknown += in.label == 1 ? 1 : 0;

  TrainResult result = train_head(inputs, cfg.train);
  out.model.head = std::move(result.head);
  out.epoch_losses = std::move(result.epoch_losses);
  out.model.probe = cfg.probe;
  out.model.train_echo = cfg.train;
  out.model.forge_method = to_string(cfg.method);
  out.model.norm_extent = extent;
  return out;
}

void annotate_with_head_serial(std::vector<Scan>& scans, const HeadModel& model) {
  for (Scan& scan : scans) {
    const PreparedProbe prepared = prepare_probe(scan, model.probe);
    for (Detection& det : scan.detections) {
      const HeadInput in = make_head_input(detection_embedding(prepared, det), det.box,
                                           det.logits, model.norm_extent, 0);
      det.ood_score = forward(model.head, in.x);
    }
  }
}

void annotate_with_head(std::vector<Scan>& scans, const HeadModel& model) {
  std::vector<std::string> errors(scans.size());
  parallel_for(static_cast<std::int64_t>(scans.size()), [&](std::int64_t i) {
    Scan& scan = scans[static_cast<std::size_t>(i)];
    try {
      const PreparedProbe prepared = prepare_probe(scan, model.probe);
      for (Detection& det : scan.detections) {
        const HeadInput in = make_head_input(detection_embedding(prepared, det), det.box,
                                             det.logits, model.norm_extent, 0);
        det.ood_score = forward(model.head, in.x);
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  });
  for (const auto& err : errors) {
    if (!err.empty()) throw DataError(err);
  }
}

// --- evaluation ---

EvalRow evaluate_scans(std::vector<Scan> scans, const RunConfig& cfg,
                       const ScoringSpec& scoring) {
  switch (scoring.mode) {
    case ScoringSpec::Mode::Scorer:
      annotate_scans(scans, scoring.scorer);
      break;
    case ScoringSpec::Mode::Head:
      annotate_with_head(scans, scoring.head);
      break;
    case ScoringSpec::Mode::Preexisting:
      break;
  }

  const std::vector<MatchReport> reports = match_scans(scans, cfg);
  const HitRates hits = hit_rates(reports);
  const std::vector<ScoredSample> samples = pool_samples(reports);

  EvalRow row;
  row.delta_thresh = cfg.delta_thresh;
  row.d_thresh = cfg.d_thresh;
  row.sort_mode = to_string(cfg.sort_mode);
  row.method = scoring.label;
  row.hits_open = hits.hits_open;
  row.hits_closed = hits.hits_closed;
  row.metrics = compute_metrics(samples);
  return row;
}

EvalRow evaluate_dataset(const DatasetManifest& manifest, const RunConfig& cfg,
                         const ScoringSpec& scoring) {
  const DatasetManifest subset =
      cfg.eval_subset == EvalSubset::OpenScansOnly ? filter_open_subset(manifest) : manifest;
  return evaluate_scans(load_scans(subset), cfg, scoring);
}

SweepSpec load_sweep_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sweep spec: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("sweep spec ") + path + ": " + e.what());
  }
  SweepSpec spec;
  try {
    spec.delta_thresh = j.at("delta_thresh").get<std::vector<double>>();
    spec.d_thresh = j.at("d_thresh").get<std::vector<double>>();
    for (const auto& s : j.value("sort_modes", std::vector<std::string>{"DetectorScore"})) {
      spec.sort_modes.push_back(sort_mode_from_string(s));
    }
    for (const auto& m : j.at("methods").get<std::vector<std::string>>()) {
      ScoringSpec scoring;
      if (m.rfind("head:", 0) == 0) {
        const std::string model_path = m.substr(5);
        scoring.mode = ScoringSpec::Mode::Head;
        scoring.head = load_head_model(model_path);
        scoring.label = "Head[" + scoring.head.forge_method + "]";
      } else {
        scoring.mode = ScoringSpec::Mode::Scorer;
        scoring.scorer.method = scorer_method_from_string(m);
        if (scoring.scorer.method == ScorerMethod::OdinTemperature) {
          scoring.scorer.temperature = kOdinDefaultTemperature;
        }
        scoring.label = m;
      }
      spec.methods.push_back(std::move(scoring));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("sweep spec ") + path + ": " + e.what());
  }
  if (spec.delta_thresh.empty() || spec.d_thresh.empty() || spec.sort_modes.empty() ||
      spec.methods.empty()) {
    throw ConfigError("sweep grid must be non-empty");
  }
  return spec;
}

std::vector<EvalRow> run_sweep(const DatasetManifest& manifest, const RunConfig& base,
                               const SweepSpec& spec) {
  const DatasetManifest subset =
      base.eval_subset == EvalSubset::OpenScansOnly ? filter_open_subset(manifest) : manifest;
  const std::vector<Scan> scans = load_scans(subset);

  // Score once per method, then sweep the matcher grid on the annotated
  // copies.
  std::vector<std::vector<Scan>> annotated;
  annotated.reserve(spec.methods.size());
  for (const auto& scoring : spec.methods) {
    std::vector<Scan> copy = scans;
    if (scoring.mode == ScoringSpec::Mode::Scorer) {
      annotate_scans(copy, scoring.scorer);
    } else if (scoring.mode == ScoringSpec::Mode::Head) {
      annotate_with_head(copy, scoring.head);
    }
    annotated.push_back(std::move(copy));
  }

  std::vector<EvalRow> rows;
  for (const double delta : spec.delta_thresh) {
    for (const double d : spec.d_thresh) {
      for (const SortMode sort : spec.sort_modes) {
        for (std::size_t m = 0; m < spec.methods.size(); ++m) {
          RunConfig cfg = base;
          cfg.delta_thresh = delta;
          cfg.d_thresh = d;
          cfg.sort_mode = sort;
          ScoringSpec pre;
          pre.mode = ScoringSpec::Mode::Preexisting;
          pre.label = spec.methods[m].label;
          rows.push_back(evaluate_scans(annotated[m], cfg, pre));
        }
      }
    }
  }
  return rows;
}

std::string report_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << kReportCsvHeader << "\n";
  for (const auto& r : rows) {
    out << fmt_double(r.delta_thresh) << "," << fmt_double(r.d_thresh) << "," << r.sort_mode
        << "," << r.method << "," << fmt_double(r.hits_open) << "," << fmt_double(r.hits_closed)
        << "," << fmt_double(r.metrics.auroc) << "," << fmt_double(r.metrics.fpr95) << ","
        << fmt_double(r.metrics.aupr_e) << "," << fmt_double(r.metrics.aupr_s) << "\n";
  }
  return out.str();
}

std::string report_markdown(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << "| delta | d | sort | Method | Hits (O)% | Hits (C)% | AUROC | FPR-95 | AUPR-E | "
         "AUPR-S |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|\n";
  char buf[64];
  auto pct = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * v);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.2f", r.delta_thresh);
    out << "| " << buf;
    std::snprintf(buf, sizeof(buf), "%.1fm", r.d_thresh);
    out << " | " << buf << " | " << r.sort_mode << " | " << r.method << " | "
        << pct(r.hits_open) << " | " << pct(r.hits_closed) << " | " << pct(r.metrics.auroc)
        << " | " << pct(r.metrics.fpr95) << " | " << pct(r.metrics.aupr_e) << " | "
        << pct(r.metrics.aupr_s) << " |\n";
  }
  return out.str();
}

std::vector<EvalRow> parse_report_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty report CSV");
  if (line != kReportCsvHeader) throw ParseError("unexpected report CSV header: " + line);

  std::vector<EvalRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 10) {
      throw ParseError("report CSV line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, want 10");
    }
    EvalRow r;
    r.delta_thresh = parse_csv_double(fields[0]);
    r.d_thresh = parse_csv_double(fields[1]);
    r.sort_mode = fields[2];
    r.method = fields[3];
    r.hits_open = parse_csv_double(fields[4]);
    r.hits_closed = parse_csv_double(fields[5]);
    r.metrics.auroc = parse_csv_double(fields[6]);
    r.metrics.fpr95 = parse_csv_double(fields[7]);
    r.metrics.aupr_e = parse_csv_double(fields[8]);
    r.metrics.aupr_s = parse_csv_double(fields[9]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("failed writing file: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace ood3d

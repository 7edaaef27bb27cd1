// Command-line front end: dataset synthesis, forging, scoring, head
// training, evaluation, sweeps and report formatting.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ood3d/errors.hpp"
#include "ood3d/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ood3d;

namespace {

struct CommonArgs {
  std::string manifest_path;
  std::string config_path;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

KeyValues load_kv(const std::string& path) {
  if (path.empty()) return KeyValues{};
  return load_key_values(path);
}

RunConfig make_run_config(const KeyValues& kv, const CommonArgs& args,
                          const std::string& subset_flag) {
  RunConfig cfg = run_config_from_key_values(kv);
  if (args.seed_set) cfg.rng_seed = args.seed;
  if (subset_flag == "all") {
    cfg.eval_subset = EvalSubset::AllScans;
  } else if (subset_flag == "open") {
    cfg.eval_subset = EvalSubset::OpenScansOnly;
  } else if (!subset_flag.empty()) {
    throw ConfigError("--subset must be 'all' or 'open'");
  }
  return cfg;
}

ProbeConfig probe_from_kv(const KeyValues& kv) {
  ProbeConfig p;
  const std::string source = kv.get("probe.source", "LowDim");
  if (source == "HighDim") {
    p.source = ProbeSource::HighDim;
  } else if (source == "LowDim") {
    p.source = ProbeSource::LowDim;
  } else {
    throw ConfigError("probe.source must be LowDim or HighDim");
  }
  p.interpolate = kv.get_bool("probe.interpolate", false);
  p.pool3x3 = kv.get_bool("probe.pool3x3", false);
  return p;
}

TrainConfig train_from_kv(const KeyValues& kv) {
  TrainConfig t;
  t.epochs = static_cast<int>(kv.get_int("train.epochs", t.epochs));
  t.lr0 = kv.get_double("train.lr0", t.lr0);
  t.poly_power = kv.get_double("train.poly_power", t.poly_power);
  const std::string loss = kv.get("train.loss", "Bce");
  if (loss == "Focal") {
    t.loss = LossKind::Focal;
  } else if (loss == "Bce") {
    t.loss = LossKind::Bce;
  } else {
    throw ConfigError("train.loss must be Bce or Focal");
  }
  t.focal_gamma = kv.get_double("train.focal_gamma", t.focal_gamma);
  t.focal_alpha = kv.get_double("train.focal_alpha", t.focal_alpha);
  t.batch_size = static_cast<int>(kv.get_int("train.batch_size", t.batch_size));
  t.rng_seed = kv.get_u64("train.rng_seed", t.rng_seed);
  return t;
}

ForgeConfig forge_from_kv(const KeyValues& kv) {
  ForgeConfig f;
  f.topk_k = static_cast<int>(kv.get_int("forge.k", f.topk_k));
  f.mix_prob = kv.get_double("forge.mix_prob", f.mix_prob);
  f.mix_range = {kv.get_double("forge.mix_lo", f.mix_range[0]),
                 kv.get_double("forge.mix_hi", f.mix_range[1])};
  f.min_points = static_cast<int>(kv.get_int("forge.min_points", f.min_points));
  f.inject_count_range = {static_cast<int>(kv.get_int("forge.inject_min", f.inject_count_range[0])),
                          static_cast<int>(kv.get_int("forge.inject_max", f.inject_count_range[1]))};
  f.surface_samples = static_cast<int>(kv.get_int("forge.surface_samples", f.surface_samples));
  f.grid_cells_range = {static_cast<int>(kv.get_int("forge.grid_min", f.grid_cells_range[0])),
                        static_cast<int>(kv.get_int("forge.grid_max", f.grid_cells_range[1]))};
  f.keep_per_cell_range = {static_cast<int>(kv.get_int("forge.keep_min", f.keep_per_cell_range[0])),
                           static_cast<int>(kv.get_int("forge.keep_max", f.keep_per_cell_range[1]))};
  f.scale_range = {kv.get_double("forge.scale_min", f.scale_range[0]),
                   kv.get_double("forge.scale_max", f.scale_range[1])};
  f.resize_axis_range = {kv.get_double("forge.resize_lo", f.resize_axis_range[0]),
                         kv.get_double("forge.resize_hi", f.resize_axis_range[1])};
  f.resize_excluded_band = {kv.get_double("forge.band_lo", f.resize_excluded_band[0]),
                            kv.get_double("forge.band_hi", f.resize_excluded_band[1])};
  f.rng_seed = kv.get_u64("forge.rng_seed", f.rng_seed);
  validate_forge_config(f);
  return f;
}

void copy_world_echo(const std::string& src_dir, const std::string& dst_dir) {
  const fs::path echo = fs::path(src_dir) / "world_echo.json";
  if (fs::exists(echo)) {
    fs::copy_file(echo, fs::path(dst_dir) / "world_echo.json",
                  fs::copy_options::overwrite_existing);
  }
}

int cmd_synth(const CommonArgs& args) {
  WorldConfig world = default_world();
  DetectorEmulation emu = default_emulation();
  if (!args.config_path.empty()) load_world_config(args.config_path, world, emu);
  if (args.seed_set) world.rng_seed = args.seed;
  const DatasetManifest manifest = generate_world(world, emu, args.out);
  std::cout << "wrote " << manifest.scan_paths.size() << " scans under " << args.out << "\n";
  std::cout << (fs::path(args.out) / "manifest.json").string() << "\n";
  return 0;
}

int cmd_score(const CommonArgs& args, const std::string& scorer_name) {
  const KeyValues kv = load_kv(args.config_path);
  RunConfig run = make_run_config(kv, args, "");
  if (!scorer_name.empty()) run.scorer.method = scorer_method_from_string(scorer_name);
  if (run.scorer.method == ScorerMethod::OdinTemperature && !kv.has("scorer.temperature")) {
    run.scorer.temperature = kOdinDefaultTemperature;
  }

  const DatasetManifest manifest = load_manifest(args.manifest_path);
  fs::create_directories(fs::path(args.out) / "scans");

  DatasetManifest out_manifest = manifest;
  out_manifest.scan_paths.clear();
  std::vector<std::string> failures;
  for (std::size_t i = 0; i < manifest.scan_paths.size(); ++i) {
    Scan scan = load_scan(resolve_scan_path(manifest, i), manifest);
    try {
      for (Detection& det : scan.detections) {
        det.ood_score = score_detection(det, run.scorer);
      }
    } catch (const DataError& e) {
      failures.push_back(scan.scan_id + ": " + e.what());
      continue;
    }
    char name[48];
    std::snprintf(name, sizeof(name), "scans/scan_%05d.json", static_cast<int>(i));
    save_scan(scan, manifest, (fs::path(args.out) / name).string());
    out_manifest.scan_paths.push_back(name);
  }
  save_manifest(out_manifest, (fs::path(args.out) / "manifest.json").string());
  copy_world_echo(manifest.base_dir, args.out);

  if (!failures.empty()) {
    std::cerr << failures.size() << " scan(s) could not be scored:\n";
    for (const auto& f : failures) std::cerr << "  " << f << "\n";
    return 4;
  }
  std::cout << "scored " << out_manifest.scan_paths.size() << " scans with "
            << to_string(run.scorer.method) << "\n";
  return 0;
}

int cmd_train_head(const CommonArgs& args, const std::string& method_name) {
  const KeyValues kv = load_kv(args.config_path);
  TrainPipelineConfig cfg;
  cfg.method = train_method_from_string(method_name);
  cfg.run = make_run_config(kv, args, "");
  cfg.probe = probe_from_kv(kv);
  cfg.train = train_from_kv(kv);
  cfg.forge = forge_from_kv(kv);
  if (args.seed_set) {
    cfg.train.rng_seed = args.seed;
    cfg.forge.rng_seed = args.seed;
  }

  const DatasetManifest manifest = load_manifest(args.manifest_path);
  const TrainOutput out = train_head_pipeline(manifest, cfg);
  save_head_model(out.model, args.out);
  std::cout << "trained " << to_string(cfg.method) << " head on " << out.n_inputs
            << " inputs (" << out.n_unknown << " unknown), final loss "
            << (out.epoch_losses.empty() ? 0.0 : out.epoch_losses.back()) << "\n";
  std::cout << args.out << "\n";
  return 0;
}

int cmd_forge(const CommonArgs& args, const std::string& method_name, int k_flag) {
  const KeyValues kv = load_kv(args.config_path);
  TrainPipelineConfig cfg;
  cfg.method = train_method_from_string(method_name);
  cfg.run = make_run_config(kv, args, "");
  cfg.probe = probe_from_kv(kv);
  cfg.train = train_from_kv(kv);
  cfg.forge = forge_from_kv(kv);
  if (k_flag > 0) cfg.forge.topk_k = k_flag;
  if (args.seed_set) {
    cfg.forge.rng_seed = args.seed;
    cfg.train.rng_seed = args.seed;
  }

  const DatasetManifest manifest = load_manifest(args.manifest_path);
  fs::create_directories(args.out);
  const std::vector<HeadInput> inputs = build_head_inputs(manifest, cfg);
  std::size_t unknown = 0;
  for (const auto& in : inputs) unknown += in.label == 1 ? 1 : 0;
  const std::string records = (fs::path(args.out) / "head_inputs.jsonl").string();
  save_head_inputs(inputs, to_string(cfg.method), records);
  std::cout << "forged " << inputs.size() << " training records (" << unknown << " unknown) -> "
            << records << "\n";
  return 0;
}

ScoringSpec make_scoring(const std::string& scorer_name, const std::string& model_path,
                         bool pre_scored, const RunConfig& run) {
  ScoringSpec scoring;
  if (pre_scored) {
    scoring.mode = ScoringSpec::Mode::Preexisting;
    scoring.label = "Preexisting";
    return scoring;
  }
  if (!model_path.empty()) {
    scoring.mode = ScoringSpec::Mode::Head;
    scoring.head = load_head_model(model_path);
    scoring.label = "Head[" + scoring.head.forge_method + "]";
    return scoring;
  }
  scoring.mode = ScoringSpec::Mode::Scorer;
  scoring.scorer = run.scorer;
  if (!scorer_name.empty()) {
    scoring.scorer.method = scorer_method_from_string(scorer_name);
    if (scoring.scorer.method == ScorerMethod::OdinTemperature) {
      scoring.scorer.temperature = kOdinDefaultTemperature;
    }
  }
  scoring.label = to_string(scoring.scorer.method);
  return scoring;
}

int cmd_eval(const CommonArgs& args, const std::string& scorer_name,
             const std::string& model_path, bool pre_scored, const std::string& subset) {
  const KeyValues kv = load_kv(args.config_path);
  const RunConfig run = make_run_config(kv, args, subset);
  const ScoringSpec scoring = make_scoring(scorer_name, model_path, pre_scored, run);

  const DatasetManifest manifest = load_manifest(args.manifest_path);
  const EvalRow row = evaluate_dataset(manifest, run, scoring);

  const std::vector<EvalRow> rows = {row};
  write_text_file(args.out + ".csv", report_csv(rows));
  write_text_file(args.out + ".md", report_markdown(rows));
  std::cout << report_markdown(rows);
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& grid_path, const std::string& subset) {
  const KeyValues kv = load_kv(args.config_path);
  const RunConfig run = make_run_config(kv, args, subset);
  const SweepSpec spec = load_sweep_spec(grid_path);

  const DatasetManifest manifest = load_manifest(args.manifest_path);
  const std::vector<EvalRow> rows = run_sweep(manifest, run, spec);
  write_text_file(args.out + ".csv", report_csv(rows));
  write_text_file(args.out + ".md", report_markdown(rows));
  std::cout << "wrote " << rows.size() << " sweep rows to " << args.out << ".csv\n";
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& out_path) {
  const std::vector<EvalRow> rows = parse_report_csv(read_text_file(in_path));
  write_text_file(out_path, report_markdown(rows));
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OOD-aware 3D detection evaluation toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string scorer_name;
  std::string model_path;
  std::string subset;
  std::string grid_path;
  std::string method_name;
  std::string report_in;
  bool pre_scored = false;
  int k_flag = 0;

  auto add_common = [&](CLI::App* cmd, bool with_manifest) {
    if (with_manifest) {
      cmd->add_option("--manifest", args.manifest_path, "dataset manifest JSON")->required();
    }
    cmd->add_option("--config", args.config_path, "key=value run config file");
    cmd->add_option("--out", args.out, "output path")->required();
    cmd->add_option("--seed", args.seed, "override rng seeds")
        ->each([&](const std::string&) { args.seed_set = true; });
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic world");
  add_common(synth, false);
  synth->add_option("--world", args.config_path, "world config JSON (alias of --config)");

  CLI::App* score = app.add_subcommand("score", "annotate detections with a single-stage scorer");
  add_common(score, true);
  score->add_option("--scorer", scorer_name, "DefaultScore|MaxLogit|Msp|Energy|OdinTemperature|McDropout");

  CLI::App* forge = app.add_subcommand("forge", "emit pseudo-unknown training records");
  add_common(forge, true);
  forge->add_option("--forge-method", method_name, "generation method")->required();
  forge->add_option("--k", k_flag, "top-K for autolabelling");

  CLI::App* train = app.add_subcommand("train-head", "train the two-stage MLP head");
  add_common(train, true);
  train->add_option("--forge-method", method_name, "Oracle|GaussianNoise|MeshInjection|PointMixup|Resizing|TopK")
      ->required();

  CLI::App* eval = app.add_subcommand("eval", "match, score and compute OOD metrics");
  add_common(eval, true);
  eval->add_option("--scorer", scorer_name, "single-stage scorer");
  eval->add_option("--model", model_path, "trained head model JSON");
  eval->add_flag("--pre-scored", pre_scored, "use ood_score already present in the dumps");
  eval->add_option("--subset", subset, "all|open (overrides config)");

  CLI::App* sweep = app.add_subcommand("sweep", "hyperparameter grid evaluation");
  add_common(sweep, true);
  sweep->add_option("--grid", grid_path, "sweep spec JSON")->required();
  sweep->add_option("--subset", subset, "all|open (overrides config)");

  CLI::App* report = app.add_subcommand("report", "render a report CSV as markdown");
  report->add_option("--in", report_in, "report CSV")->required();
  report->add_option("--out", args.out, "markdown output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(args);
    if (score->parsed()) return cmd_score(args, scorer_name);
    if (forge->parsed()) return cmd_forge(args, method_name, k_flag);
    if (train->parsed()) return cmd_train_head(args, method_name);
    if (eval->parsed()) return cmd_eval(args, scorer_name, model_path, pre_scored, subset);
    if (sweep->parsed()) return cmd_sweep(args, grid_path, subset);
    if (report->parsed()) return cmd_report(report_in, args.out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

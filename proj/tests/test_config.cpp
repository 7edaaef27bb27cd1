#include <doctest.h>

#include "ood3d/config.hpp"
#include "ood3d/errors.hpp"
#include "helpers.hpp"

using namespace ood3d;
using namespace ood3d::testing;

TEST_CASE("run config defaults mirror the final protocol choices") {
  const RunConfig cfg;
  CHECK(cfg.delta_thresh == 0.3);
  CHECK(cfg.d_thresh == 2.0);
  CHECK(cfg.sort_mode == SortMode::DetectorScore);
  CHECK(cfg.eval_subset == EvalSubset::OpenScansOnly);
  CHECK(cfg.distance_mode == DistanceMode::Euclidean3D);
}

TEST_CASE("key=value parsing, comments and overrides") {
  const KeyValues kv = parse_key_values_text(
      "# comment\n"
      "d_thresh = 0.5\n"
      "delta_thresh=0.05  # trailing comment\n"
      "sort_mode=OodScore\n"
      "eval_subset=AllScans\n"
      "scorer.method=Energy\n"
      "scorer.temperature=2.5\n"
      "train.epochs=9\n");
  const RunConfig cfg = run_config_from_key_values(kv);
  CHECK(cfg.d_thresh == 0.5);
  CHECK(cfg.delta_thresh == 0.05);
  CHECK(cfg.sort_mode == SortMode::OodScore);
  CHECK(cfg.eval_subset == EvalSubset::AllScans);
  CHECK(cfg.scorer.method == ScorerMethod::Energy);
  CHECK(cfg.scorer.temperature == 2.5);
  CHECK(kv.get_int("train.epochs", 0) == 9);  // routed to the pipeline
}

TEST_CASE("unknown keys and bad values are config errors") {
  CHECK_THROWS_AS(run_config_from_key_values(parse_key_values_text("d_tresh=1\n")), ConfigError);
  CHECK_THROWS_AS(run_config_from_key_values(parse_key_values_text("d_thresh=abc\n")),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_key_values(parse_key_values_text("d_thresh=-1\n")),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_key_values(parse_key_values_text("sort_mode=Wrong\n")),
                  ConfigError);
  CHECK_THROWS_AS(parse_key_values_text("not a pair\n"), ConfigError);
}

TEST_CASE("odin method defaults its temperature to 1000") {
  const RunConfig cfg =
      run_config_from_key_values(parse_key_values_text("scorer.method=OdinTemperature\n"));
  CHECK(cfg.scorer.temperature == 1000.0);
  const RunConfig with_t = run_config_from_key_values(
      parse_key_values_text("scorer.method=OdinTemperature\nscorer.temperature=10\n"));
  CHECK(with_t.scorer.temperature == 10.0);
}

TEST_CASE("run config file round-trip") {
  TempDir dir("cfg");
  RunConfig cfg;
  cfg.d_thresh = 1.25;
  cfg.delta_thresh = 0.05;
  cfg.ood_thresh = 0.4;
  cfg.sort_mode = SortMode::OodScore;
  cfg.rng_seed = 42;
  cfg.scorer.method = ScorerMethod::McDropout;
  cfg.scorer.mc_aggregation = McAggregation::MaxProbVariance;
  save_run_config(cfg, dir.file("run.cfg"));
  const RunConfig back = load_run_config(dir.file("run.cfg"));
  CHECK(back.d_thresh == cfg.d_thresh);
  CHECK(back.delta_thresh == cfg.delta_thresh);
  CHECK(back.ood_thresh == cfg.ood_thresh);
  CHECK(back.sort_mode == cfg.sort_mode);
  CHECK(back.rng_seed == cfg.rng_seed);
  CHECK(back.scorer.method == cfg.scorer.method);
  CHECK(back.scorer.mc_aggregation == cfg.scorer.mc_aggregation);
}

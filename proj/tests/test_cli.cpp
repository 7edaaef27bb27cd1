#include <doctest.h>

// End-to-end subcommand tests against the installed binary
// (OOD3D_CLI_PATH is injected by the build).

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "ood3d/pipeline.hpp"
#include "helpers.hpp"

using namespace ood3d;
using namespace ood3d::testing;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(OOD3D_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status < 0) return -1;
  return WEXITSTATUS(status);
}

void write_small_world(const std::string& path, int n_scans, std::uint64_t seed,
                       bool with_maps) {
  WorldConfig world = default_world();
  world.n_scans = n_scans;
  world.extent = 50.0;
  world.feature_dim_low = 8;
  world.feature_dim_high = 12;
  world.background_points = 40;
  world.with_feature_maps = with_maps;
  world.rng_seed = seed;
  save_world_config(world, default_emulation(), path);
}

}  // namespace

TEST_CASE("synth then eval with a scorer produces the report pair") {
  TempDir dir("cli_eval");
  write_small_world(dir.file("world.json"), 14, 5, false);
  REQUIRE(run_cli("synth --config " + dir.file("world.json") + " --out " + dir.file("data")) ==
          0);
  REQUIRE(run_cli("eval --manifest " + dir.file("data/manifest.json") +
                  " --scorer DefaultScore --out " + dir.file("report")) == 0);

  const std::string csv = read_file_bytes(dir.file("report.csv"));
  CHECK(csv.find("DefaultScore") != std::string::npos);
  const auto rows = parse_report_csv(csv);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].metrics.auroc >= 0.0);
  CHECK(rows[0].metrics.auroc <= 1.0);
  CHECK(!read_file_bytes(dir.file("report.md")).empty());
}

TEST_CASE("score annotates DefaultScore as 1 - score") {
  TempDir dir("cli_score");
  write_small_world(dir.file("world.json"), 6, 6, false);
  REQUIRE(run_cli("synth --config " + dir.file("world.json") + " --out " + dir.file("data")) ==
          0);
  REQUIRE(run_cli("score --manifest " + dir.file("data/manifest.json") +
                  " --scorer DefaultScore --out " + dir.file("scored")) == 0);

  const DatasetManifest manifest = load_manifest(dir.file("scored/manifest.json"));
  const std::vector<Scan> scans = load_scans(manifest);
  REQUIRE(!scans.empty());
  for (const auto& scan : scans) {
    for (const auto& det : scan.detections) {
      REQUIRE(det.ood_score.has_value());
      CHECK(*det.ood_score == 1.0 - det.score);
    }
  }
}

TEST_CASE("score annotations match the module scorers (Energy)") {
  TempDir dir("cli_energy");
  write_small_world(dir.file("world.json"), 4, 7, false);
  REQUIRE(run_cli("synth --config " + dir.file("world.json") + " --out " + dir.file("data")) ==
          0);
  REQUIRE(run_cli("score --manifest " + dir.file("data/manifest.json") +
                  " --scorer Energy --out " + dir.file("scored")) == 0);
  const DatasetManifest manifest = load_manifest(dir.file("scored/manifest.json"));
  const std::vector<Scan> scans = load_scans(manifest);
  int checked = 0;
  for (const auto& scan : scans) {
    for (const auto& det : scan.detections) {
      REQUIRE(det.ood_score.has_value());
      CHECK(*det.ood_score == score_energy(det, 1.0));
      if (++checked >= 3) return;
    }
  }
}

TEST_CASE("McDropout without logit samples lists failing scans and exits 4") {
  TempDir dir("cli_mc");
  write_small_world(dir.file("world.json"), 4, 8, false);  // mc.samples defaults to 0
  REQUIRE(run_cli("synth --config " + dir.file("world.json") + " --out " + dir.file("data")) ==
          0);
  CHECK(run_cli("score --manifest " + dir.file("data/manifest.json") +
                " --scorer McDropout --out " + dir.file("scored")) == 4);
}

TEST_CASE("exit codes: bad flags 2, missing files 3") {
  TempDir dir("cli_codes");
  CHECK(run_cli("eval --out x") == 2);                     // missing required --manifest
  CHECK(run_cli("nonsense-subcommand") == 2);
  CHECK(run_cli("eval --manifest /no/such/manifest.json --scorer Energy --out " +
                dir.file("r")) == 3);
  write_small_world(dir.file("world.json"), 3, 9, false);
  REQUIRE(run_cli("synth --config " + dir.file("world.json") + " --out " + dir.file("data")) ==
          0);
  CHECK(run_cli("eval --manifest " + dir.file("data/manifest.json") +
                " --scorer NoSuchScorer --out " + dir.file("r")) == 2);
}

TEST_CASE("full pipeline: synth, train-head, eval; byte-identical on repeat") {
  TempDir dir("cli_determinism");
  write_small_world(dir.file("world.json"), 10, 11, true);

  auto run_once = [&](const std::string& tag) {
    const std::string data = dir.file("data_" + tag);
    const std::string model = dir.file("model_" + tag + ".json");
    const std::string report = dir.file("report_" + tag);
    REQUIRE(run_cli("synth --config " + dir.file("world.json") + " --out " + data) == 0);
    REQUIRE(run_cli("train-head --manifest " + data + "/manifest.json --forge-method TopK" +
                    " --seed 21 --out " + model) == 0);
    REQUIRE(run_cli("eval --manifest " + data + "/manifest.json --model " + model + " --out " +
                    report) == 0);
    return read_file_bytes(report + ".csv") + "|" + read_file_bytes(report + ".md");
  };
  const std::string a = run_once("a");
  const std::string b = run_once("b");
  CHECK(!a.empty());
  CHECK(a == b);
}

TEST_CASE("sweep and report subcommands") {
  TempDir dir("cli_sweep");
  write_small_world(dir.file("world.json"), 12, 13, false);
  REQUIRE(run_cli("synth --config " + dir.file("world.json") + " --out " + dir.file("data")) ==
          0);
  {
    std::ofstream grid(dir.file("grid.json"));
    grid << R"({"delta_thresh":[0.05,0.3],"d_thresh":[0.5,2.0],)"
         << R"("sort_modes":["DetectorScore"],"methods":["DefaultScore","Energy"]})";
  }
  REQUIRE(run_cli("sweep --manifest " + dir.file("data/manifest.json") + " --grid " +
                  dir.file("grid.json") + " --out " + dir.file("sweep")) == 0);
  const auto rows = parse_report_csv(read_file_bytes(dir.file("sweep.csv")));
  CHECK(rows.size() == 8);  // 2 deltas x 2 distances x 1 sort x 2 methods

  REQUIRE(run_cli("report --in " + dir.file("sweep.csv") + " --out " + dir.file("sweep2.md")) ==
          0);
  const std::string md = read_file_bytes(dir.file("sweep2.md"));
  CHECK(md.find("| Energy |") != std::string::npos);
  CHECK(md == read_file_bytes(dir.file("sweep.md")));
}

TEST_CASE("synth without a config builds the 200-scan default world") {
  TempDir dir("cli_default_world");
  REQUIRE(run_cli("synth --out " + dir.file("data")) == 0);
  const DatasetManifest manifest = load_manifest(dir.file("data/manifest.json"));
  CHECK(manifest.scan_paths.size() == 200);
  CHECK(manifest.known_classes.size() == 3);
  CHECK(manifest.open_classes.size() == 1);
  // spot-check one scan revalidates
  CHECK_NOTHROW(load_scan(resolve_scan_path(manifest, 0), manifest));
  CHECK_NOTHROW(load_scan(resolve_scan_path(manifest, 199), manifest));
}

TEST_CASE("forge subcommand writes training records") {
  TempDir dir("cli_forge");
  write_small_world(dir.file("world.json"), 8, 15, true);
  REQUIRE(run_cli("synth --config " + dir.file("world.json") + " --out " + dir.file("data")) ==
          0);
  REQUIRE(run_cli("forge --manifest " + dir.file("data/manifest.json") +
                  " --forge-method TopK --k 4 --out " + dir.file("forged")) == 0);
  const auto records = load_head_inputs(dir.file("forged/head_inputs.jsonl"));
  CHECK(!records.empty());
  bool has_unknown = false;
  for (const auto& r : records) has_unknown = has_unknown || r.label == 1;
  CHECK(has_unknown);
}

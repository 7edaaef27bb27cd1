#include <doctest.h>

#include <fstream>

#include "ood3d/errors.hpp"
#include "ood3d/scan_io.hpp"
#include "helpers.hpp"

using namespace ood3d;
using namespace ood3d::testing;

TEST_CASE("empty scan round-trips") {
  TempDir dir("io_empty");
  const DatasetManifest manifest = tiny_manifest();
  Scan scan;
  scan.scan_id = "empty";
  save_scan(scan, manifest, dir.file("s.json"));
  const Scan back = load_scan(dir.file("s.json"), manifest);
  CHECK(back == scan);
  CHECK(back.detections.empty());
  CHECK(back.ground_truth.empty());
}

TEST_CASE("randomized scans round-trip exactly, inline and blob-backed") {
  TempDir dir("io_rt");
  const DatasetManifest manifest = tiny_manifest();
  Rng rng(2024);
  for (int i = 0; i < 40; ++i) {
    const Scan scan = random_scan(rng, manifest, /*with_maps=*/i % 2 == 0);
    SaveOptions opts;
    opts.points = i % 3 == 0 ? Placement::Blob : (i % 3 == 1 ? Placement::Inline : Placement::Auto);
    opts.embeddings = i % 2 == 0 ? Placement::Blob : Placement::Inline;
    const std::string path = dir.file("s" + std::to_string(i) + ".json");
    save_scan(scan, manifest, path, opts);
    CHECK(load_scan(path, manifest) == scan);
  }
}

TEST_CASE("large blob-backed scan reloads identically") {
  TempDir dir("io_large");
  const DatasetManifest manifest = tiny_manifest();
  Rng rng(7);
  Scan scan;
  scan.scan_id = "large";
  for (int i = 0; i < 100000; ++i) {
    scan.cloud.points.push_back({static_cast<float>(rng.uniform(-90, 90)),
                                 static_cast<float>(rng.uniform(-90, 90)),
                                 static_cast<float>(rng.uniform(-3, 5)),
                                 static_cast<float>(rng.uniform(0, 1))});
  }
  save_scan(scan, manifest, dir.file("big.json"));
  CHECK(load_scan(dir.file("big.json"), manifest) == scan);
}

TEST_CASE("logits argmax disagreement raises SchemaError") {
  TempDir dir("io_argmax");
  const DatasetManifest manifest = tiny_manifest();
  std::ofstream out(dir.file("bad.json"));
  out << R"({"scan_id":"bad","points":[],"ground_truth":[],"detections":[)"
      << R"({"box":[0,0,0,1,1,1,0],"score":0.5,"logits":[0.1,2.0,0.3],)"
      << R"("predicted_class":0,"embedding":[1.0]}]})";
  out.close();
  CHECK_THROWS_AS(load_scan(dir.file("bad.json"), manifest), SchemaError);
}

TEST_CASE("logits length mismatch raises SchemaError") {
  TempDir dir("io_logits");
  const DatasetManifest manifest = tiny_manifest();  // 3 known classes
  std::ofstream out(dir.file("bad.json"));
  out << R"({"scan_id":"bad","points":[],"ground_truth":[],"detections":[)"
      << R"({"box":[0,0,0,1,1,1,0],"score":0.5,"logits":[2.0,0.3],)"
      << R"("predicted_class":0,"embedding":[]}]})";
  out.close();
  CHECK_THROWS_AS(load_scan(dir.file("bad.json"), manifest), SchemaError);
}

TEST_CASE("unknown class name raises SchemaError") {
  TempDir dir("io_class");
  const DatasetManifest manifest = tiny_manifest();
  std::ofstream out(dir.file("bad.json"));
  out << R"({"scan_id":"bad","points":[],"detections":[],"ground_truth":[)"
      << R"({"box":[0,0,0,1,1,1,0],"class":"zeppelin"}]})";
  out.close();
  CHECK_THROWS_AS(load_scan(dir.file("bad.json"), manifest), SchemaError);
}

TEST_CASE("malformed JSON raises ParseError with position info") {
  TempDir dir("io_parse");
  const DatasetManifest manifest = tiny_manifest();
  std::ofstream out(dir.file("broken.json"));
  out << "{\"scan_id\": \"x\",\n  \"points\": [[1,2,3\n";
  out.close();
  try {
    load_scan(dir.file("broken.json"), manifest);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
}

TEST_CASE("missing file raises IoError") {
  const DatasetManifest manifest = tiny_manifest();
  CHECK_THROWS_AS(load_scan("/nonexistent/scan.json", manifest), IoError);
  CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.json"), IoError);
}

TEST_CASE("manifest round-trip and partition checks") {
  TempDir dir("io_manifest");
  DatasetManifest m = tiny_manifest();
  m.scan_paths = {"scans/a.json", "scans/b.json"};
  save_manifest(m, dir.file("manifest.json"));
  const DatasetManifest back = load_manifest(dir.file("manifest.json"));
  CHECK(back.known_classes == m.known_classes);
  CHECK(back.open_classes == m.open_classes);
  CHECK(back.scan_paths == m.scan_paths);
  CHECK(back.intensity_mean == m.intensity_mean);
  CHECK(back.intensity_std == m.intensity_std);
  CHECK(back.base_dir == dir.str());

  DatasetManifest overlap = m;
  overlap.open_classes.push_back("car");
  save_manifest(overlap, dir.file("overlap.json"));
  CHECK_THROWS_AS(load_manifest(dir.file("overlap.json")), SchemaError);
}

TEST_CASE("filter_open_subset keeps exactly the scans with open GT") {
  TempDir dir("io_filter");
  DatasetManifest manifest = tiny_manifest();
  Rng rng(31);
  // 10 scans, open objects seeded into a known subset of 4
  const std::vector<int> open_scans = {1, 4, 5, 8};
  for (int i = 0; i < 10; ++i) {
    Scan scan;
    scan.scan_id = "s" + std::to_string(i);
    scan.ground_truth.push_back(make_gt({0, 0, 0, 1, 1, 1, 0}, 0, false));
    if (std::count(open_scans.begin(), open_scans.end(), i)) {
      scan.ground_truth.push_back(make_gt({5, 5, 0, 1, 1, 1, 0}, 3, true));
    }
    const std::string rel = "scan" + std::to_string(i) + ".json";
    save_scan(scan, manifest, dir.file(rel));
    manifest.scan_paths.push_back(rel);
  }
  manifest.base_dir = dir.str();

  const DatasetManifest subset = filter_open_subset(manifest);
  REQUIRE(subset.scan_paths.size() == 4);
  for (std::size_t k = 0; k < subset.scan_paths.size(); ++k) {
    CHECK(subset.scan_paths[k] ==
          "scan" + std::to_string(open_scans[k]) + ".json");
  }

  // idempotent
  const DatasetManifest twice = filter_open_subset(subset);
  CHECK(twice.scan_paths == subset.scan_paths);

  // trivial cases
  DatasetManifest none = manifest;
  none.scan_paths = {"scan0.json", "scan2.json"};
  CHECK(filter_open_subset(none).scan_paths.empty());
  DatasetManifest all = manifest;
  all.scan_paths = {"scan1.json", "scan4.json"};
  CHECK(filter_open_subset(all).scan_paths == all.scan_paths);
}

TEST_CASE("duplicate scan ids are rejected at dataset load") {
  TempDir dir("io_dup");
  DatasetManifest manifest = tiny_manifest();
  Scan scan;
  scan.scan_id = "same";
  save_scan(scan, manifest, dir.file("a.json"));
  save_scan(scan, manifest, dir.file("b.json"));
  manifest.scan_paths = {"a.json", "b.json"};
  manifest.base_dir = dir.str();
  CHECK_THROWS_AS(load_scans(manifest), SchemaError);
}

TEST_CASE("blob dtype and dims are validated") {
  TempDir dir("io_blob");
  BlobF32 blob;
  blob.dims = {2, 3};
  blob.data = {1, 2, 3, 4, 5, 6};
  save_blob(blob, dir.file("x.blob"));
  const BlobF32 back = load_blob_f32(dir.file("x.blob"));
  CHECK(back.dims == blob.dims);
  CHECK(back.data == blob.data);
  CHECK_THROWS_AS(load_blob_f64(dir.file("x.blob")), ParseError);

  std::ofstream trunc(dir.file("t.blob"), std::ios::binary);
  trunc << "OODB";
  trunc.close();
  CHECK_THROWS_AS(load_blob_f32(dir.file("t.blob")), ParseError);
}

#include <doctest.h>

#include <climits>
#include <set>

#include "ood3d/errors.hpp"
#include "ood3d/matcher.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ood3d;
using namespace ood3d::testing;

namespace {

RunConfig base_config() {
  RunConfig cfg;
  cfg.delta_thresh = 0.3;
  cfg.d_thresh = 2.0;
  cfg.ood_thresh = 0.5;
  return cfg;
}

Detection det_at(double x, double y, double score, double ood) {
  Detection d = make_detection({x, y, 0, 1, 1, 1, 0}, score, {1.0, 0.0, 0.0});
  d.ood_score = ood;
  return d;
}

Scan random_match_scan(Rng& rng, int max_det, int max_gt) {
  Scan scan;
  scan.scan_id = "m" + std::to_string(rng.next_u64());
  const int n_det = static_cast<int>(rng.uniform_int(0, max_det));
  const int n_gt = static_cast<int>(rng.uniform_int(0, max_gt));
  for (int g = 0; g < n_gt; ++g) {
    scan.ground_truth.push_back(make_gt({rng.uniform(-5, 5), rng.uniform(-5, 5),
                                         rng.uniform(0, 1), 1, 1, 1, 0},
                                        rng.bernoulli(0.3) ? 3 : 0, false));
    scan.ground_truth.back().is_open = scan.ground_truth.back().class_id == 3;
  }
  for (int d = 0; d < n_det; ++d) {
    // quantized scores force ties; tight span forces contested GTs
    const double score = rng.uniform_int(0, 4) * 0.25;
    Detection det = det_at(rng.uniform(-5, 5), rng.uniform(-5, 5), score,
                           rng.uniform_int(0, 4) * 0.25);
    scan.detections.push_back(det);
  }
  return scan;
}

}  // namespace

TEST_CASE("no detections: everything missed") {
  Scan scan;
  scan.scan_id = "s";
  scan.ground_truth.push_back(make_gt({0, 0, 0, 1, 1, 1, 0}, 0, false));
  scan.ground_truth.push_back(make_gt({4, 0, 0, 1, 1, 1, 0}, 3, true));
  const MatchReport r = match_scan(scan, base_config());
  CHECK(r.pairs.empty());
  CHECK(r.unmatched_gts == std::vector<int>{0, 1});
  CHECK(r.n_open_gt == 1);
  CHECK(r.n_closed_gt == 1);
}

TEST_CASE("exact-center detection matches at distance zero") {
  Scan scan;
  scan.scan_id = "s";
  scan.ground_truth.push_back(make_gt({1, 2, 0.5, 1, 1, 1, 0}, 0, false));
  scan.detections.push_back(det_at(1, 2, 0.9, 0.1));
  scan.detections.back().box.cz = 0.5;
  const MatchReport r = match_scan(scan, base_config());
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.pairs[0].detection == 0);
  CHECK(r.pairs[0].ground_truth == 0);
  CHECK(r.pairs[0].distance == 0.0);
  CHECK(r.confusion.tn == 1);
}

TEST_CASE("greedy order: the confident detection takes the only GT") {
  // Detections: score 0.9 at 1.5 m, score 0.5 at 0.2 m. Greedy by detector
  // score gives the GT to the 0.9 detection; the 0.5 one is ignored.
  Scan scan;
  scan.scan_id = "s";
  scan.ground_truth.push_back(make_gt({0, 0, 0, 1, 1, 1, 0}, 0, false));
  scan.detections.push_back(det_at(1.5, 0, 0.9, 0.2));
  scan.detections.push_back(det_at(0.2, 0, 0.5, 0.2));
  const MatchReport r = match_scan(scan, base_config());
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.pairs[0].detection == 0);
  CHECK(r.pairs[0].distance == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r.unmatched_detections == std::vector<int>{1});
}

TEST_CASE("detector-score gate discards below delta_thresh") {
  Scan scan;
  scan.scan_id = "s";
  scan.ground_truth.push_back(make_gt({0, 0, 0, 1, 1, 1, 0}, 0, false));
  scan.detections.push_back(det_at(0.1, 0, 0.29, 0.9));
  const MatchReport r = match_scan(scan, base_config());
  CHECK(r.pairs.empty());
  CHECK(r.unmatched_detections.empty());  // discarded, not ignored
  // boundary: score == delta survives
  scan.detections[0].score = 0.3;
  CHECK(match_scan(scan, base_config()).pairs.size() == 1);
}

TEST_CASE("missing ood_score on a survivor throws when confusion requested") {
  Scan scan;
  scan.scan_id = "s";
  scan.ground_truth.push_back(make_gt({0, 0, 0, 1, 1, 1, 0}, 0, false));
  Detection det = make_detection({0, 0, 0, 1, 1, 1, 0}, 0.9, {1.0, 0.0, 0.0});
  scan.detections.push_back(det);  // no ood_score
  CHECK_THROWS_AS(match_scan(scan, base_config()), MissingOodScore);
  CHECK_NOTHROW(match_scan(scan, base_config(), /*with_confusion=*/false));
}

TEST_CASE("scored samples carry the matched GT partition") {
  Scan scan;
  scan.scan_id = "s";
  scan.ground_truth.push_back(make_gt({0, 0, 0, 1, 1, 1, 0}, 3, true));
  scan.ground_truth.push_back(make_gt({5, 0, 0, 1, 1, 1, 0}, 0, false));
  scan.detections.push_back(det_at(0.1, 0, 0.9, 0.8));
  scan.detections.push_back(det_at(5.1, 0, 0.8, 0.2));
  const MatchReport r = match_scan(scan, base_config());
  REQUIRE(r.scored_samples.size() == 2);
  CHECK(r.scored_samples[0].is_open);
  CHECK(r.scored_samples[0].score == 0.8);
  CHECK(!r.scored_samples[1].is_open);
  CHECK(r.confusion.tp == 1);
  CHECK(r.confusion.tn == 1);
  CHECK(r.confusion.tp + r.confusion.fn == r.matched_open);
  CHECK(r.confusion.fp + r.confusion.tn == r.matched_closed);
}

TEST_CASE("matcher equals the step interpreter on randomized scans") {
  Rng rng(404);
  for (int i = 0; i < 300; ++i) {
    const Scan scan = random_match_scan(rng, 6, 6);
    RunConfig cfg = base_config();
    cfg.delta_thresh = rng.uniform_int(0, 2) * 0.25;
    cfg.d_thresh = rng.uniform(0.5, 6.0);
    cfg.sort_mode = rng.bernoulli(0.5) ? SortMode::DetectorScore : SortMode::OodScore;
    cfg.distance_mode = rng.bernoulli(0.5) ? DistanceMode::Euclidean3D : DistanceMode::EuclideanBEV;

    const MatchReport got = match_scan(scan, cfg);
    const InterpreterResult want = algorithm1_interpreter(scan, cfg);
    CHECK(got.pairs == want.pairs);
    CHECK(got.unmatched_detections == want.ignored);
    CHECK(got.unmatched_gts == want.misses);
    CHECK(got.confusion.tp == want.tp);
    CHECK(got.confusion.fp == want.fp);
    CHECK(got.confusion.tn == want.tn);
    CHECK(got.confusion.fn == want.fn);
  }
}

TEST_CASE("one-to-one and determinism on randomized scans") {
  Rng rng(405);
  for (int i = 0; i < 100; ++i) {
    const Scan scan = random_match_scan(rng, 8, 8);
    const RunConfig cfg = base_config();
    const MatchReport a = match_scan(scan, cfg);
    const MatchReport b = match_scan(scan, cfg);
    CHECK(a.pairs == b.pairs);

    std::set<int> dets;
    std::set<int> gts;
    for (const auto& p : a.pairs) {
      CHECK(dets.insert(p.detection).second);
      CHECK(gts.insert(p.ground_truth).second);
      CHECK(p.distance < cfg.d_thresh);
    }
  }
}

TEST_CASE("monotonicity in delta_thresh and d_thresh") {
  Rng rng(406);
  for (int i = 0; i < 60; ++i) {
    const Scan scan = random_match_scan(rng, 8, 6);
    RunConfig cfg = base_config();
    std::size_t prev_pairs = SIZE_MAX;
    for (const double delta : {0.0, 0.25, 0.5, 0.75}) {
      cfg.delta_thresh = delta;
      const std::size_t n = match_scan(scan, cfg).pairs.size();
      CHECK(n <= prev_pairs);
      prev_pairs = n;
    }
    cfg.delta_thresh = 0.25;
    prev_pairs = 0;
    for (const double d : {0.5, 1.0, 2.0, 4.0}) {
      cfg.d_thresh = d;
      const std::size_t n = match_scan(scan, cfg).pairs.size();
      CHECK(n >= prev_pairs);
      prev_pairs = n;
    }
  }
}

TEST_CASE("hit rates over reports") {
  Scan scan;
  scan.scan_id = "s";
  scan.ground_truth.push_back(make_gt({0, 0, 0, 1, 1, 1, 0}, 0, false));
  scan.ground_truth.push_back(make_gt({5, 0, 0, 1, 1, 1, 0}, 3, true));
  scan.detections.push_back(det_at(0, 0, 0.9, 0.2));
  scan.detections.push_back(det_at(5, 0, 0.9, 0.9));

  const MatchReport full = match_scan(scan, base_config());
  const HitRates hr = hit_rates({full});
  CHECK(hr.hits_open == 1.0);
  CHECK(hr.hits_closed == 1.0);

  Scan empty_dets = scan;
  empty_dets.detections.clear();
  const HitRates none = hit_rates({match_scan(empty_dets, base_config())});
  CHECK(none.hits_open == 0.0);
  CHECK(none.hits_closed == 0.0);

  Scan only_closed = scan;
  only_closed.ground_truth.pop_back();
  CHECK_THROWS_AS(hit_rates({match_scan(only_closed, base_config())}), EmptyPartition);
}

TEST_CASE("early exit leaves later survivors unmatched") {
  Scan scan;
  scan.scan_id = "s";
  scan.ground_truth.push_back(make_gt({0, 0, 0, 1, 1, 1, 0}, 0, false));
  for (int i = 0; i < 4; ++i) {
    scan.detections.push_back(det_at(0.1 * i, 0, 0.9 - 0.1 * i, 0.1));
  }
  const MatchReport r = match_scan(scan, base_config());
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.pairs[0].detection == 0);
  CHECK(r.unmatched_detections == std::vector<int>{1, 2, 3});
}

TEST_CASE("equidistant GTs resolve to the lowest index") {
  Scan scan;
  scan.scan_id = "s";
  scan.ground_truth.push_back(make_gt({1, 0, 0, 1, 1, 1, 0}, 0, false));
  scan.ground_truth.push_back(make_gt({-1, 0, 0, 1, 1, 1, 0}, 0, false));
  scan.detections.push_back(det_at(0, 0, 0.9, 0.1));
  const MatchReport r = match_scan(scan, base_config());
  REQUIRE(r.pairs.size() == 1);
  CHECK(r.pairs[0].ground_truth == 0);
}

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pcfpr/eval.hpp"
#include "pcfpr/rng.hpp"
#include "support/oracles.hpp"
#include "support/test_util.hpp"

using namespace pcfpr;

namespace {

Truth truth_at(std::string scan, double x, double diam) {
  Truth t;
  t.scan_id = std::move(scan);
  t.center_mm = {x, 0, 0};
  t.diameter_mm = diam;
  return t;
}

ScoredCandidate cand_at(std::string scan, double x, double score) {
  ScoredCandidate c;
  c.scan_id = std::move(scan);
  c.center_mm = {x, 0, 0};
  c.score = score;
  return c;
}

struct Instance {
  std::vector<Truth> truths;
  std::vector<ScoredCandidate> cands;
  int n_scans = 1;
};

Instance random_instance(std::uint64_t seed) {
  auto rng = make_rng(seed);
  Instance ins;
  ins.n_scans = 1 + static_cast<int>(uniform_index(rng, 5));
  for (int s = 0; s < ins.n_scans; ++s) {
    const std::string scan = "scan_" + std::to_string(s);
    const int nt = static_cast<int>(uniform_index(rng, 7));
    for (int t = 0; t < nt; ++t) {
      Truth tr;
      tr.scan_id = scan;
      tr.center_mm = {uniform_range(rng, 0, 100), uniform_range(rng, 0, 100),
                      uniform_range(rng, 0, 100)};
      tr.diameter_mm = uniform_range(rng, 2.0, 10.0);
      ins.truths.push_back(tr);
    }
  }
  // Guarantee at least one counted truth.
  if (ins.truths.empty() || std::none_of(ins.truths.begin(), ins.truths.end(),
                                         [](const Truth& t) { return t.diameter_mm > 3.0; })) {
    Truth tr;
    tr.scan_id = "scan_0";
    tr.center_mm = {50, 50, 50};
    tr.diameter_mm = 6.0;
    ins.truths.push_back(tr);
  }

  const bool quantize = (seed % 2) == 0;  // force score ties half the time
  const int nc = 1 + static_cast<int>(uniform_index(rng, 20));
  for (int c = 0; c < nc; ++c) {
    ScoredCandidate sc;
    sc.scan_id = "scan_" + std::to_string(uniform_index(rng, static_cast<std::size_t>(ins.n_scans)));
    if (!ins.truths.empty() && uniform_unit(rng) < 0.5) {
      const Truth& t = ins.truths[uniform_index(rng, ins.truths.size())];
      sc.scan_id = t.scan_id;
      sc.center_mm = t.center_mm;
      sc.center_mm.x += uniform_range(rng, -t.diameter_mm, t.diameter_mm) / 3.0;
    } else {
      sc.center_mm = {uniform_range(rng, 0, 100), uniform_range(rng, 0, 100),
                      uniform_range(rng, 0, 100)};
    }
    double score = uniform_unit(rng);
    if (quantize) score = std::round(score * 10.0) / 10.0;
    sc.score = score;
    ins.cands.push_back(sc);
  }
  return ins;
}

}  // namespace

TEST_CASE("a candidate inside the truth radius is a hit, outside is not") {
  const std::vector<Truth> truths = {truth_at("s0", 50.0, 8.0)};
  {
    const auto m = match_candidates({cand_at("s0", 50.0, 0.9)}, truths);
    REQUIRE(m.n_truths == 1);
    CHECK(m.labeled[0].role == MatchRole::hit);
    CHECK(m.labeled[0].truth_index == 0);
  }
  {
    const auto m = match_candidates({cand_at("s0", 54.0, 0.9)}, truths);  // exactly r
    CHECK(m.labeled[0].role == MatchRole::hit);
  }
  {
    const auto m = match_candidates({cand_at("s0", 54.01, 0.9)}, truths);  // just past r
    CHECK(m.labeled[0].role == MatchRole::fp);
  }
}

TEST_CASE("each truth is claimed once; extra hits are ignored, not penalized") {
  const std::vector<Truth> truths = {truth_at("s0", 50.0, 8.0)};
  const auto m = match_candidates(
      {cand_at("s0", 51.0, 0.6), cand_at("s0", 50.0, 0.9), cand_at("s0", 49.0, 0.3)}, truths);
  // Highest score claims the truth even though it is listed second.
  CHECK(m.labeled[1].role == MatchRole::hit);
  CHECK(m.labeled[0].role == MatchRole::ignored_dup);
  CHECK(m.labeled[2].role == MatchRole::ignored_dup);
}

TEST_CASE("small truths are not targets and hits on them count as fp") {
  const std::vector<Truth> truths = {truth_at("s0", 50.0, 3.0), truth_at("s0", 80.0, 6.0)};
  const auto m =
      match_candidates({cand_at("s0", 50.0, 0.9), cand_at("s0", 80.0, 0.8)}, truths, 3.0);
  REQUIRE(m.n_truths == 1);  // only the 6 mm truth counts
  CHECK(m.labeled[0].role == MatchRole::fp);
  CHECK(m.labeled[1].role == MatchRole::hit);
}

TEST_CASE("matching never crosses scans") {
  const std::vector<Truth> truths = {truth_at("s0", 50.0, 8.0)};
  const auto m = match_candidates({cand_at("s1", 50.0, 0.9)}, truths);
  CHECK(m.labeled[0].role == MatchRole::fp);
}

TEST_CASE("a candidate between truths claims the nearer free one") {
  const std::vector<Truth> truths = {truth_at("s0", 50.0, 20.0), truth_at("s0", 58.0, 20.0)};
  const auto m = match_candidates({cand_at("s0", 55.0, 0.9)}, truths);
  CHECK(m.labeled[0].role == MatchRole::hit);
  CHECK(m.labeled[0].truth_index == 1);  // distance 3 beats distance 5
}

TEST_CASE("score ties at matching resolve by candidate order") {
  const std::vector<Truth> truths = {truth_at("s0", 50.0, 8.0)};
  const auto m =
      match_candidates({cand_at("s0", 50.5, 0.7), cand_at("s0", 50.0, 0.7)}, truths);
  CHECK(m.labeled[0].role == MatchRole::hit);
  CHECK(m.labeled[1].role == MatchRole::ignored_dup);
}

TEST_CASE("one perfect hit saturates the whole curve") {
  const std::vector<Truth> truths = {truth_at("s0", 50.0, 8.0)};
  const auto m = match_candidates({cand_at("s0", 50.0, 0.9)}, truths);
  const FrocReport rep = froc(m, 1);
  for (double s : rep.sens_at) CHECK(s == 1.0);
  CHECK(rep.mean_sens == 1.0);
  CHECK(froc_row(rep) == "1.000 1.000 1.000 1.000 1.000 1.000 1.000 | 1.000");
}

TEST_CASE("froc agrees with brute-force threshold enumeration") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const Instance ins = random_instance(seed);
    const MatchResult m = match_candidates(ins.cands, ins.truths);
    if (m.n_truths == 0) continue;
    const FrocReport rep = froc(m, ins.n_scans);
    const testref::FrocRef ref = testref::froc_by_enumeration(m.labeled, ins.n_scans, m.n_truths);

    REQUIRE(rep.curve.size() == ref.curve.size());
    for (std::size_t i = 0; i < ref.curve.size(); ++i) {
      REQUIRE(rep.curve[i].fp_per_scan == Catch::Approx(ref.curve[i].first).margin(1e-12));
      REQUIRE(rep.curve[i].sensitivity == Catch::Approx(ref.curve[i].second).margin(1e-12));
    }
    for (std::size_t li = 0; li < kFpLevels.size(); ++li)
      REQUIRE(rep.sens_at[li] == Catch::Approx(ref.sens_at[li]).margin(1e-12));
    REQUIRE(rep.mean_sens == Catch::Approx(ref.mean_sens).margin(1e-12));
  }
}

TEST_CASE("the curve is monotone in both axes") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const Instance ins = random_instance(seed);
    const MatchResult m = match_candidates(ins.cands, ins.truths);
    if (m.n_truths == 0) continue;
    const FrocReport rep = froc(m, ins.n_scans);
    for (std::size_t i = 1; i < rep.curve.size(); ++i) {
      REQUIRE(rep.curve[i].fp_per_scan > rep.curve[i - 1].fp_per_scan);
      REQUIRE(rep.curve[i].sensitivity >= rep.curve[i - 1].sensitivity);
    }
    for (std::size_t li = 1; li < kFpLevels.size(); ++li)
      REQUIRE(rep.sens_at[li] >= rep.sens_at[li - 1]);
  }
}

TEST_CASE("any strictly monotone rescaling of scores leaves froc unchanged") {
  for (std::uint64_t seed = 200; seed < 215; ++seed) {
    Instance ins = random_instance(seed);
    const MatchResult m1 = match_candidates(ins.cands, ins.truths);
    if (m1.n_truths == 0) continue;
    const FrocReport a = froc(m1, ins.n_scans);

    for (auto& c : ins.cands) c.score = c.score / (1.0 + c.score);  // order preserving
    const MatchResult m2 = match_candidates(ins.cands, ins.truths);
    const FrocReport b = froc(m2, ins.n_scans);

    REQUIRE(a.curve.size() == b.curve.size());
    for (std::size_t i = 0; i < a.curve.size(); ++i) {
      REQUIRE(a.curve[i].fp_per_scan == b.curve[i].fp_per_scan);
      REQUIRE(a.curve[i].sensitivity == b.curve[i].sensitivity);
    }
    REQUIRE(a.mean_sens == b.mean_sens);
  }
}

TEST_CASE("sub-threshold fp rates clamp sensitivity to zero, high rates saturate") {
  // Two scans, one truth, one hit plus one lower-scored fp: the curve is
  // {(0, 1), (0.5, 1)}; levels 0.125 and 0.25 sit inside, 0.5 and up clamp.
  const std::vector<Truth> truths = {truth_at("s0", 50.0, 8.0)};
  const auto m = match_candidates(
      {cand_at("s0", 50.0, 0.9), cand_at("s1", 10.0, 0.4)}, truths);
  const FrocReport rep = froc(m, 2);
  REQUIRE(rep.curve.size() == 2);
  CHECK(rep.curve[0].fp_per_scan == 0.0);
  CHECK(rep.curve[0].sensitivity == 1.0);
  CHECK(rep.curve[1].fp_per_scan == 0.5);
  CHECK(rep.curve[1].sensitivity == 1.0);
  for (double s : rep.sens_at) CHECK(s == 1.0);

  // Flip the order: the fp outranks the hit, and the two sweep points share
  // fp = 0.5, so they collapse into one keeping the better sensitivity.
  const auto m2 = match_candidates(
      {cand_at("s0", 50.0, 0.3), cand_at("s1", 10.0, 0.8)}, truths);
  const FrocReport rep2 = froc(m2, 2);
  REQUIRE(rep2.curve.size() == 1);
  CHECK(rep2.curve[0].fp_per_scan == 0.5);
  CHECK(rep2.curve[0].sensitivity == 1.0);
  CHECK(rep2.sens_at[0] == 0.0);  // 0.125 fp/scan is left of the curve
  CHECK(rep2.sens_at[1] == 0.0);  // 0.25 as well
  CHECK(rep2.sens_at[2] == 1.0);  // 0.5 reaches the collapsed point
  CHECK(rep2.sens_at[6] == 1.0);
  CHECK(rep2.mean_sens == Catch::Approx(5.0 / 7.0).margin(1e-12));
}

TEST_CASE("report formatting is fixed width") {
  FrocReport rep;
  rep.sens_at = {0.125, 0.25, 0.5, 0.625, 0.75, 0.875, 1.0};
  rep.mean_sens = 0.589285714285714;
  CHECK(froc_row(rep) == "0.125 0.250 0.500 0.625 0.750 0.875 1.000 | 0.589");
}

TEST_CASE("froc requires truths and scans") {
  const std::vector<Truth> small = {truth_at("s0", 50.0, 2.0)};
  const auto m = match_candidates({cand_at("s0", 50.0, 0.9)}, small);
  CHECK(m.n_truths == 0);
  CHECK(testutil::thrown_code([&] { froc(m, 1); }) == Errc::no_truths);

  const std::vector<Truth> ok = {truth_at("s0", 50.0, 8.0)};
  const auto m2 = match_candidates({cand_at("s0", 50.0, 0.9)}, ok);
  CHECK(testutil::thrown_code([&] { froc(m2, 0); }) == Errc::bad_config);
}

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

#include "pcfpr/errors.hpp"
#include "pcfpr/geom.hpp"

namespace pcfpr {

struct Truth {
  std::string scan_id;
  Vec3 center_mm{};
  double diameter_mm = 0.0;
};

struct ScoredCandidate {
  std::string scan_id;
  Vec3 center_mm{};
  double score = 0.0;
};

// hit: claims a truth. ignored_dup: lands on an already-claimed truth, counts
// as neither TP nor FP. fp: everything else, including hits on sub-threshold
// truths, which are treated as negatives.
enum class MatchRole { hit, ignored_dup, fp };

struct MatchedCandidate {
  ScoredCandidate cand;
  MatchRole role = MatchRole::fp;
  int truth_index = -1;
};

struct MatchResult {
  std::vector<MatchedCandidate> labeled;  // input order preserved
  int n_truths = 0;                       // truths above the size threshold
};

// Center-within-truth-radius matching; the highest-score hit claims each
// truth; truths with diameter <= small_diameter_mm never count as targets.
inline MatchResult match_candidates(const std::vector<ScoredCandidate>& cands,
                                    const std::vector<Truth>& truths,
                                    double small_diameter_mm = 3.0) {
  MatchResult res;
  res.labeled.resize(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) res.labeled[i].cand = cands[i];

  std::vector<int> counted;  // indices of truths large enough to count
  for (std::size_t t = 0; t < truths.size(); ++t)
    if (truths[t].diameter_mm > small_diameter_mm) counted.push_back(static_cast<int>(t));
  res.n_truths = static_cast<int>(counted.size());

  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cands[a].score != cands[b].score) return cands[a].score > cands[b].score;
    return a < b;
  });

  std::vector<bool> claimed(truths.size(), false);
  for (std::size_t oi : order) {
    const ScoredCandidate& c = cands[oi];
    int best_free = -1, best_claimed = -1;
    double best_free_d = 0.0, best_claimed_d = 0.0;
    for (int t : counted) {
      if (truths[static_cast<std::size_t>(t)].scan_id != c.scan_id) continue;
      const double d = (c.center_mm - truths[static_cast<std::size_t>(t)].center_mm).norm();
      if (d > truths[static_cast<std::size_t>(t)].diameter_mm / 2.0) continue;
      if (!claimed[static_cast<std::size_t>(t)]) {
        if (best_free < 0 || d < best_free_d) {
          best_free = t;
          best_free_d = d;
        }
      } else if (best_claimed < 0 || d < best_claimed_d) {
        best_claimed = t;
        best_claimed_d = d;
      }
    }
    MatchedCandidate& out = res.labeled[oi];
    if (best_free >= 0) {
      claimed[static_cast<std::size_t>(best_free)] = true;
      out.role = MatchRole::hit;
      out.truth_index = best_free;
    } else if (best_claimed >= 0) {
      out.role = MatchRole::ignored_dup;
      out.truth_index = best_claimed;
    } else {
      out.role = MatchRole::fp;
    }
  }
  return res;
}

inline constexpr std::array<double, 7> kFpLevels = {0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};

struct FrocPoint {
  double fp_per_scan = 0.0;
  double sensitivity = 0.0;
};

struct FrocReport {
  std::vector<FrocPoint> curve;       // sorted by fp_per_scan ascending
  std::array<double, 7> sens_at{};    // at kFpLevels
  double mean_sens = 0.0;
};

// Threshold sweep over the distinct scores of counted candidates; duplicate
// hits are excluded entirely. Points sharing an fp value collapse to the
// highest sensitivity. sens_at uses linear interpolation on the curve, zero
// below its leftmost point, flat extension beyond its rightmost.
inline FrocReport froc(const MatchResult& matched, int n_scans) {
  require(n_scans >= 1, Errc::bad_config, "froc: n_scans must be >= 1");
  require(matched.n_truths >= 1, Errc::no_truths, "froc: no truths above the size threshold");

  std::vector<std::pair<double, bool>> scored;  // (score, is_hit)
  for (const MatchedCandidate& mc : matched.labeled) {
    if (mc.role == MatchRole::ignored_dup) continue;
    scored.emplace_back(mc.cand.score, mc.role == MatchRole::hit);
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  FrocReport rep;
  std::size_t i = 0;
  int hits = 0, fps = 0;
  while (i < scored.size()) {
    const double s = scored[i].first;
    for (; i < scored.size() && scored[i].first == s; ++i) (scored[i].second ? hits : fps)++;
    const double fp_rate = static_cast<double>(fps) / n_scans;
    const double sens = static_cast<double>(hits) / matched.n_truths;
    if (!rep.curve.empty() && rep.curve.back().fp_per_scan == fp_rate)
      rep.curve.back().sensitivity = std::max(rep.curve.back().sensitivity, sens);
    else
      rep.curve.push_back({fp_rate, sens});
  }

  for (std::size_t li = 0; li < kFpLevels.size(); ++li) {
    const double level = kFpLevels[li];
    double s = 0.0;
    if (!rep.curve.empty()) {
      if (level < rep.curve.front().fp_per_scan) {
        s = 0.0;
      } else if (level >= rep.curve.back().fp_per_scan) {
        s = rep.curve.back().sensitivity;
      } else {
        for (std::size_t k = 0; k + 1 < rep.curve.size(); ++k) {
          const FrocPoint& a = rep.curve[k];
          const FrocPoint& b = rep.curve[k + 1];
          if (level >= a.fp_per_scan && level < b.fp_per_scan) {
            const double t = (level - a.fp_per_scan) / (b.fp_per_scan - a.fp_per_scan);
            s = a.sensitivity + t * (b.sensitivity - a.sensitivity);
            break;
          }
        }
      }
    }
    rep.sens_at[li] = s;
  }
  rep.mean_sens = std::accumulate(rep.sens_at.begin(), rep.sens_at.end(), 0.0) / 7.0;
  return rep;
}

// Seven sensitivities then the mean, e.g.
// "0.545 0.679 0.842 0.971 0.990 0.995 0.995 | 0.859".
inline std::string froc_row(const FrocReport& rep) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%.3f %.3f %.3f %.3f %.3f %.3f %.3f | %.3f", rep.sens_at[0],
                rep.sens_at[1], rep.sens_at[2], rep.sens_at[3], rep.sens_at[4], rep.sens_at[5],
                rep.sens_at[6], rep.mean_sens);
  return buf;
}

}  // namespace pcfpr

#pragma once

// Slow reference implementations used only by tests. Each favors the most
// literal formulation over speed, so a disagreement points at the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "pcfpr/eval.hpp"
#include "pcfpr/linalg.hpp"

namespace testref {

struct FrocRef {
  std::vector<std::pair<double, double>> curve;  // (fp_per_scan, sensitivity)
  std::array<double, 7> sens_at{};
  double mean_sens = 0.0;
};

// Direct threshold sweep: for every distinct score, count surviving hits and
// false positives, then keep the best sensitivity per false-positive rate.
inline FrocRef froc_by_enumeration(const std::vector<pcfpr::MatchedCandidate>& labeled,
                                   int n_scans, int n_truths) {
  std::vector<double> thresholds;
  for (const auto& c : labeled)
    if (c.role != pcfpr::MatchRole::ignored_dup) thresholds.push_back(c.cand.score);
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::map<double, double> best_sens_at_fp;
  for (double th : thresholds) {
    std::size_t hits = 0, fps = 0;
    for (const auto& c : labeled) {
      if (c.cand.score < th) continue;
      if (c.role == pcfpr::MatchRole::hit) ++hits;
      if (c.role == pcfpr::MatchRole::fp) ++fps;
    }
    const double sens = static_cast<double>(hits) / n_truths;
    const double fp_rate = static_cast<double>(fps) / n_scans;
    auto [it, fresh] = best_sens_at_fp.emplace(fp_rate, sens);
    if (!fresh && sens > it->second) it->second = sens;
  }

  FrocRef out;
  for (const auto& [fp, sens] : best_sens_at_fp) out.curve.emplace_back(fp, sens);

  for (std::size_t li = 0; li < pcfpr::kFpLevels.size(); ++li) {
    const double level = pcfpr::kFpLevels[li];
    double s = 0.0;
    if (!out.curve.empty()) {
      if (level < out.curve.front().first) {
        s = 0.0;
      } else if (level >= out.curve.back().first) {
        s = out.curve.back().second;
      } else {
        for (std::size_t i = 0; i + 1 < out.curve.size(); ++i) {
          const auto [fa, sa] = out.curve[i];
          const auto [fb, sb] = out.curve[i + 1];
          if (level >= fa && level < fb) {
            s = sa + (sb - sa) * (level - fa) / (fb - fa);
            break;
          }
        }
      }
    }
    out.sens_at[li] = s;
  }
  double total = 0.0;
  for (double s : out.sens_at) total += s;
  out.mean_sens = total / static_cast<double>(out.sens_at.size());
  return out;
}

// k nearest neighbors by fully sorting all pairwise distances.
template <class T>
std::vector<std::vector<int>> knn_by_full_sort(const pcfpr::Mat<T>& x, int k) {
  const std::size_t m = x.rows;
  std::vector<std::vector<int>> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<std::pair<double, int>> order;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (std::size_t c = 0; c < x.cols; ++c) {
        const double d = static_cast<double>(x(i, c)) - static_cast<double>(x(j, c));
        d2 += d * d;
      }
      order.emplace_back(d2, static_cast<int>(j));
    }
    std::sort(order.begin(), order.end());
    for (int n = 0; n < k; ++n) out[i].push_back(order[static_cast<std::size_t>(n)].second);
  }
  return out;
}

}  // namespace testref

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pcfpr/cloud.hpp"
#include "pcfpr/rng.hpp"

namespace pcfpr {

struct SamplerConfig {
  int m = 2048;             // fixed output size
  int mask_quota = -1;      // guaranteed mask points; -1 = min(mask count, m/8)
  double sigma_ratio = 0.5; // sigma = sigma_ratio * candidate radius
  std::int64_t max_draws = -1; // rejection-loop cap; -1 = 200 * m
  std::uint64_t seed = 0;

  std::int64_t resolved_max_draws() const {
    return max_draws >= 0 ? max_draws : 200LL * m;
  }
  int resolved_quota(std::size_t mask_count) const {
    const int q = mask_quota >= 0 ? mask_quota : std::max(1, m / 8);
    return std::min<int>(q, static_cast<int>(std::min<std::size_t>(mask_count, static_cast<std::size_t>(m))));
  }
};

inline void validate_sampler(const SamplerConfig& cfg) {
  require(cfg.m > 0, Errc::bad_config, "sampler: m must be > 0");
  require(cfg.sigma_ratio > 0.0, Errc::bad_config, "sampler: sigma_ratio must be > 0");
  require(cfg.mask_quota <= cfg.m, Errc::bad_config, "sampler: mask_quota must be <= m");
  require(cfg.resolved_max_draws() >= cfg.m, Errc::bad_config,
          "sampler: max_draws must be >= m");
}

// Gaussian radial weight in (0, 1].
inline double rbf_weight(const Vec3& x, const Vec3& center, double sigma) {
  const double d2 = (x - center).norm2();
  return std::exp(-d2 / (2.0 * sigma * sigma));
}

struct McSample {
  std::vector<CloudPoint> points;
  std::int64_t draws = 0;
  bool budget_exhausted = false;
};

// Rejection sampling: draw a point uniformly with replacement, draw
// tau ~ U(0,1), keep the point iff its radial weight beats tau. Points near
// the candidate center are kept almost always, distant ones rarely.
inline McSample mc_rbf_sample(const PointCloud& cloud, const SamplerConfig& cfg,
                              std::mt19937_64& rng) {
  validate_sampler(cfg);
  require(!cloud.points.empty(), Errc::too_few_points, "mc_rbf_sample: empty cloud");
  const double sigma = cfg.sigma_ratio * cloud.r_mm;
  require(sigma > 0.0, Errc::bad_config, "mc_rbf_sample: nonpositive sigma (r_mm not set?)");

  const std::int64_t budget = cfg.resolved_max_draws();
  McSample out;
  out.points.reserve(static_cast<std::size_t>(cfg.m));
  while (static_cast<int>(out.points.size()) < cfg.m && out.draws < budget) {
    const CloudPoint& pt = cloud.points[uniform_index(rng, cloud.points.size())];
    ++out.draws;
    const double tau = uniform_unit(rng);
    const double w = rbf_weight(Vec3{pt.x, pt.y, pt.z}, Vec3{}, sigma);
    if (w > tau) out.points.push_back(pt);
  }
  out.budget_exhausted = static_cast<int>(out.points.size()) < cfg.m;
  return out;
}

// k uniform-with-replacement draws restricted to mask points.
inline std::vector<CloudPoint> mask_uniform_sample(const PointCloud& cloud, int k,
                                                   std::mt19937_64& rng) {
  require(k >= 0, Errc::bad_config, "mask_uniform_sample: negative k");
  std::vector<std::size_t> mask_idx;
  for (std::size_t i = 0; i < cloud.points.size(); ++i)
    if (cloud.points[i].is_mask) mask_idx.push_back(i);
  require(!mask_idx.empty(), Errc::no_mask_points, "mask_uniform_sample: cloud has no mask points");

  std::vector<CloudPoint> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) out.push_back(cloud.points[mask_idx[uniform_index(rng, mask_idx.size())]]);
  return out;
}

struct SampleStats {
  int mask_quota = 0;
  std::int64_t draws = 0;
  bool budget_exhausted = false;
  int uniform_fill = 0;
};

// Fixed-size candidate cloud: a guaranteed quota of mask points, the rest by
// RBF rejection sampling, any shortfall topped up uniformly, order shuffled.
inline PointCloud sample_candidate(const PointCloud& cloud, const SamplerConfig& cfg,
                                   std::mt19937_64& rng, SampleStats* stats = nullptr) {
  validate_sampler(cfg);
  require(!cloud.points.empty(), Errc::too_few_points, "sample_candidate: empty cloud");

  std::size_t mask_count = 0;
  for (const CloudPoint& pt : cloud.points)
    if (pt.is_mask) ++mask_count;
  require(mask_count > 0, Errc::no_mask_points, "sample_candidate: cloud has no mask points");

  const int quota = cfg.resolved_quota(mask_count);
  std::vector<CloudPoint> picked = mask_uniform_sample(cloud, quota, rng);

  SamplerConfig mc_cfg = cfg;
  mc_cfg.m = cfg.m - quota;
  McSample mc;
  if (mc_cfg.m > 0) {
    mc_cfg.max_draws = cfg.resolved_max_draws();
    mc = mc_rbf_sample(cloud, mc_cfg, rng);
    picked.insert(picked.end(), mc.points.begin(), mc.points.end());
  }

  const int fill = cfg.m - static_cast<int>(picked.size());
  for (int i = 0; i < fill; ++i)
    picked.push_back(cloud.points[uniform_index(rng, cloud.points.size())]);

  // Fisher-Yates with our own index draws, for a portable byte-stable order.
  for (std::size_t i = picked.size(); i > 1; --i)
    std::swap(picked[i - 1], picked[uniform_index(rng, i)]);

  if (stats) {
    stats->mask_quota = quota;
    stats->draws = mc.draws;
    stats->budget_exhausted = mc.budget_exhausted;
    stats->uniform_fill = std::max(0, fill);
  }

  PointCloud out;
  out.points = std::move(picked);
  out.candidate_ref = cloud.candidate_ref;
  out.r_mm = cloud.r_mm;
  return out;
}

// Plain uniform-with-replacement baseline (no mask guarantee, no weighting).
inline PointCloud uniform_sample(const PointCloud& cloud, int m, std::mt19937_64& rng) {
  require(m > 0, Errc::bad_config, "uniform_sample: m must be > 0");
  require(!cloud.points.empty(), Errc::too_few_points, "uniform_sample: empty cloud");
  PointCloud out;
  out.points.reserve(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i)
    out.points.push_back(cloud.points[uniform_index(rng, cloud.points.size())]);
  out.candidate_ref = cloud.candidate_ref;
  out.r_mm = cloud.r_mm;
  return out;
}

}  // namespace pcfpr

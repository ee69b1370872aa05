#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pcfpr/cloud.hpp"
#include "pcfpr/rng.hpp"

// Synthetic chest-like scenes: an air slab and a planar pleural wall at the
// low-x face, parenchyma fill, capped-cylinder vessels, and spherical nodules
// (optionally subpleural, i.e. tangent to the wall). Plus a parametric
// detector stub that turns generator truth into candidate masks with
// probabilities, including false-positive fragments on in-band structures.

namespace pcfpr {

struct PhantomConfig {
  Dims dims{96, 96, 72};
  Spacing spacing{1.0, 1.0, 1.0};

  int nodule_count_lo = 1, nodule_count_hi = 3;
  double nodule_diam_lo = 3.5, nodule_diam_hi = 7.5;  // mm
  double nodule_hu_lo = -100.0, nodule_hu_hi = 100.0;
  double subpleural_fraction = 0.5;

  int vessel_count_lo = 5, vessel_count_hi = 9;
  double vessel_radius_lo = 0.7, vessel_radius_hi = 2.2;  // mm
  double vessel_hu_lo = -100.0, vessel_hu_hi = 100.0;

  double air_mm = 2.0;       // air slab thickness at x < air_mm
  double wall_mm = 3.0;      // pleural wall thickness
  double wall_hu = 20.0;
  double air_hu = -1000.0;
  double parenchyma_hu = -850.0;

  double edge_pad_mm = 2.0;  // keep nodules away from the remaining faces
};

inline void validate_phantom(const PhantomConfig& cfg) {
  require(cfg.dims.nx >= 1 && cfg.dims.ny >= 1 && cfg.dims.nz >= 1, Errc::bad_config,
          "phantom: dims must be >= 1");
  require(cfg.nodule_count_lo >= 0 && cfg.nodule_count_lo <= cfg.nodule_count_hi,
          Errc::bad_config, "phantom: bad nodule count range");
  require(cfg.nodule_diam_lo > 0 && cfg.nodule_diam_lo <= cfg.nodule_diam_hi, Errc::bad_config,
          "phantom: bad nodule diameter range");
  require(cfg.vessel_count_lo >= 0 && cfg.vessel_count_lo <= cfg.vessel_count_hi,
          Errc::bad_config, "phantom: bad vessel count range");
  require(cfg.vessel_radius_lo > 0 && cfg.vessel_radius_lo <= cfg.vessel_radius_hi,
          Errc::bad_config, "phantom: bad vessel radius range");
  require(cfg.subpleural_fraction >= 0.0 && cfg.subpleural_fraction <= 1.0, Errc::bad_config,
          "phantom: subpleural_fraction must be in [0,1]");
  require(cfg.air_mm >= 0.0 && cfg.wall_mm >= 0.0, Errc::bad_config,
          "phantom: slab thicknesses must be >= 0");
}

struct TruthNodule {
  Vec3 center_mm{};
  double diameter_mm = 0.0;
  double hu = 0.0;
  bool subpleural = false;
};

struct PhantomScene {
  Volume volume;
  std::vector<TruthNodule> truths;
};

namespace detail {

inline std::int16_t hu16(double v) {
  return static_cast<std::int16_t>(std::clamp<long>(std::lround(v), -32768L, 32767L));
}

// Paint a sphere, never crossing into the wall/air slabs (x < min_x).
inline void paint_sphere(Volume& v, const Vec3& c, double r, double hu, double min_x) {
  const double s[3] = {v.spacing.sx, v.spacing.sy, v.spacing.sz};
  int lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(0, static_cast<int>(std::floor((c[a] - r) / s[a] - 0.5)));
    hi[a] = std::min(v.dims[a] - 1, static_cast<int>(std::ceil((c[a] + r) / s[a] - 0.5)));
  }
  const std::int16_t val = hu16(hu);
  for (int iz = lo[2]; iz <= hi[2]; ++iz)
    for (int iy = lo[1]; iy <= hi[1]; ++iy)
      for (int ix = lo[0]; ix <= hi[0]; ++ix) {
        const Vec3 p = v.voxel_center(ix, iy, iz);
        if (p.x < min_x) continue;
        if ((p - c).norm2() <= r * r) v.at(ix, iy, iz) = val;
      }
}

// Paint a capped cylinder (segment p0-p1 with radius rho), clipped to x >= min_x.
inline void paint_cylinder(Volume& v, const Vec3& p0, const Vec3& p1, double rho, double hu,
                           double min_x) {
  const double s[3] = {v.spacing.sx, v.spacing.sy, v.spacing.sz};
  int lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    const double mn = std::min(p0[a], p1[a]) - rho;
    const double mx = std::max(p0[a], p1[a]) + rho;
    lo[a] = std::max(0, static_cast<int>(std::floor(mn / s[a] - 0.5)));
    hi[a] = std::min(v.dims[a] - 1, static_cast<int>(std::ceil(mx / s[a] - 0.5)));
  }
  const Vec3 d = p1 - p0;
  const double len2 = d.norm2();
  const std::int16_t val = hu16(hu);
  for (int iz = lo[2]; iz <= hi[2]; ++iz)
    for (int iy = lo[1]; iy <= hi[1]; ++iy)
      for (int ix = lo[0]; ix <= hi[0]; ++ix) {
        const Vec3 p = v.voxel_center(ix, iy, iz);
        if (p.x < min_x) continue;
        double t = len2 > 0.0 ? std::clamp((p - p0).dot(d) / len2, 0.0, 1.0) : 0.0;
        const Vec3 q = p0 + d * t;
        if ((p - q).norm2() <= rho * rho) v.at(ix, iy, iz) = val;
      }
}

inline Vec3 random_unit_vector(std::mt19937_64& rng) {
  for (;;) {
    const Vec3 v{normal_unit(rng), normal_unit(rng), normal_unit(rng)};
    const double n = v.norm();
    if (n > 1e-6) return v / n;
  }
}

}  // namespace detail

inline MaskVolume sphere_mask(const Dims& dims, const Spacing& spacing, const Vec3& c,
                              double r) {
  MaskVolume m;
  m.dims = dims;
  m.spacing = spacing;
  m.data.assign(static_cast<std::size_t>(dims.count()), 0);
  const double s[3] = {spacing.sx, spacing.sy, spacing.sz};
  int lo[3], hi[3];
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max(0, static_cast<int>(std::floor((c[a] - r) / s[a] - 0.5)));
    hi[a] = std::min(dims[a] - 1, static_cast<int>(std::ceil((c[a] + r) / s[a] - 0.5)));
  }
  for (int iz = lo[2]; iz <= hi[2]; ++iz)
    for (int iy = lo[1]; iy <= hi[1]; ++iy)
      for (int ix = lo[0]; ix <= hi[0]; ++ix)
        if ((m.voxel_center(ix, iy, iz) - c).norm2() <= r * r) m.at(ix, iy, iz) = 1;
  return m;
}

inline PhantomScene gen_phantom(const PhantomConfig& cfg, std::mt19937_64& rng) {
  validate_phantom(cfg);
  PhantomScene scene;
  Volume& v = scene.volume;
  v.dims = cfg.dims;
  v.spacing = cfg.spacing;
  v.data.assign(static_cast<std::size_t>(cfg.dims.count()), detail::hu16(cfg.parenchyma_hu));

  const Vec3 ext = v.extent_mm();
  const double wall_end = cfg.air_mm + cfg.wall_mm;
  for (int iz = 0; iz < v.dims.nz; ++iz)
    for (int iy = 0; iy < v.dims.ny; ++iy)
      for (int ix = 0; ix < v.dims.nx; ++ix) {
        const double x = v.voxel_center(ix, iy, iz).x;
        if (x < cfg.air_mm)
          v.at(ix, iy, iz) = detail::hu16(cfg.air_hu);
        else if (x < wall_end)
          v.at(ix, iy, iz) = detail::hu16(cfg.wall_hu);
      }

  // Plan nodules first so vessels can be painted underneath them.
  const int n_nodules =
      cfg.nodule_count_lo +
      static_cast<int>(uniform_index(
          rng, static_cast<std::size_t>(cfg.nodule_count_hi - cfg.nodule_count_lo + 1)));
  for (int i = 0; i < n_nodules; ++i) {
    const double diam = uniform_range(rng, cfg.nodule_diam_lo, cfg.nodule_diam_hi);
    const double r = diam / 2.0;
    const double hu = uniform_range(rng, cfg.nodule_hu_lo, cfg.nodule_hu_hi);
    const bool subpleural = uniform_unit(rng) < cfg.subpleural_fraction;

    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      Vec3 c;
      const double pad = r + cfg.edge_pad_mm;
      if (ext.y <= 2 * pad || ext.z <= 2 * pad) break;
      c.y = uniform_range(rng, pad, ext.y - pad);
      c.z = uniform_range(rng, pad, ext.z - pad);
      if (subpleural) {
        c.x = wall_end + r;  // tangent to the wall face
      } else {
        const double x_lo = wall_end + r + 2.0, x_hi = ext.x - pad;
        if (x_hi <= x_lo) break;
        c.x = uniform_range(rng, x_lo, x_hi);
      }
      if (c.x + r > ext.x) continue;
      bool clear = true;
      for (const TruthNodule& t : scene.truths)
        if ((c - t.center_mm).norm() < r + t.diameter_mm / 2.0 + 2.0) clear = false;
      if (!clear) continue;
      scene.truths.push_back({c, diam, hu, subpleural});
      placed = true;
    }
    require(placed, Errc::placement_failure,
            "gen_phantom: could not place nodule " + std::to_string(i) + " after 100 tries");
  }

  const int n_vessels =
      cfg.vessel_count_lo +
      static_cast<int>(uniform_index(
          rng, static_cast<std::size_t>(cfg.vessel_count_hi - cfg.vessel_count_lo + 1)));
  for (int i = 0; i < n_vessels; ++i) {
    const double rho = uniform_range(rng, cfg.vessel_radius_lo, cfg.vessel_radius_hi);
    const double hu = uniform_range(rng, cfg.vessel_hu_lo, cfg.vessel_hu_hi);
    const double x_lo = wall_end + 4.0;
    if (ext.x <= x_lo + 4.0) break;
    const Vec3 mid{uniform_range(rng, x_lo, ext.x - 2.0), uniform_range(rng, 2.0, ext.y - 2.0),
                   uniform_range(rng, 2.0, ext.z - 2.0)};
    const Vec3 dir = detail::random_unit_vector(rng);
    const double half_len = uniform_range(rng, 12.0, 35.0);
    detail::paint_cylinder(v, mid - dir * half_len, mid + dir * half_len, rho, hu, wall_end);
  }

  for (const TruthNodule& t : scene.truths)
    detail::paint_sphere(v, t.center_mm, t.diameter_mm / 2.0, t.hu, wall_end);
  return scene;
}

struct StubConfig {
  double recall = 0.95;       // chance a truth produces a candidate
  double fp_per_scan = 6.0;   // Poisson rate of false-positive fragments
  double margin_lo = -0.5, margin_hi = 1.0;        // mask radius error, mm
  double frag_radius_lo = 1.5, frag_radius_hi = 4.0;  // FP fragment radius, mm
  double p_tp_lo = 0.5, p_tp_hi = 1.0;
  double p_fp_lo = 0.1, p_fp_hi = 0.9;
  double hu_band_lo = -400.0, hu_band_hi = 400.0;
  double truth_clearance_mm = 3.0;  // FP seeds stay this far outside truth spheres
  int max_seed_tries = 200;
};

// Parametric stand-in for a trained detector: per truth, with probability
// `recall`, a mask equal to the truth sphere grown/shrunk by a random margin
// and p ~ U(p_tp range); plus Poisson-many fragments of in-band structure
// (wall, vessels) as false positives with p ~ U(p_fp range).
inline std::vector<Candidate> detector_stub(const Volume& v,
                                            const std::vector<TruthNodule>& truths,
                                            const StubConfig& cfg, std::mt19937_64& rng) {
  std::vector<Candidate> out;

  for (const TruthNodule& t : truths) {
    const bool keep = uniform_unit(rng) < cfg.recall;
    const double margin = uniform_range(rng, cfg.margin_lo, cfg.margin_hi);
    const double p = uniform_range(rng, cfg.p_tp_lo, cfg.p_tp_hi);
    if (!keep) continue;
    const double r = std::max(0.5, t.diameter_mm / 2.0 + margin);
    MaskVolume mask = sphere_mask(v.dims, v.spacing, t.center_mm, r);
    bool any = false;
    for (auto b : mask.data)
      if (b) {
        any = true;
        break;
      }
    if (!any) continue;
    out.push_back(make_candidate(std::move(mask), p));
  }

  const int n_fp = poisson_draw(rng, cfg.fp_per_scan);
  for (int i = 0; i < n_fp; ++i) {
    const double frag_r = uniform_range(rng, cfg.frag_radius_lo, cfg.frag_radius_hi);
    const double p = uniform_range(rng, cfg.p_fp_lo, cfg.p_fp_hi);

    Vec3 seed{};
    bool found = false;
    for (int attempt = 0; attempt < cfg.max_seed_tries && !found; ++attempt) {
      const int ix = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(v.dims.nx)));
      const int iy = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(v.dims.ny)));
      const int iz = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(v.dims.nz)));
      const double hu = v.at(ix, iy, iz);
      if (hu < cfg.hu_band_lo || hu > cfg.hu_band_hi) continue;
      const Vec3 c = v.voxel_center(ix, iy, iz);
      bool clear = true;
      for (const TruthNodule& t : truths)
        if ((c - t.center_mm).norm() < t.diameter_mm / 2.0 + cfg.truth_clearance_mm)
          clear = false;
      if (!clear) continue;
      seed = c;
      found = true;
    }
    if (!found) continue;

    // Fragment = in-band voxels near the seed (a patch of wall or vessel).
    MaskVolume mask;
    mask.dims = v.dims;
    mask.spacing = v.spacing;
    mask.data.assign(static_cast<std::size_t>(v.dims.count()), 0);
    const double s[3] = {v.spacing.sx, v.spacing.sy, v.spacing.sz};
    int lo[3], hi[3];
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::max(0, static_cast<int>(std::floor((seed[a] - frag_r) / s[a] - 0.5)));
      hi[a] = std::min(v.dims[a] - 1,
                       static_cast<int>(std::ceil((seed[a] + frag_r) / s[a] - 0.5)));
    }
    for (int iz = lo[2]; iz <= hi[2]; ++iz)
      for (int iy = lo[1]; iy <= hi[1]; ++iy)
        for (int ix = lo[0]; ix <= hi[0]; ++ix) {
          const double hu = v.at(ix, iy, iz);
          if (hu < cfg.hu_band_lo || hu > cfg.hu_band_hi) continue;
          if ((v.voxel_center(ix, iy, iz) - seed).norm2() <= frag_r * frag_r)
            mask.at(ix, iy, iz) = 1;
        }
    out.push_back(make_candidate(std::move(mask), p));
  }
  return out;
}

// Seeded shuffle, 75/25-style split, and a round-robin fold assignment over
// the train part.
struct ScanSplit {
  std::vector<int> train, test;
  std::vector<int> fold_of_train;  // parallel to train
};

inline ScanSplit split_scans(int n_scans, int folds, double test_fraction,
                             std::uint64_t seed) {
  require(n_scans >= 1, Errc::too_few_scans, "split_scans: need at least one scan");
  require(folds >= 1, Errc::bad_config, "split_scans: folds must be >= 1");
  require(test_fraction > 0.0 && test_fraction < 1.0, Errc::bad_config,
          "split_scans: test_fraction must be in (0,1)");

  std::vector<int> ids(static_cast<std::size_t>(n_scans));
  for (int i = 0; i < n_scans; ++i) ids[static_cast<std::size_t>(i)] = i;
  auto rng = make_rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i)
    std::swap(ids[i - 1], ids[uniform_index(rng, i)]);

  const int n_test = std::max(1, static_cast<int>(std::lround(n_scans * test_fraction)));
  ScanSplit split;
  split.test.assign(ids.begin(), ids.begin() + n_test);
  split.train.assign(ids.begin() + n_test, ids.end());
  require(static_cast<int>(split.train.size()) >= folds, Errc::too_few_scans,
          "split_scans: train split smaller than fold count");
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  split.fold_of_train.resize(split.train.size());
  for (std::size_t i = 0; i < split.train.size(); ++i)
    split.fold_of_train[i] = static_cast<int>(i % static_cast<std::size_t>(folds));
  return split;
}

}  // namespace pcfpr

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "pcfpr/geom.hpp"
#include "pcfpr/grid.hpp"

namespace pcfpr {

// A detector hit: binary mask in global scan coordinates plus the detector's
// confidence. Radius is the equivalent-sphere radius of the mask volume.
struct Candidate {
  MaskVolume mask;
  double p = 0.0;
  Vec3 center_mm{};
  double r_mm = 0.0;
};

inline Candidate make_candidate(MaskVolume mask, double p) {
  validate_grid(mask, "make_candidate");
  require(p >= 0.0 && p <= 1.0, Errc::bad_config, "make_candidate: p must be in [0,1]");

  Vec3 sum{0, 0, 0};
  std::int64_t count = 0;
  for (int iz = 0; iz < mask.dims.nz; ++iz)
    for (int iy = 0; iy < mask.dims.ny; ++iy)
      for (int ix = 0; ix < mask.dims.nx; ++ix)
        if (mask.at(ix, iy, iz)) {
          sum = sum + mask.voxel_center(ix, iy, iz);
          ++count;
        }
  require(count > 0, Errc::empty_mask, "make_candidate: mask has no positive voxels");

  Candidate c;
  c.p = p;
  c.center_mm = sum / static_cast<double>(count);
  const double voxel_vol = mask.spacing.sx * mask.spacing.sy * mask.spacing.sz;
  const double v = static_cast<double>(count) * voxel_vol;
  c.r_mm = std::cbrt(3.0 * v / (4.0 * std::numbers::pi));
  c.mask = std::move(mask);
  return c;
}

// Axis-aligned ROI in mm: tight voxel-face bounds of the mask, padded on every
// face and clipped to the volume extent.
struct RoiBox {
  Vec3 min_mm{};
  Vec3 max_mm{};

  bool contains(const Vec3& q) const {
    return q.x >= min_mm.x && q.x <= max_mm.x && q.y >= min_mm.y && q.y <= max_mm.y &&
           q.z >= min_mm.z && q.z <= max_mm.z;
  }
};

inline RoiBox roi_bbox(const Candidate& c, double padding_mm = 16.0) {
  const auto& m = c.mask;
  int lo[3] = {m.dims.nx, m.dims.ny, m.dims.nz};
  int hi[3] = {-1, -1, -1};
  for (int iz = 0; iz < m.dims.nz; ++iz)
    for (int iy = 0; iy < m.dims.ny; ++iy)
      for (int ix = 0; ix < m.dims.nx; ++ix)
        if (m.at(ix, iy, iz)) {
          const int idx[3] = {ix, iy, iz};
          for (int a = 0; a < 3; ++a) {
            lo[a] = std::min(lo[a], idx[a]);
            hi[a] = std::max(hi[a], idx[a]);
          }
        }
  require(hi[0] >= 0, Errc::empty_mask, "roi_bbox: mask has no positive voxels");

  const Vec3 ext = m.extent_mm();
  RoiBox box;
  for (int a = 0; a < 3; ++a) {
    const double s = m.spacing[a];
    double lo_mm = lo[a] * s - padding_mm;
    double hi_mm = (hi[a] + 1) * s + padding_mm;
    box.min_mm[a] = std::max(0.0, lo_mm);
    box.max_mm[a] = std::min(ext[a], hi_mm);
  }
  return box;
}

// One voxel turned into a network input point: coordinates centered on the
// candidate, HU mapped affinely onto [-1,1], detector probability, mask flag.
struct CloudPoint {
  float x = 0, y = 0, z = 0;
  float hu = 0;
  float p = 0;
  bool is_mask = false;

  bool operator==(const CloudPoint&) const = default;
};

struct PointCloud {
  std::vector<CloudPoint> points;
  std::string candidate_ref;
  double r_mm = 0.0;
};

inline float rescale_hu(double hu, double hu_lo, double hu_hi) {
  const double t = (hu - hu_lo) / (hu_hi - hu_lo) * 2.0 - 1.0;
  return static_cast<float>(std::clamp(t, -1.0, 1.0));
}

// A voxel belongs to a box iff its center does; this is the shared convention
// between extraction and any box-size accounting.
struct BoxIndexRange {
  int lo[3] = {0, 0, 0};
  int hi[3] = {-1, -1, -1};  // inclusive

  std::int64_t count() const {
    std::int64_t n = 1;
    for (int a = 0; a < 3; ++a) {
      if (hi[a] < lo[a]) return 0;
      n *= hi[a] - lo[a] + 1;
    }
    return n;
  }
};

inline BoxIndexRange box_voxel_range(const Dims& dims, const Spacing& spacing,
                                     const RoiBox& box) {
  BoxIndexRange r;
  for (int a = 0; a < 3; ++a) {
    const double s = spacing[a];
    r.lo[a] = std::max(0, static_cast<int>(std::ceil(box.min_mm[a] / s - 0.5)));
    r.hi[a] = std::min(dims[a] - 1, static_cast<int>(std::floor(box.max_mm[a] / s - 0.5)));
  }
  return r;
}

// Keeps every in-band voxel plus every mask voxel (so the candidate itself can
// never be filtered away).
inline PointCloud extract_points(const Volume& v, const Candidate& c, const RoiBox& box,
                                 double hu_lo = -400.0, double hu_hi = 400.0) {
  validate_grid(v, "extract_points");
  require(v.dims == c.mask.dims && v.spacing == c.mask.spacing, Errc::bad_config,
          "extract_points: volume and candidate mask grids differ");
  require(hu_lo < hu_hi, Errc::bad_config, "extract_points: hu_lo must be < hu_hi");

  const BoxIndexRange r = box_voxel_range(v.dims, v.spacing, box);

  PointCloud cloud;
  cloud.r_mm = c.r_mm;
  const float p = static_cast<float>(c.p);
  for (int iz = r.lo[2]; iz <= r.hi[2]; ++iz)
    for (int iy = r.lo[1]; iy <= r.hi[1]; ++iy)
      for (int ix = r.lo[0]; ix <= r.hi[0]; ++ix) {
        const bool in_mask = c.mask.at(ix, iy, iz) != 0;
        const double hu = v.at(ix, iy, iz);
        if (!in_mask && (hu < hu_lo || hu > hu_hi)) continue;
        const Vec3 pos = v.voxel_center(ix, iy, iz) - c.center_mm;
        CloudPoint pt;
        pt.x = static_cast<float>(pos.x);
        pt.y = static_cast<float>(pos.y);
        pt.z = static_cast<float>(pos.z);
        pt.hu = rescale_hu(hu, hu_lo, hu_hi);
        pt.p = p;
        pt.is_mask = in_mask;
        cloud.points.push_back(pt);
      }
  require(!cloud.points.empty(), Errc::empty_mask,
          "extract_points: box holds no in-band voxels and no mask voxels");
  return cloud;
}

}  // namespace pcfpr

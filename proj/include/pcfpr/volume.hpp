#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pcfpr/grid.hpp"

namespace pcfpr {

// HU window [-1000, 400] mapped affinely onto [0, 1].
inline float normalize_hu_value(double hu) {
  const double c = std::clamp(hu, -1000.0, 400.0);
  return static_cast<float>((c + 1000.0) / 1400.0);
}

inline NormalizedVolume normalize_hu(const Volume& v) {
  validate_grid(v, "normalize_hu");
  NormalizedVolume out;
  out.dims = v.dims;
  out.spacing = v.spacing;
  out.data.resize(v.data.size());
  for (std::size_t i = 0; i < v.data.size(); ++i) out.data[i] = normalize_hu_value(v.data[i]);
  return out;
}

namespace detail {

inline Dims resampled_dims(const Dims& d, const Spacing& s, double target_mm) {
  auto nd = [&](int n, double sp) {
    return std::max(1, static_cast<int>(std::llround(n * sp / target_mm)));
  };
  return Dims{nd(d.nx, s.sx), nd(d.ny, s.sy), nd(d.nz, s.sz)};
}

// Continuous voxel coordinate of the output-voxel center in input index space.
inline double center_coord(int i, double target_mm, double src_mm) {
  return (i + 0.5) * target_mm / src_mm - 0.5;
}

}  // namespace detail

// Trilinear resampling onto an isotropic grid; HU rounded to nearest integer.
inline Volume resample_isotropic(const Volume& v, double target_mm) {
  validate_grid(v, "resample_isotropic");
  require(target_mm > 0.0, Errc::bad_config, "resample_isotropic: target_mm must be > 0");
  if (v.spacing.isotropic() && v.spacing.sx == target_mm) return v;

  Volume out;
  out.dims = detail::resampled_dims(v.dims, v.spacing, target_mm);
  out.spacing = Spacing{target_mm, target_mm, target_mm};
  out.data.resize(static_cast<std::size_t>(out.dims.count()));

  auto clamp_idx = [](int i, int n) { return std::clamp(i, 0, n - 1); };
  std::size_t o = 0;
  for (int iz = 0; iz < out.dims.nz; ++iz) {
    const double cz = detail::center_coord(iz, target_mm, v.spacing.sz);
    const int z0 = static_cast<int>(std::floor(cz));
    const double fz = cz - z0;
    const int za = clamp_idx(z0, v.dims.nz), zb = clamp_idx(z0 + 1, v.dims.nz);
    for (int iy = 0; iy < out.dims.ny; ++iy) {
      const double cy = detail::center_coord(iy, target_mm, v.spacing.sy);
      const int y0 = static_cast<int>(std::floor(cy));
      const double fy = cy - y0;
      const int ya = clamp_idx(y0, v.dims.ny), yb = clamp_idx(y0 + 1, v.dims.ny);
      for (int ix = 0; ix < out.dims.nx; ++ix, ++o) {
        const double cx = detail::center_coord(ix, target_mm, v.spacing.sx);
        const int x0 = static_cast<int>(std::floor(cx));
        const double fx = cx - x0;
        const int xa = clamp_idx(x0, v.dims.nx), xb = clamp_idx(x0 + 1, v.dims.nx);

        const double v000 = v.at(xa, ya, za), v100 = v.at(xb, ya, za);
        const double v010 = v.at(xa, yb, za), v110 = v.at(xb, yb, za);
        const double v001 = v.at(xa, ya, zb), v101 = v.at(xb, ya, zb);
        const double v011 = v.at(xa, yb, zb), v111 = v.at(xb, yb, zb);

        const double c00 = v000 + (v100 - v000) * fx;
        const double c10 = v010 + (v110 - v010) * fx;
        const double c01 = v001 + (v101 - v001) * fx;
        const double c11 = v011 + (v111 - v011) * fx;
        const double c0 = c00 + (c10 - c00) * fy;
        const double c1 = c01 + (c11 - c01) * fy;
        const double val = c0 + (c1 - c0) * fz;

        out.data[o] = static_cast<std::int16_t>(
            std::clamp<long>(std::lround(val), -32768L, 32767L));
      }
    }
  }
  return out;
}

// Nearest-neighbor resampling for binary masks (keeps values in {0,1}).
inline MaskVolume resample_nearest(const MaskVolume& m, double target_mm) {
  validate_grid(m, "resample_nearest");
  require(target_mm > 0.0, Errc::bad_config, "resample_nearest: target_mm must be > 0");
  if (m.spacing.isotropic() && m.spacing.sx == target_mm) return m;

  MaskVolume out;
  out.dims = detail::resampled_dims(m.dims, m.spacing, target_mm);
  out.spacing = Spacing{target_mm, target_mm, target_mm};
  out.data.resize(static_cast<std::size_t>(out.dims.count()));

  auto nearest = [](int i, double t, double s, int n) {
    return std::clamp(static_cast<int>(std::lround(detail::center_coord(i, t, s))), 0, n - 1);
  };
  std::size_t o = 0;
  for (int iz = 0; iz < out.dims.nz; ++iz) {
    const int za = nearest(iz, target_mm, m.spacing.sz, m.dims.nz);
    for (int iy = 0; iy < out.dims.ny; ++iy) {
      const int ya = nearest(iy, target_mm, m.spacing.sy, m.dims.ny);
      for (int ix = 0; ix < out.dims.nx; ++ix, ++o) {
        const int xa = nearest(ix, target_mm, m.spacing.sx, m.dims.nx);
        out.data[o] = m.at(xa, ya, za);
      }
    }
  }
  return out;
}

enum class Axis { x = 0, y = 1, z = 2 };

// Maximum-intensity projection over an origin-anchored slab of consecutive
// slices. The image keeps the two non-projected axes in ascending axis order:
// project z -> (x, y), project y -> (x, z), project x -> (y, z).
struct MipImage {
  Axis axis = Axis::z;
  double slab_mm = 0.0;
  int origin_slice = 0;
  int n0 = 0, n1 = 0;
  std::vector<std::int16_t> data;

  std::int16_t at(int i0, int i1) const {
    return data[static_cast<std::size_t>(i0) + static_cast<std::size_t>(n0) * i1];
  }
};

inline MipImage mip(const Volume& v, Axis axis, double slab_mm, int origin_slice) {
  validate_grid(v, "mip");
  require(slab_mm > 0.0, Errc::bad_config, "mip: slab_mm must be > 0");
  const int a = static_cast<int>(axis);
  const double step = v.spacing[a];
  const int slab_len = static_cast<int>(std::ceil(slab_mm / step));
  require(origin_slice >= 0 && origin_slice + slab_len <= v.dims[a], Errc::slab_out_of_bounds,
          "mip: slab [" + std::to_string(origin_slice) + ", " +
              std::to_string(origin_slice + slab_len) + ") exceeds axis extent " +
              std::to_string(v.dims[a]));

  MipImage img;
  img.axis = axis;
  img.slab_mm = slab_mm;
  img.origin_slice = origin_slice;
  const int axes[3] = {0, 1, 2};
  int keep[2], ki = 0;
  for (int ax : axes)
    if (ax != a) keep[ki++] = ax;
  img.n0 = v.dims[keep[0]];
  img.n1 = v.dims[keep[1]];
  img.data.assign(static_cast<std::size_t>(img.n0) * img.n1, std::int16_t{-32768});

  int idx[3];
  for (int i1 = 0; i1 < img.n1; ++i1) {
    idx[keep[1]] = i1;
    for (int i0 = 0; i0 < img.n0; ++i0) {
      idx[keep[0]] = i0;
      std::int16_t best = -32768;
      for (int s = 0; s < slab_len; ++s) {
        idx[a] = origin_slice + s;
        best = std::max(best, v.at(idx[0], idx[1], idx[2]));
      }
      img.data[static_cast<std::size_t>(i0) + static_cast<std::size_t>(img.n0) * i1] = best;
    }
  }
  return img;
}

}  // namespace pcfpr

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcfpr/errors.hpp"
#include "pcfpr/geom.hpp"

namespace pcfpr {

/// Regular 3D scalar grid, x-fastest memory order, voxel i spans
/// [i*s, (i+1)*s) mm with its center at (i+0.5)*s.
template <typename T>
struct Grid {
  Dims dims;
  Spacing spacing;
  std::vector<T> data;

  Grid() = default;
  Grid(Dims d, Spacing s, T fill = T{})
      : dims(d), spacing(s), data(static_cast<std::size_t>(d.count()), fill) {}

  std::int64_t index(int ix, int iy, int iz) const {
    return ix + static_cast<std::int64_t>(dims.nx) * (iy + static_cast<std::int64_t>(dims.ny) * iz);
  }
  T& at(int ix, int iy, int iz) { return data[static_cast<std::size_t>(index(ix, iy, iz))]; }
  const T& at(int ix, int iy, int iz) const {
    return data[static_cast<std::size_t>(index(ix, iy, iz))];
  }

  bool in_bounds(int ix, int iy, int iz) const {
    return ix >= 0 && ix < dims.nx && iy >= 0 && iy < dims.ny && iz >= 0 && iz < dims.nz;
  }

  Vec3 voxel_center(int ix, int iy, int iz) const {
    return {(ix + 0.5) * spacing.sx, (iy + 0.5) * spacing.sy, (iz + 0.5) * spacing.sz};
  }

  /// Physical extent in mm; the grid covers [0, extent) along each axis.
  Vec3 extent_mm() const {
    return {dims.nx * spacing.sx, dims.ny * spacing.sy, dims.nz * spacing.sz};
  }

  bool operator==(const Grid& o) const {
    return dims == o.dims && spacing == o.spacing && data == o.data;
  }
};

/// Raw CT-like volume in signed Hounsfield units.
using Volume = Grid<std::int16_t>;
/// Windowed volume with values in [0, 1].
using NormalizedVolume = Grid<float>;
/// Binary mask, values in {0, 1}.
using MaskVolume = Grid<std::uint8_t>;

template <typename T>
void validate_grid(const Grid<T>& g, const std::string& what) {
  require(g.dims.nx >= 1 && g.dims.ny >= 1 && g.dims.nz >= 1, Errc::bad_config,
          what + ": dims components must be >= 1");
  require(g.spacing.sx > 0 && g.spacing.sy > 0 && g.spacing.sz > 0, Errc::bad_config,
          what + ": spacing components must be > 0");
  require(static_cast<std::int64_t>(g.data.size()) == g.dims.count(), Errc::bad_config,
          what + ": data length does not match dims");
}

}  // namespace pcfpr

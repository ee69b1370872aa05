#pragma once

#include <cmath>
#include <cstdint>

namespace pcfpr {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }

  double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Voxel counts along x, y, z.
struct Dims {
  int nx = 0, ny = 0, nz = 0;

  std::int64_t count() const {
    return static_cast<std::int64_t>(nx) * ny * nz;
  }
  int operator[](int i) const { return i == 0 ? nx : (i == 1 ? ny : nz); }
  bool operator==(const Dims& o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }
};

/// Physical voxel size in mm along x, y, z.
struct Spacing {
  double sx = 1, sy = 1, sz = 1;

  double operator[](int i) const { return i == 0 ? sx : (i == 1 ? sy : sz); }
  bool operator==(const Spacing& o) const { return sx == o.sx && sy == o.sy && sz == o.sz; }
  bool isotropic() const { return sx == sy && sy == sz; }
};

}  // namespace pcfpr

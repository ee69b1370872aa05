#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "pcfpr/cloud.hpp"

namespace pcfpr {

// ASCII PLY export for inspection in standard viewers: mask points red,
// background points blue.
inline void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  require(out.good(), Errc::io_error, "cannot open for writing: " + path.string());
  out << "ply\n"
      << "format ascii 1.0\n"
      << "element vertex " << cloud.points.size() << "\n"
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "property uchar red\n"
      << "property uchar green\n"
      << "property uchar blue\n"
      << "end_header\n";
  char buf[128];
  for (const CloudPoint& pt : cloud.points) {
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g %s\n", pt.x, pt.y, pt.z,
                  pt.is_mask ? "255 0 0" : "0 0 255");
    out << buf;
  }
  require(out.good(), Errc::io_error, "short write: " + path.string());
}

}  // namespace pcfpr

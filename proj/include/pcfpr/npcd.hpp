#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pcfpr/cloud.hpp"

// Point-cloud serialization.
//
// Binary NPCD: magic "NPCD1" (5 bytes), u32 LE point count, then per point
// x,y,z,hu,p as f32 LE followed by a u8 mask flag (26 bytes per point).
//
// CSV: header `x,y,z,hu,p,is_mask`, one row per point, floats printed with
// "%.9g" so the text form round-trips f32 exactly.

namespace pcfpr {

inline void write_npcd(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::io_error, "cannot open for writing: " + path.string());
  out.write("NPCD1", 5);
  const std::uint32_t n = static_cast<std::uint32_t>(cloud.points.size());
  out.write(reinterpret_cast<const char*>(&n), 4);
  for (const CloudPoint& pt : cloud.points) {
    const float f[5] = {pt.x, pt.y, pt.z, pt.hu, pt.p};
    out.write(reinterpret_cast<const char*>(f), sizeof(f));
    const std::uint8_t flag = pt.is_mask ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&flag), 1);
  }
  require(out.good(), Errc::io_error, "short write: " + path.string());
}

inline PointCloud read_npcd(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io_error, "cannot open: " + path.string());
  char magic[5];
  in.read(magic, 5);
  require(in.gcount() == 5 && std::memcmp(magic, "NPCD1", 5) == 0, Errc::malformed_cloud_file,
          path.string() + ": bad magic");
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), 4);
  require(in.gcount() == 4, Errc::malformed_cloud_file, path.string() + ": truncated count");

  PointCloud cloud;
  cloud.points.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    float f[5];
    std::uint8_t flag;
    in.read(reinterpret_cast<char*>(f), sizeof(f));
    in.read(reinterpret_cast<char*>(&flag), 1);
    require(in.good(), Errc::malformed_cloud_file, path.string() + ": truncated payload");
    cloud.points[i] = CloudPoint{f[0], f[1], f[2], f[3], f[4], flag != 0};
  }
  return cloud;
}

inline void write_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  require(out.good(), Errc::io_error, "cannot open for writing: " + path.string());
  out << "x,y,z,hu,p,is_mask\n";
  char buf[192];
  for (const CloudPoint& pt : cloud.points) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", pt.x, pt.y, pt.z, pt.hu,
                  pt.p, pt.is_mask ? 1 : 0);
    out << buf;
  }
  require(out.good(), Errc::io_error, "short write: " + path.string());
}

inline PointCloud read_cloud_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), Errc::io_error, "cannot open: " + path.string());
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "x,y,z,hu,p,is_mask",
          Errc::malformed_cloud_file, path.string() + ": bad header");
  PointCloud cloud;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    for (char& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ls(line);
    CloudPoint pt;
    int flag = 0;
    ls >> pt.x >> pt.y >> pt.z >> pt.hu >> pt.p >> flag;
    require(!ls.fail(), Errc::malformed_cloud_file, path.string() + ": bad row '" + line + "'");
    pt.is_mask = flag != 0;
    cloud.points.push_back(pt);
  }
  return cloud;
}

}  // namespace pcfpr

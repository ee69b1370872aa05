#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pcfpr/grid.hpp"

// NVOL volume file: ASCII header followed by a raw little-endian payload.
//
//   NVOL1\n
//   dims nx ny nz\n
//   spacing sx sy sz\n
//   dtype i16\n          (or u8 for masks)
//   \n
//   <payload, x-fastest>

namespace pcfpr {

static_assert(std::endian::native == std::endian::little,
              "NVOL payload is little-endian; big-endian hosts are not supported");

namespace detail {

template <typename T>
struct nvol_dtype;
template <>
struct nvol_dtype<std::int16_t> {
  static constexpr const char* name = "i16";
};
template <>
struct nvol_dtype<std::uint8_t> {
  static constexpr const char* name = "u8";
};

inline std::string format_mm(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

template <typename T>
void write_nvol(const std::filesystem::path& path, const Grid<T>& g) {
  validate_grid(g, "write_nvol(" + path.string() + ")");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::io_error, "cannot open for writing: " + path.string());
  out << "NVOL1\n";
  out << "dims " << g.dims.nx << " " << g.dims.ny << " " << g.dims.nz << "\n";
  out << "spacing " << detail::format_mm(g.spacing.sx) << " " << detail::format_mm(g.spacing.sy)
      << " " << detail::format_mm(g.spacing.sz) << "\n";
  out << "dtype " << detail::nvol_dtype<T>::name << "\n";
  out << "\n";
  out.write(reinterpret_cast<const char*>(g.data.data()),
            static_cast<std::streamsize>(g.data.size() * sizeof(T)));
  require(out.good(), Errc::io_error, "short write: " + path.string());
}

template <typename T>
Grid<T> read_nvol(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io_error, "cannot open: " + path.string());

  std::string line;
  std::getline(in, line);
  require(line == "NVOL1", Errc::io_error, path.string() + ": bad magic");

  Grid<T> g;
  bool have_dims = false, have_spacing = false, have_dtype = false;
  while (std::getline(in, line)) {
    if (line.empty()) break;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "dims") {
      ls >> g.dims.nx >> g.dims.ny >> g.dims.nz;
      have_dims = !ls.fail();
    } else if (key == "spacing") {
      ls >> g.spacing.sx >> g.spacing.sy >> g.spacing.sz;
      have_spacing = !ls.fail();
    } else if (key == "dtype") {
      std::string dt;
      ls >> dt;
      require(dt == detail::nvol_dtype<T>::name, Errc::io_error,
              path.string() + ": dtype mismatch, file has '" + dt + "'");
      have_dtype = true;
    } else {
      raise(Errc::io_error, path.string() + ": unknown header key '" + key + "'");
    }
  }
  require(have_dims && have_spacing && have_dtype, Errc::io_error,
          path.string() + ": incomplete header");

  g.data.resize(static_cast<std::size_t>(g.dims.count()));
  in.read(reinterpret_cast<char*>(g.data.data()),
          static_cast<std::streamsize>(g.data.size() * sizeof(T)));
  require(in.gcount() == static_cast<std::streamsize>(g.data.size() * sizeof(T)), Errc::io_error,
          path.string() + ": truncated payload");
  validate_grid(g, "read_nvol(" + path.string() + ")");
  return g;
}

inline Volume read_volume(const std::filesystem::path& path) { return read_nvol<std::int16_t>(path); }
inline MaskVolume read_mask(const std::filesystem::path& path) { return read_nvol<std::uint8_t>(path); }

}  // namespace pcfpr

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "pcfpr/model.hpp"

// Weights file: magic "NWTS1", u32 tensor count, a shape table of
// (u16 name length, name, u32 rows, u32 cols) entries, then the f32 payloads
// in table order. Model hyperparameters ride along as 1x1 pseudo-tensors;
// layer widths are reconstructed from the tensor shapes and the EdgeConv
// layer from the presence of "edge.W".

namespace pcfpr {

namespace detail {

template <typename T>
void put_u(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get_u(std::ifstream& in, const std::string& what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  require(in.gcount() == sizeof(v), Errc::io_error, "weights file truncated at " + what);
  return v;
}

}  // namespace detail

inline void save_weights(const std::filesystem::path& path, ModelWeights<float>& w) {
  std::vector<std::pair<std::string, Mat<float>>> tensors;
  tensors.emplace_back("cfg.feature_set", Mat<float>(1, 1));
  tensors.back().second(0, 0) = static_cast<float>(static_cast<int>(w.cfg.feature_set));
  tensors.emplace_back("cfg.k_neighbors", Mat<float>(1, 1));
  tensors.back().second(0, 0) = static_cast<float>(w.cfg.k_neighbors);
  tensors.emplace_back("cfg.coord_scale_mm", Mat<float>(1, 1));
  tensors.back().second(0, 0) = static_cast<float>(w.cfg.coord_scale_mm);
  w.for_each_tensor(
      [&](const std::string& name, Mat<float>& t) { tensors.emplace_back(name, t); });

  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::io_error, "cannot open for writing: " + path.string());
  out.write("NWTS1", 5);
  detail::put_u<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    detail::put_u<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::put_u<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows));
    detail::put_u<std::uint32_t>(out, static_cast<std::uint32_t>(t.cols));
  }
  for (const auto& [name, t] : tensors)
    out.write(reinterpret_cast<const char*>(t.a.data()),
              static_cast<std::streamsize>(t.a.size() * sizeof(float)));
  require(out.good(), Errc::io_error, "short write: " + path.string());
}

inline ModelWeights<float> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io_error, "cannot open: " + path.string());
  char magic[5];
  in.read(magic, 5);
  require(in.gcount() == 5 && std::memcmp(magic, "NWTS1", 5) == 0, Errc::io_error,
          path.string() + ": bad magic");

  const auto n = detail::get_u<std::uint32_t>(in, "tensor count");
  std::vector<std::string> names(n);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto len = detail::get_u<std::uint16_t>(in, "name length");
    names[i].resize(len);
    in.read(names[i].data(), len);
    require(in.gcount() == len, Errc::io_error, path.string() + ": truncated name");
    shapes[i].first = detail::get_u<std::uint32_t>(in, "rows");
    shapes[i].second = detail::get_u<std::uint32_t>(in, "cols");
  }
  std::map<std::string, Mat<float>> tensors;
  for (std::uint32_t i = 0; i < n; ++i) {
    Mat<float> t(static_cast<int>(shapes[i].first), static_cast<int>(shapes[i].second));
    in.read(reinterpret_cast<char*>(t.a.data()),
            static_cast<std::streamsize>(t.a.size() * sizeof(float)));
    require(in.gcount() == static_cast<std::streamsize>(t.a.size() * sizeof(float)),
            Errc::io_error, path.string() + ": truncated payload for " + names[i]);
    tensors.emplace(names[i], std::move(t));
  }

  auto need = [&](const std::string& name) -> Mat<float>& {
    auto it = tensors.find(name);
    require(it != tensors.end(), Errc::io_error, path.string() + ": missing tensor " + name);
    return it->second;
  };

  ModelConfig cfg;
  cfg.feature_set = static_cast<FeatureSet>(static_cast<int>(need("cfg.feature_set")(0, 0)));
  cfg.k_neighbors = static_cast<int>(need("cfg.k_neighbors")(0, 0));
  cfg.coord_scale_mm = static_cast<double>(need("cfg.coord_scale_mm")(0, 0));
  cfg.use_edgeconv = tensors.count("edge.W") > 0;
  if (cfg.use_edgeconv) {
    cfg.edge_width = need("edge.W").rows;
    require(need("edge.W").cols == 2 * cfg.input_dim(), Errc::io_error,
            path.string() + ": edge.W shape inconsistent with feature set");
  }
  cfg.mlp_widths.clear();
  for (int l = 0; tensors.count("pw" + std::to_string(l) + ".W"); ++l)
    cfg.mlp_widths.push_back(need("pw" + std::to_string(l) + ".W").rows);
  require(!cfg.mlp_widths.empty(), Errc::io_error, path.string() + ": no per-point layers");
  cfg.head_width = need("head1.W").rows;

  ModelWeights<float> w = make_weights<float>(cfg);
  w.for_each_tensor([&](const std::string& name, Mat<float>& t) {
    Mat<float>& src = need(name);
    require(src.rows == t.rows && src.cols == t.cols, Errc::io_error,
            path.string() + ": tensor " + name + " has unexpected shape");
    t = src;
  });
  return w;
}

}  // namespace pcfpr

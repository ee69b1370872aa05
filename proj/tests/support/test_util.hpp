#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <utility>

#include "pcfpr/errors.hpp"

namespace testutil {

// Runs f, expecting it to throw pcfpr::Error; returns the code it threw.
// Throws std::logic_error if nothing was thrown so the assertion site fails.
template <class F>
pcfpr::Errc thrown_code(F&& f) {
  try {
    std::forward<F>(f)();
  } catch (const pcfpr::Error& e) {
    return e.code();
  }
  throw std::logic_error("expected a pcfpr::Error, nothing was thrown");
}

// Self-cleaning scratch directory.
class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    std::mt19937_64 rng{std::random_device{}()};
    for (int i = 0; i < 64; ++i) {
      auto p = base / ("pcfpr_test_" + std::to_string(rng()));
      std::error_code ec;
      if (std::filesystem::create_directory(p, ec)) {
        path_ = p;
        return;
      }
    }
    throw std::runtime_error("could not create a scratch directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil

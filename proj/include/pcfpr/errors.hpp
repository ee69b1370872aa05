#pragma once

#include <stdexcept>
#include <string>

namespace pcfpr {

enum class Errc {
  empty_mask,
  slab_out_of_bounds,
  no_mask_points,
  single_class_dataset,
  too_few_scans,
  too_few_points,
  placement_failure,
  degenerate_scale,
  malformed_cloud_file,
  no_truths,
  bad_config,
  io_error,
};

inline const char* errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::empty_mask: return "EmptyMask";
    case Errc::slab_out_of_bounds: return "SlabOutOfBounds";
    case Errc::no_mask_points: return "NoMaskPoints";
    case Errc::single_class_dataset: return "SingleClassDataset";
    case Errc::too_few_scans: return "TooFewScans";
    case Errc::too_few_points: return "TooFewPoints";
    case Errc::placement_failure: return "PlacementFailure";
    case Errc::degenerate_scale: return "DegenerateScale";
    case Errc::malformed_cloud_file: return "MalformedCloudFile";
    case Errc::no_truths: return "NoTruths";
    case Errc::bad_config: return "BadConfig";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

/// Library error with a stable machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool ok, Errc code, const std::string& msg) {
  if (!ok) raise(code, msg);
}

}  // namespace pcfpr

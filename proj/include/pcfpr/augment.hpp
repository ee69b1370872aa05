#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pcfpr/cloud.hpp"
#include "pcfpr/rng.hpp"
#include "pcfpr/volume.hpp"

namespace pcfpr {

struct AugmentConfig {
  double noise_lambda = 0.05;          // Poisson rate for the binary noise mask
  double noise_sigma = 30.0;           // HU std-dev of the additive noise
  double blur_prob = 0.2;
  double blur_alpha_lo = 0.2;          // Gaussian kernel sigma range, in voxels
  double blur_alpha_hi = 0.8;
  double hu_shift_mag = 50.0;          // shift ~ U(-mag, +mag), rounded to integer HU
  double scale_sigma = 0.05;           // per-axis scale = 1 + N(0, scale_sigma)
  std::uint64_t seed = 0;
};

inline void validate_augment(const AugmentConfig& cfg) {
  require(cfg.noise_lambda >= 0.0, Errc::bad_config, "augment: noise_lambda must be >= 0");
  require(cfg.noise_sigma >= 0.0, Errc::bad_config, "augment: noise_sigma must be >= 0");
  require(cfg.blur_prob >= 0.0 && cfg.blur_prob <= 1.0, Errc::bad_config,
          "augment: blur_prob must be in [0,1]");
  require(cfg.blur_alpha_lo > 0.0 && cfg.blur_alpha_lo <= cfg.blur_alpha_hi, Errc::bad_config,
          "augment: blur alpha range must satisfy 0 < lo <= hi");
  require(cfg.hu_shift_mag >= 0.0, Errc::bad_config, "augment: hu_shift_mag must be >= 0");
  require(cfg.scale_sigma >= 0.0, Errc::bad_config, "augment: scale_sigma must be >= 0");
}

namespace detail {

inline std::int16_t to_hu(double v) {
  return static_cast<std::int16_t>(std::clamp<long>(std::lround(v), -32768L, 32767L));
}

inline double draw_blur_alpha(const AugmentConfig& cfg, std::mt19937_64& rng) {
  return uniform_range(rng, cfg.blur_alpha_lo, cfg.blur_alpha_hi);
}

inline double draw_rotation(std::mt19937_64& rng) {
  return uniform_range(rng, 0.0, 2.0 * 3.14159265358979323846);
}

inline int draw_hu_shift(const AugmentConfig& cfg, std::mt19937_64& rng) {
  return static_cast<int>(
      std::lround(uniform_range(rng, -cfg.hu_shift_mag, cfg.hu_shift_mag)));
}

}  // namespace detail

// x' = x + m * n with m = min(Poisson(lambda), 1) and n ~ N(0, noise_sigma),
// independently per voxel; the normal draw happens only where the mask fires
// so the RNG stream length matches the mask.
inline Volume masked_gaussian_noise(const Volume& v, const AugmentConfig& cfg,
                                    std::mt19937_64& rng) {
  validate_augment(cfg);
  if (cfg.noise_lambda == 0.0 || cfg.noise_sigma == 0.0) return v;
  Volume out = v;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const int m = std::min(poisson_draw(rng, cfg.noise_lambda), 1);
    if (m == 0) continue;
    out.data[i] = detail::to_hu(out.data[i] + cfg.noise_sigma * normal_unit(rng));
  }
  return out;
}

// Separable Gaussian filter with kernel std-dev alpha (in voxels), radius
// 3*alpha, replicated borders.
inline Volume gaussian_blur_with_alpha(const Volume& v, double alpha) {
  require(alpha > 0.0, Errc::bad_config, "gaussian_blur: alpha must be > 0");
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * alpha)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double ksum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-(static_cast<double>(i) * i) / (2.0 * alpha * alpha));
    kernel[static_cast<std::size_t>(i + radius)] = w;
    ksum += w;
  }
  for (double& w : kernel) w /= ksum;

  const Dims d = v.dims;
  std::vector<double> a(v.data.begin(), v.data.end());
  std::vector<double> b(a.size());

  auto pass = [&](const std::vector<double>& src, std::vector<double>& dst, int axis) {
    const int n[3] = {d.nx, d.ny, d.nz};
    const std::size_t stride[3] = {1, static_cast<std::size_t>(d.nx),
                                   static_cast<std::size_t>(d.nx) * d.ny};
    for (int iz = 0; iz < d.nz; ++iz)
      for (int iy = 0; iy < d.ny; ++iy)
        for (int ix = 0; ix < d.nx; ++ix) {
          const int idx[3] = {ix, iy, iz};
          const std::size_t base = ix * stride[0] + iy * stride[1] + iz * stride[2];
          double acc = 0.0;
          for (int k = -radius; k <= radius; ++k) {
            const int j = std::clamp(idx[axis] + k, 0, n[axis] - 1);
            const std::size_t off = base + (j - idx[axis]) * stride[axis];
            acc += kernel[static_cast<std::size_t>(k + radius)] * src[off];
          }
          dst[base] = acc;
        }
  };
  pass(a, b, 0);
  pass(b, a, 1);
  pass(a, b, 2);

  Volume out;
  out.dims = v.dims;
  out.spacing = v.spacing;
  out.data.resize(v.data.size());
  for (std::size_t i = 0; i < b.size(); ++i) out.data[i] = detail::to_hu(b[i]);
  return out;
}

// With probability blur_prob, blur with alpha ~ U(alpha_lo, alpha_hi);
// otherwise identity. The coin and alpha are always drawn so the RNG stream
// does not depend on the outcome.
inline Volume gaussian_blur(const Volume& v, const AugmentConfig& cfg, std::mt19937_64& rng) {
  validate_augment(cfg);
  const double coin = uniform_unit(rng);
  const double alpha = detail::draw_blur_alpha(cfg, rng);
  if (coin >= cfg.blur_prob) return v;
  return gaussian_blur_with_alpha(v, alpha);
}

// One global additive HU shift, drawn uniformly and rounded to an integer so
// mean(out) - mean(in) equals the shift exactly.
inline Volume hu_shift(const Volume& v, const AugmentConfig& cfg, std::mt19937_64& rng) {
  validate_augment(cfg);
  const int s = detail::draw_hu_shift(cfg, rng);
  if (s == 0) return v;
  Volume out = v;
  for (auto& x : out.data) x = detail::to_hu(static_cast<double>(x) + s);
  return out;
}

inline PointCloud rotate_transverse_by(const PointCloud& pc, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  PointCloud out = pc;
  for (CloudPoint& pt : out.points) {
    const double x = pt.x, y = pt.y;
    pt.x = static_cast<float>(c * x - s * y);
    pt.y = static_cast<float>(s * x + c * y);
  }
  return out;
}

// Random rotation about the z axis (transverse plane); z/hu/p/is_mask kept.
inline PointCloud rotate_transverse(const PointCloud& pc, std::mt19937_64& rng) {
  return rotate_transverse_by(pc, detail::draw_rotation(rng));
}

inline PointCloud anisotropic_scale_by(const PointCloud& pc, const double f[3]) {
  PointCloud out = pc;
  for (CloudPoint& pt : out.points) {
    pt.x = static_cast<float>(pt.x * f[0]);
    pt.y = static_cast<float>(pt.y * f[1]);
    pt.z = static_cast<float>(pt.z * f[2]);
  }
  return out;
}

// Componentwise scale by (1 + g_i), g_i ~ N(0, scale_sigma), one draw per axis
// per cloud. Nonpositive factors are redrawn a few times, then rejected.
inline PointCloud anisotropic_scale(const PointCloud& pc, const AugmentConfig& cfg,
                                    std::mt19937_64& rng) {
  validate_augment(cfg);
  double f[3];
  for (int attempt = 0; attempt < 10; ++attempt) {
    bool ok = true;
    for (double& fi : f) {
      fi = 1.0 + cfg.scale_sigma * normal_unit(rng);
      if (fi <= 0.0) ok = false;
    }
    if (ok) return anisotropic_scale_by(pc, f);
  }
  raise(Errc::degenerate_scale, "anisotropic_scale: drew nonpositive factor 10 times");
}

// Equal-class index batches; the minority class is upsampled with
// replacement. Call next() repeatedly for a stream of batches.
class BalancedBatches {
 public:
  BalancedBatches(const std::vector<int>& labels, int batch, std::uint64_t seed)
      : batch_(batch), rng_(make_rng(seed)) {
    require(batch > 0 && batch % 2 == 0, Errc::bad_config,
            "balanced_batches: batch must be positive and even");
    for (std::size_t i = 0; i < labels.size(); ++i)
      (labels[i] ? pos_ : neg_).push_back(i);
    require(!pos_.empty() && !neg_.empty(), Errc::single_class_dataset,
            "balanced_batches: need at least one sample of each class");
  }

  std::vector<std::size_t> next() {
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(batch_));
    for (int i = 0; i < batch_ / 2; ++i) out.push_back(pos_[uniform_index(rng_, pos_.size())]);
    for (int i = 0; i < batch_ / 2; ++i) out.push_back(neg_[uniform_index(rng_, neg_.size())]);
    return out;
  }

 private:
  int batch_;
  std::vector<std::size_t> pos_, neg_;
  std::mt19937_64 rng_;
};

}  // namespace pcfpr

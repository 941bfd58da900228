#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <unistd.h>

#include "warpfake/imaging.hpp"
#include "warpfake/raster.hpp"
#include "warpfake/rng.hpp"

namespace warpfake::testing {

/// Uniform noise low-passed by a wide Gaussian: content with little energy
/// above the sampling limit, so resampling loss stays small.
inline ImageBuffer smooth_image(int w, int h, std::uint64_t seed, int radius = 6) {
  Rng rng(seed);
  ImageBuffer img(w, h);
  for (float& v : img.data()) v = static_cast<float>(rng.uniform01());
  const ImageBuffer blurred = gaussian_blur(img, GaussianKernel(2 * radius + 1, radius / 2.0));
  // Stretch the contrast back up so the test is not trivially easy.
  float lo = 1.0f, hi = 0.0f;
  for (float v : blurred.data()) lo = std::min(lo, v), hi = std::max(hi, v);
  ImageBuffer out = blurred;
  for (float& v : out.data()) v = (v - lo) / (hi - lo);
  return out;
}

inline ImageBuffer random_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  ImageBuffer img(w, h);
  for (float& v : img.data()) v = static_cast<float>(rng.uniform01());
  return img;
}

/// PSNR (peak 1) over the pixels where `keep(x, y)` is true.
template <int C, typename Keep>
double psnr_where(const Raster<C>& a, const Raster<C>& b, Keep keep) {
  double se = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (!keep(x, y)) continue;
      for (int c = 0; c < C; ++c) {
        const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
        se += d * d;
        ++n;
      }
    }
  }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  const double mse = se / static_cast<double>(n);
  return mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("warpfake_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace warpfake::testing

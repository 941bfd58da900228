#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "warpfake/errors.hpp"

namespace warpfake {

/// Row-major, channel-interleaved float raster with values in [0, 1].
template <int Channels>
class Raster {
 public:
  static constexpr int kChannels = Channels;

  Raster() = default;

  Raster(int width, int height, float fill = 0.0f) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height * Channels, fill);
  }

  Raster(int width, int height, std::vector<float> data)
      : width_(width), height_(height), data_(std::move(data)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height * Channels) {
      throw DimensionMismatch("raster data length does not match " + std::to_string(width) +
                              "x" + std::to_string(height) + "x" + std::to_string(Channels));
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  float& at(int x, int y, int c = 0) { return data_[offset(x, y, c)]; }
  float at(int x, int y, int c = 0) const { return data_[offset(x, y, c)]; }

  /// Pixel read with coordinates clamped to the nearest border pixel.
  float clamped(int x, int y, int c = 0) const {
    return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1), c);
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

  template <int D>
  bool same_shape(const Raster<D>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  void clamp_values() {
    for (float& v : data_) v = std::clamp(v, 0.0f, 1.0f);
  }

  bool operator==(const Raster& other) const = default;

 private:
  static void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
      throw InvalidArgument("raster dimensions must be >= 1, got " + std::to_string(width) + "x" +
                            std::to_string(height));
    }
  }

  std::size_t offset(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * Channels + c;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

using ImageBuffer = Raster<3>;
/// Single-channel blend weights: 1 = take the warped face, 0 = keep the original.
using Mask = Raster<1>;

}  // namespace warpfake

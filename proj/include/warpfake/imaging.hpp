#pragma once

#include <span>
#include <vector>

#include "warpfake/geometry.hpp"
#include "warpfake/raster.hpp"

namespace warpfake {

/// Normalized, symmetric 2-D Gaussian kernel. Stored as its 1-D factor; the
/// dense weights are the outer product of the factor with itself.
class GaussianKernel {
 public:
  /// size must be odd and >= 1; sigma > 0.
  GaussianKernel(int size, double sigma);

  /// Size-1 kernel; blurring with it is a no-op.
  static GaussianKernel identity();
  /// 0.3 * ((size - 1) / 2 - 1) + 0.8, the usual sigma for a given aperture.
  static double default_sigma(int size);
  /// Kernel of size 2 * radius + 1 with the default sigma for that size.
  static GaussianKernel with_radius(int radius);

  int size() const { return size_; }
  int radius() const { return size_ / 2; }
  double sigma() const { return sigma_; }
  /// 1-D taps indexed by offset from center, i.e. taps()[radius() + d].
  std::span<const double> taps() const { return taps_; }
  /// Dense size x size weights, row-major.
  std::vector<double> weights() const;

 private:
  int size_;
  double sigma_;
  std::vector<double> taps_;
};

/// Separable per-channel convolution with clamp-to-edge borders.
template <int C>
Raster<C> gaussian_blur(const Raster<C>& image, const GaussianKernel& kernel);

/// Identity values are brightness = contrast = sharpness = 1, distortion = 0.
struct ColorJitterParams {
  double brightness = 1.0;
  double contrast = 1.0;
  double sharpness = 1.0;
  /// Peak horizontal row displacement in px.
  double distortion = 0.0;

  void validate() const;
};

/// brightness -> contrast -> sharpness -> distortion, then clamp to [0, 1].
/// Factors at their identity value are skipped, so identity params return the
/// input unchanged.
ImageBuffer apply_color_jitter(const ImageBuffer& image, const ColorJitterParams& params);

/// Mean Rec.601 luma over all pixels.
double mean_luminance(const ImageBuffer& image);

enum class ShapeMode {
  kWholeFace,
  kConvexPolygon,
};

/// Convex hull in monotone-chain order with collinear points dropped.
/// Throws DegeneratePolygon when fewer than 3 non-collinear points remain.
std::vector<Point2> convex_hull(std::span<const Point2> points);

/// Scanline fill of a convex polygon sampled at integer pixel coordinates
/// under the half-open rule: a pixel is covered when ymin <= y < ymax and
/// xl <= x < xr on its row. Polygons sharing an edge never double-cover.
Mask fill_convex_polygon(int width, int height, std::span<const Point2> hull);

/// Landmarks whose hull bounds the shape-augmentation polygon: eyebrows
/// (17-26) and the outer lower lip (54-59).
std::vector<Point2> shape_polygon_points(const LandmarkSet& landmarks);

/// WholeFace covers the full width x height rectangle; ConvexPolygon covers
/// the hull of shape_polygon_points().
Mask polygon_mask(int width, int height, const LandmarkSet& landmarks, ShapeMode mode);

/// Gaussian-softened mask; radius 0 returns the mask unchanged.
Mask feather_mask(const Mask& mask, int feather_px);

/// mask * warped_face + (1 - mask) * original after feathering. Pixels where
/// the feathered mask is exactly 0 are copied from `original` bit for bit.
ImageBuffer composite(const ImageBuffer& original, const ImageBuffer& warped_face, const Mask& mask,
                      int feather_px);

ImageBuffer flip_horizontal(const ImageBuffer& image);

}  // namespace warpfake

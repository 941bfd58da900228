#include "warpfake/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace warpfake {

GaussianKernel::GaussianKernel(int size, double sigma) : size_(size), sigma_(sigma) {
  if (size < 1 || size % 2 == 0) {
    throw InvalidArgument("Gaussian kernel size must be odd and >= 1, got " + std::to_string(size));
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("Gaussian sigma must be > 0");
  const int r = size / 2;
  taps_.resize(size);
  for (int d = 0; d <= r; ++d) {
    const double w = std::exp(-(d * d) / (2.0 * sigma * sigma));
    taps_[r + d] = w;
    taps_[r - d] = w;
  }
  double sum = 0.0;
  for (double w : taps_) sum += w;
  for (double& w : taps_) w /= sum;
  // Normalizing each tap independently can leave the mirrored pair unequal in
  // the last bit; copy so the kernel is exactly symmetric.
  for (int d = 1; d <= r; ++d) taps_[r - d] = taps_[r + d];
}

GaussianKernel GaussianKernel::identity() { return GaussianKernel(1, 1.0); }

double GaussianKernel::default_sigma(int size) { return 0.3 * ((size - 1) * 0.5 - 1.0) + 0.8; }

GaussianKernel GaussianKernel::with_radius(int radius) {
  if (radius < 0) throw InvalidArgument("kernel radius must be >= 0");
  if (radius == 0) return identity();
  const int size = 2 * radius + 1;
  return GaussianKernel(size, default_sigma(size));
}

std::vector<double> GaussianKernel::weights() const {
  std::vector<double> w(static_cast<std::size_t>(size_) * size_);
  for (int i = 0; i < size_; ++i) {
    for (int j = 0; j < size_; ++j) w[static_cast<std::size_t>(i) * size_ + j] = taps_[i] * taps_[j];
  }
  return w;
}

template <int C>
Raster<C> gaussian_blur(const Raster<C>& image, const GaussianKernel& kernel) {
  const int r = kernel.radius();
  if (r == 0) return image;
  const int w = image.width(), h = image.height();
  const std::span<const double> taps = kernel.taps();
  const double center = taps[r];

  // Mirrored taps are summed as w_d * (left + right) so that the result is
  // exactly mirror-symmetric under horizontal flips.
  std::vector<double> tmp(static_cast<std::size_t>(w) * h * C);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = center * image.at(x, y, c);
        for (int d = 1; d <= r; ++d) {
          acc += taps[r + d] * (static_cast<double>(image.clamped(x - d, y, c)) +
                                static_cast<double>(image.clamped(x + d, y, c)));
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * C + c] = acc;
      }
    }
  }
  auto at_tmp = [&](int x, int y, int c) {
    y = std::clamp(y, 0, h - 1);
    return tmp[(static_cast<std::size_t>(y) * w + x) * C + c];
  };
  Raster<C> out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = center * at_tmp(x, y, c);
        for (int d = 1; d <= r; ++d) acc += taps[r + d] * (at_tmp(x, y - d, c) + at_tmp(x, y + d, c));
        out.at(x, y, c) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

template Raster<1> gaussian_blur<1>(const Raster<1>&, const GaussianKernel&);
template Raster<3> gaussian_blur<3>(const Raster<3>&, const GaussianKernel&);

void ColorJitterParams::validate() const {
  const bool ok = std::isfinite(brightness) && std::isfinite(contrast) && std::isfinite(sharpness) &&
                  std::isfinite(distortion) && brightness >= 0.0 && contrast >= 0.0 &&
                  sharpness >= 0.0 && distortion >= 0.0;
  if (!ok) throw InvalidArgument("color jitter factors must be finite and >= 0");
}

double mean_luminance(const ImageBuffer& image) {
  double sum = 0.0;
  const std::span<const float> d = image.data();
  for (std::size_t i = 0; i < d.size(); i += 3) {
    sum += 0.299 * d[i] + 0.587 * d[i + 1] + 0.114 * d[i + 2];
  }
  return sum / static_cast<double>(image.pixel_count());
}

ImageBuffer apply_color_jitter(const ImageBuffer& image, const ColorJitterParams& params) {
  params.validate();
  ImageBuffer out = image;
  std::span<float> d = out.data();

  if (params.brightness != 1.0) {
    for (float& v : d) v = static_cast<float>(v * params.brightness);
  }
  if (params.contrast != 1.0) {
    const double mean = mean_luminance(out);
    for (float& v : d) v = static_cast<float>((v - mean) * params.contrast + mean);
  }
  if (params.sharpness != 1.0) {
    // Interpolate (or extrapolate, for factors > 1) from a softened copy.
    // Intermediate values may leave [0, 1]; only the final result is clamped.
    ImageBuffer clipped = out;
    clipped.clamp_values();
    const ImageBuffer soft = gaussian_blur(clipped, GaussianKernel(3, GaussianKernel::default_sigma(3)));
    const std::span<const float> s = soft.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = static_cast<float>(s[i] + params.sharpness * (static_cast<double>(d[i]) - s[i]));
    }
  }
  if (params.distortion != 0.0) {
    const ImageBuffer src = out;
    const int w = out.width(), h = out.height();
    for (int y = 0; y < h; ++y) {
      const double shift = params.distortion * std::sin(2.0 * std::numbers::pi * y / h);
      for (int x = 0; x < w; ++x) {
        const double sx = x - shift;
        const double fx0 = std::floor(sx);
        const double f = sx - fx0;
        const int x0 = static_cast<int>(fx0);
        for (int c = 0; c < 3; ++c) {
          out.at(x, y, c) = static_cast<float>((1.0 - f) * src.clamped(x0, y, c) +
                                               f * src.clamped(x0 + 1, y, c));
        }
      }
    }
  }
  out.clamp_values();
  return out;
}

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

std::vector<Point2> convex_hull(std::span<const Point2> points) {
  std::vector<Point2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Point2& l, const Point2& r) {
    return l.x < r.x || (l.x == r.x && l.y < r.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) throw DegeneratePolygon("fewer than 3 distinct points");

  // Andrew's monotone chain; popping on cross <= 0 drops collinear vertices.
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const Point2& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) throw DegeneratePolygon("all points are collinear");
  return hull;
}

Mask fill_convex_polygon(int width, int height, std::span<const Point2> hull) {
  Mask mask(width, height, 0.0f);
  if (hull.size() < 3) throw DegeneratePolygon("polygon needs at least 3 vertices");
  double ymin = hull[0].y, ymax = hull[0].y;
  for (const Point2& p : hull) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const int row_begin = std::max(0, static_cast<int>(std::ceil(ymin)));
  for (int y = row_begin; y < height && y < ymax; ++y) {
    double xl = std::numeric_limits<double>::infinity();
    double xr = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hull.size(); ++i) {
      const Point2& p = hull[i];
      const Point2& q = hull[(i + 1) % hull.size()];
      const double lo = std::min(p.y, q.y), hi = std::max(p.y, q.y);
      if (!(lo <= y && y < hi)) continue;
      const double x = p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y);
      xl = std::min(xl, x);
      xr = std::max(xr, x);
    }
    if (!(xl < xr)) continue;
    const int x_begin = std::max(0, static_cast<int>(std::ceil(xl)));
    const int x_end = std::min(width, static_cast<int>(std::ceil(xr)));
    for (int x = x_begin; x < x_end; ++x) mask.at(x, y) = 1.0f;
  }
  return mask;
}

std::vector<Point2> shape_polygon_points(const LandmarkSet& landmarks) {
  std::vector<Point2> pts;
  for (const Point2& p : landmarks.range(ibug::kBrowBegin, ibug::kBrowEnd)) pts.push_back(p);
  for (const Point2& p : landmarks.range(ibug::kLowerLipBegin, ibug::kLowerLipEnd)) pts.push_back(p);
  return pts;
}

Mask polygon_mask(int width, int height, const LandmarkSet& landmarks, ShapeMode mode) {
  if (mode == ShapeMode::kWholeFace) return Mask(width, height, 1.0f);
  const std::vector<Point2> hull = convex_hull(shape_polygon_points(landmarks));
  return fill_convex_polygon(width, height, hull);
}

Mask feather_mask(const Mask& mask, int feather_px) {
  if (feather_px < 0) throw InvalidArgument("feather radius must be >= 0");
  if (feather_px == 0) return mask;
  return gaussian_blur(mask, GaussianKernel::with_radius(feather_px));
}

ImageBuffer composite(const ImageBuffer& original, const ImageBuffer& warped_face, const Mask& mask,
                      int feather_px) {
  if (!original.same_shape(warped_face) || !original.same_shape(mask)) {
    throw DimensionMismatch("composite inputs must share dimensions");
  }
  const Mask soft = feather_mask(mask, feather_px);
  ImageBuffer out = original;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const double m = soft.at(x, y);
      if (m == 0.0) continue;
      for (int c = 0; c < 3; ++c) {
        const double v = m * warped_face.at(x, y, c) + (1.0 - m) * original.at(x, y, c);
        out.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

ImageBuffer flip_horizontal(const ImageBuffer& image) {
  ImageBuffer out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(image.width() - 1 - x, y, c) = image.at(x, y, c);
    }
  }
  return out;
}

}  // namespace warpfake

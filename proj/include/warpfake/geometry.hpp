#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "warpfake/raster.hpp"

namespace warpfake {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Point2&) const = default;
};

inline constexpr std::size_t kLandmarkCount = 68;

/// Index ranges of the iBUG-68 annotation scheme, half-open.
namespace ibug {
inline constexpr std::size_t kJawBegin = 0, kJawEnd = 17;
inline constexpr std::size_t kBrowBegin = 17, kBrowEnd = 27;
inline constexpr std::size_t kNoseBegin = 27, kNoseEnd = 36;
inline constexpr std::size_t kEyeBegin = 36, kEyeEnd = 48;
inline constexpr std::size_t kLeftEyeBegin = 36, kLeftEyeEnd = 42;
inline constexpr std::size_t kRightEyeBegin = 42, kRightEyeEnd = 48;
inline constexpr std::size_t kMouthBegin = 48, kMouthEnd = 68;
/// Outer lower lip, used as the bottom edge of the shape-augmentation polygon.
inline constexpr std::size_t kLowerLipBegin = 54, kLowerLipEnd = 60;

/// Left/right counterpart of each landmark under a horizontal mirror.
const std::array<std::size_t, kLandmarkCount>& mirror_index();
}  // namespace ibug

struct SimilarityTransform;

/// 68 facial landmarks in image pixel coordinates, iBUG-68 order.
class LandmarkSet {
 public:
  explicit LandmarkSet(const std::array<Point2, kLandmarkCount>& points);
  /// Throws InvalidArgument unless `points` has exactly 68 finite entries.
  static LandmarkSet from_points(std::span<const Point2> points);

  const Point2& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Point2> points() const { return points_; }
  std::span<const Point2> range(std::size_t begin, std::size_t end) const {
    return std::span<const Point2>(points_).subspan(begin, end - begin);
  }

  bool any_inside(int width, int height) const;
  /// Throws InvalidArgument when no landmark lies inside a width x height image.
  void require_inside(int width, int height) const;

  LandmarkSet transformed(const SimilarityTransform& t) const;

  bool operator==(const LandmarkSet&) const = default;

 private:
  std::array<Point2, kLandmarkCount> points_;
};

/// Sidecar format: 68 lines of "x y" decimal floats.
LandmarkSet parse_landmarks(std::istream& in);
LandmarkSet read_landmarks(const std::filesystem::path& path);
void write_landmarks(std::ostream& out, const LandmarkSet& landmarks);

/// Canonical mean face shape in a unit frame, plus the side length of the
/// aligned face square at scale 1.
class FaceTemplate {
 public:
  FaceTemplate(const std::array<Point2, kLandmarkCount>& unit_points, int target_size);

  /// Built-in symmetrized mean iBUG-68 shape, target size 128 px.
  static const FaceTemplate& canonical();

  std::span<const Point2> unit_points() const { return points_; }
  int target_size() const { return target_size_; }
  /// Template points in pixels of the aligned square at the given scale.
  std::vector<Point2> scaled_points(double scale) const;
  /// Side length in px of the aligned square at the given scale.
  int aligned_size(double scale) const;

 private:
  std::array<Point2, kLandmarkCount> points_;
  int target_size_;
};

/// x' = a*x - b*y + tx, y' = b*x + a*y + ty.
struct SimilarityTransform {
  double a = 1.0;
  double b = 0.0;
  double tx = 0.0;
  double ty = 0.0;

  static SimilarityTransform identity() { return {}; }
  static SimilarityTransform from_params(double scale, double theta, double tx, double ty);

  double scale() const;
  double rotation() const;
  Point2 apply(Point2 p) const { return {a * p.x - b * p.y + tx, b * p.x + a * p.y + ty}; }

  bool operator==(const SimilarityTransform&) const = default;
};

/// Exact analytic inverse. Throws NonInvertible if the scale is zero or not finite.
SimilarityTransform invert(const SimilarityTransform& t);
/// outer ∘ inner.
SimilarityTransform compose(const SimilarityTransform& outer, const SimilarityTransform& inner);

/// Closed-form least-squares similarity (no reflection) mapping src onto dst.
/// Throws DegenerateConfiguration when all src points coincide.
SimilarityTransform fit_similarity(std::span<const Point2> src, std::span<const Point2> dst);

/// Sum of squared distances between t(src[i]) and dst[i].
double alignment_residual(const SimilarityTransform& t, std::span<const Point2> src,
                          std::span<const Point2> dst);

/// Transform taking image landmarks onto the template scaled by
/// `scale * template.target_size()`, fitted over all 68 points.
SimilarityTransform estimate_alignment(const LandmarkSet& landmarks, const FaceTemplate& face_template,
                                       double scale);

enum class BorderMode {
  kClampToEdge,
  kZero,
};

/// Bilinear sample at continuous pixel coordinates (pixel centers at integers).
template <int C>
float sample_bilinear(const Raster<C>& src, double x, double y, int channel, BorderMode border);

/// Output pixel (u, v) is sampled from `src` at t^-1(u, v), so `t` maps source
/// coordinates to output coordinates.
template <int C>
Raster<C> warp(const Raster<C>& src, const SimilarityTransform& t, int out_w, int out_h,
               BorderMode border = BorderMode::kClampToEdge);

}  // namespace warpfake

#include "warpfake/geometry.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace warpfake {

namespace {

void check_finite(const Point2& p, std::size_t i) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw InvalidArgument("landmark " + std::to_string(i) + " is not finite");
  }
}

}  // namespace

LandmarkSet::LandmarkSet(const std::array<Point2, kLandmarkCount>& points) : points_(points) {
  for (std::size_t i = 0; i < points_.size(); ++i) check_finite(points_[i], i);
}

LandmarkSet LandmarkSet::from_points(std::span<const Point2> points) {
  if (points.size() != kLandmarkCount) {
    throw InvalidArgument("expected 68 landmarks, got " + std::to_string(points.size()));
  }
  std::array<Point2, kLandmarkCount> arr{};
  std::copy(points.begin(), points.end(), arr.begin());
  return LandmarkSet(arr);
}

bool LandmarkSet::any_inside(int width, int height) const {
  for (const Point2& p : points_) {
    if (p.x >= 0.0 && p.y >= 0.0 && p.x <= width - 1.0 && p.y <= height - 1.0) return true;
  }
  return false;
}

void LandmarkSet::require_inside(int width, int height) const {
  if (!any_inside(width, height)) {
    throw InvalidArgument("no landmark lies inside the " + std::to_string(width) + "x" +
                          std::to_string(height) + " image");
  }
}

LandmarkSet LandmarkSet::transformed(const SimilarityTransform& t) const {
  std::array<Point2, kLandmarkCount> out{};
  for (std::size_t i = 0; i < kLandmarkCount; ++i) out[i] = t.apply(points_[i]);
  return LandmarkSet(out);
}

LandmarkSet parse_landmarks(std::istream& in) {
  std::vector<Point2> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    Point2 p;
    std::string extra;
    if (!(fields >> p.x >> p.y) || (fields >> extra)) {
      throw FormatError("landmark line " + std::to_string(line_no) + " is not \"x y\"");
    }
    points.push_back(p);
  }
  return LandmarkSet::from_points(points);
}

LandmarkSet read_landmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open landmarks file " + path.string());
  return parse_landmarks(in);
}

void write_landmarks(std::ostream& out, const LandmarkSet& landmarks) {
  const auto old_flags = out.flags();
  const auto old_precision = out.precision();
  out << std::setprecision(17);
  for (const Point2& p : landmarks.points()) out << p.x << ' ' << p.y << '\n';
  out.flags(old_flags);
  out.precision(old_precision);
}

SimilarityTransform SimilarityTransform::from_params(double scale, double theta, double tx, double ty) {
  return {scale * std::cos(theta), scale * std::sin(theta), tx, ty};
}

double SimilarityTransform::scale() const { return std::hypot(a, b); }

double SimilarityTransform::rotation() const { return std::atan2(b, a); }

SimilarityTransform invert(const SimilarityTransform& t) {
  const double s2 = t.a * t.a + t.b * t.b;
  if (!(s2 > 0.0) || !std::isfinite(s2)) {
    throw NonInvertible("similarity transform has zero or non-finite scale");
  }
  const double a = t.a / s2;
  const double b = -t.b / s2;
  // t' = -A^-1 t, where A^-1 = [[a, -b], [b, a]] in the same parametrization.
  return {a, b, -(a * t.tx - b * t.ty), -(b * t.tx + a * t.ty)};
}

SimilarityTransform compose(const SimilarityTransform& outer, const SimilarityTransform& inner) {
  // Complex multiplication: (a1 + i b1)(a2 + i b2).
  return {outer.a * inner.a - outer.b * inner.b, outer.a * inner.b + outer.b * inner.a,
          outer.a * inner.tx - outer.b * inner.ty + outer.tx,
          outer.b * inner.tx + outer.a * inner.ty + outer.ty};
}

SimilarityTransform fit_similarity(std::span<const Point2> src, std::span<const Point2> dst) {
  if (src.size() != dst.size() || src.empty()) {
    throw InvalidArgument("fit_similarity needs equal, non-empty point lists");
  }
  const double n = static_cast<double>(src.size());
  Point2 src_mean, dst_mean;
  for (std::size_t i = 0; i < src.size(); ++i) {
    src_mean.x += src[i].x;
    src_mean.y += src[i].y;
    dst_mean.x += dst[i].x;
    dst_mean.y += dst[i].y;
  }
  src_mean = {src_mean.x / n, src_mean.y / n};
  dst_mean = {dst_mean.x / n, dst_mean.y / n};

  // Treating points as complex numbers, the optimal rotation+scale z = a + ib
  // minimizes sum |z p_i - q_i|^2 over centered p, q: z = sum(conj(p) q) / sum |p|^2.
  // This is the Umeyama solution restricted to det > 0.
  double var = 0.0, dot = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double px = src[i].x - src_mean.x, py = src[i].y - src_mean.y;
    const double qx = dst[i].x - dst_mean.x, qy = dst[i].y - dst_mean.y;
    var += px * px + py * py;
    dot += px * qx + py * qy;
    cross += px * qy - py * qx;
  }
  if (!(var > 0.0)) throw DegenerateConfiguration("all source points coincide");

  SimilarityTransform t;
  t.a = dot / var;
  t.b = cross / var;
  t.tx = dst_mean.x - (t.a * src_mean.x - t.b * src_mean.y);
  t.ty = dst_mean.y - (t.b * src_mean.x + t.a * src_mean.y);
  if (!(t.scale() > 0.0)) {
    throw DegenerateConfiguration("target points coincide; fitted scale is zero");
  }
  return t;
}

double alignment_residual(const SimilarityTransform& t, std::span<const Point2> src,
                          std::span<const Point2> dst) {
  double sum = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    const Point2 p = t.apply(src[i]);
    const double dx = p.x - dst[i].x, dy = p.y - dst[i].y;
    sum += dx * dx + dy * dy;
  }
  return sum;
}

SimilarityTransform estimate_alignment(const LandmarkSet& landmarks, const FaceTemplate& face_template,
                                       double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("alignment scale must be > 0");
  const std::vector<Point2> target = face_template.scaled_points(scale);
  return fit_similarity(landmarks.points(), target);
}

template <int C>
float sample_bilinear(const Raster<C>& src, double x, double y, int channel, BorderMode border) {
  const double fx0 = std::floor(x), fy0 = std::floor(y);
  const double fx = x - fx0, fy = y - fy0;
  const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0);
  auto fetch = [&](int px, int py) -> double {
    if (border == BorderMode::kClampToEdge) return src.clamped(px, py, channel);
    if (px < 0 || py < 0 || px >= src.width() || py >= src.height()) return 0.0;
    return src.at(px, py, channel);
  };
  const double top = (1.0 - fx) * fetch(x0, y0) + fx * fetch(x0 + 1, y0);
  const double bottom = (1.0 - fx) * fetch(x0, y0 + 1) + fx * fetch(x0 + 1, y0 + 1);
  const double v = (1.0 - fy) * top + fy * bottom;
  return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

template <int C>
Raster<C> warp(const Raster<C>& src, const SimilarityTransform& t, int out_w, int out_h,
               BorderMode border) {
  if (out_w < 1 || out_h < 1) throw InvalidArgument("warp output dimensions must be >= 1");
  const SimilarityTransform inv = invert(t);
  Raster<C> out(out_w, out_h);
  for (int v = 0; v < out_h; ++v) {
    for (int u = 0; u < out_w; ++u) {
      const Point2 p = inv.apply({static_cast<double>(u), static_cast<double>(v)});
      for (int c = 0; c < C; ++c) out.at(u, v, c) = sample_bilinear(src, p.x, p.y, c, border);
    }
  }
  return out;
}

template float sample_bilinear<1>(const Raster<1>&, double, double, int, BorderMode);
template float sample_bilinear<3>(const Raster<3>&, double, double, int, BorderMode);
template Raster<1> warp<1>(const Raster<1>&, const SimilarityTransform&, int, int, BorderMode);
template Raster<3> warp<3>(const Raster<3>&, const SimilarityTransform&, int, int, BorderMode);

}  // namespace warpfake

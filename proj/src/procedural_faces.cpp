#include "warpfake/procedural_faces.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace warpfake {

namespace {

struct Appearance {
  float skin[3];
  float background[3];
  float feature[3];
  float lip[3];
  double face_size;
  double rotation;
  double cx, cy;
};

Appearance draw_appearance(const ProceduralFaceOptions& o, Rng& rng) {
  Appearance a{};
  const double tone = rng.uniform(0.35, 0.8);
  a.skin[0] = static_cast<float>(tone + 0.12);
  a.skin[1] = static_cast<float>(tone * 0.82);
  a.skin[2] = static_cast<float>(tone * 0.68);
  for (float& c : a.background) c = static_cast<float>(rng.uniform(0.15, 0.85));
  const double dark = rng.uniform(0.05, 0.25);
  a.feature[0] = static_cast<float>(dark);
  a.feature[1] = static_cast<float>(dark * 0.9);
  a.feature[2] = static_cast<float>(dark * 0.85);
  a.lip[0] = static_cast<float>(rng.uniform(0.5, 0.75));
  a.lip[1] = static_cast<float>(rng.uniform(0.2, 0.35));
  a.lip[2] = static_cast<float>(rng.uniform(0.2, 0.35));
  a.face_size = rng.uniform(o.face_size_min, o.face_size_max);
  a.rotation = rng.uniform(-o.max_rotation_deg, o.max_rotation_deg) * std::numbers::pi / 180.0;
  a.cx = o.width / 2.0 + rng.uniform(-o.max_offset, o.max_offset);
  a.cy = o.height / 2.0 + rng.uniform(-o.max_offset, o.max_offset);
  return a;
}

void paint(ImageBuffer& img, const Mask& region, const float color[3], float opacity) {
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const float m = region.at(x, y) * opacity;
      if (m == 0.0f) continue;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = (1.0f - m) * img.at(x, y, c) + m * color[c];
    }
  }
}

void paint_hull(ImageBuffer& img, std::span<const Point2> pts, const float color[3], float opacity) {
  paint(img, fill_convex_polygon(img.width(), img.height(), convex_hull(pts)), color, opacity);
}

// Thick polyline drawn as a chain of quads.
void paint_stroke(ImageBuffer& img, std::span<const Point2> pts, double half_width,
                  const float color[3]) {
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Point2 p = pts[i], q = pts[i + 1];
    const double dx = q.x - p.x, dy = q.y - p.y;
    const double len = std::hypot(dx, dy);
    if (len == 0.0) continue;
    const double nx = -dy / len * half_width, ny = dx / len * half_width;
    const Point2 quad[] = {{p.x + nx, p.y + ny}, {q.x + nx, q.y + ny}, {q.x - nx, q.y - ny},
                           {p.x - nx, p.y - ny}};
    paint_hull(img, quad, color, 1.0f);
  }
}

FaceExample render(const ProceduralFaceOptions& o, const Appearance& a, Rng& rng) {
  const SimilarityTransform place = compose(
      SimilarityTransform::from_params(1.0, a.rotation, a.cx, a.cy),
      SimilarityTransform{a.face_size, 0.0, -0.5 * a.face_size, -0.5 * a.face_size});
  std::array<Point2, kLandmarkCount> pts{};
  const auto unit = FaceTemplate::canonical().unit_points();
  for (std::size_t i = 0; i < kLandmarkCount; ++i) {
    const Point2 p = place.apply(unit[i]);
    pts[i] = {p.x + rng.uniform(-o.landmark_noise, o.landmark_noise),
              p.y + rng.uniform(-o.landmark_noise, o.landmark_noise)};
  }
  const LandmarkSet landmarks(pts);

  ImageBuffer img(o.width, o.height);
  // Background: vertical shading plus diagonal stripes.
  const double stripe = rng.uniform(5.0, 11.0);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int y = 0; y < o.height; ++y) {
    for (int x = 0; x < o.width; ++x) {
      const double shade = 0.85 + 0.3 * y / o.height;
      const double wave = 0.06 * std::sin((x + y) * 2.0 * std::numbers::pi / stripe + phase);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(a.background[c] * shade + wave);
    }
  }

  // Skin: hull of the jaw plus brows lifted toward the forehead.
  std::vector<Point2> skin(landmarks.points().begin(), landmarks.points().begin() + ibug::kBrowEnd);
  const Point2 nose_top = landmarks[27], chin = landmarks[8];
  const double up_x = nose_top.x - chin.x, up_y = nose_top.y - chin.y;
  for (std::size_t i = ibug::kBrowBegin; i < ibug::kBrowEnd; ++i) {
    skin.push_back({landmarks[i].x + 0.35 * up_x, landmarks[i].y + 0.35 * up_y});
  }
  paint_hull(img, skin, a.skin, 1.0f);

  const double stroke = std::max(1.0, a.face_size / 45.0);
  paint_stroke(img, landmarks.range(17, 22), stroke, a.feature);
  paint_stroke(img, landmarks.range(22, 27), stroke, a.feature);
  paint_stroke(img, landmarks.range(27, 31), 0.6 * stroke, a.feature);
  paint_stroke(img, landmarks.range(31, 36), 0.6 * stroke, a.feature);
  paint_hull(img, landmarks.range(ibug::kLeftEyeBegin, ibug::kLeftEyeEnd), a.feature, 0.9f);
  paint_hull(img, landmarks.range(ibug::kRightEyeBegin, ibug::kRightEyeEnd), a.feature, 0.9f);
  paint_hull(img, landmarks.range(48, 60), a.lip, 1.0f);

  if (o.grain > 0.0) {
    for (float& v : img.data()) v += static_cast<float>(rng.uniform(-o.grain, o.grain));
  }
  img.clamp_values();
  if (o.smoothing_sigma > 0.0) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * o.smoothing_sigma)));
    img = gaussian_blur(img, GaussianKernel(2 * radius + 1, o.smoothing_sigma));
  }
  return FaceExample{std::move(img), landmarks, {}, std::nullopt};
}

}  // namespace

FaceExample make_procedural_face(const ProceduralFaceOptions& options, std::uint64_t seed) {
  Rng rng = Rng::derive(seed, {0x66616365});
  const Appearance a = draw_appearance(options, rng);
  FaceExample ex = render(options, a, rng);
  ex.source_id = "face_" + std::to_string(seed);
  return ex;
}

FaceExample make_procedural_frame(const ProceduralFaceOptions& options, std::uint64_t identity_seed,
                                  int frame) {
  Rng identity = Rng::derive(identity_seed, {0x66616365});
  Appearance a = draw_appearance(options, identity);
  Rng rng = Rng::derive(identity_seed, {0x6672616d, static_cast<std::uint64_t>(frame)});
  a.rotation += rng.uniform(-0.05, 0.05);
  a.cx += rng.uniform(-2.0, 2.0);
  a.cy += rng.uniform(-2.0, 2.0);
  a.face_size *= rng.uniform(0.97, 1.03);
  FaceExample ex = render(options, a, rng);
  ex.source_id = "video_" + std::to_string(identity_seed) + "_frame_" + std::to_string(frame);
  ex.video_id = "video_" + std::to_string(identity_seed);
  return ex;
}

}  // namespace warpfake

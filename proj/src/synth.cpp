#include "warpfake/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "warpfake/parallel.hpp"

namespace warpfake {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void check_range(const JitterRange& r, double identity, const char* name) {
  require(std::isfinite(r.min) && std::isfinite(r.max) && r.min >= 0.0 && r.min <= r.max,
          std::string(name) + " range must satisfy 0 <= min <= max");
  require(r.min <= identity && identity <= r.max,
          std::string(name) + " range must contain its identity value");
}

FaceTemplate template_for(const SynthConfig& cfg) {
  std::array<Point2, kLandmarkCount> pts{};
  const auto unit = FaceTemplate::canonical().unit_points();
  std::copy(unit.begin(), unit.end(), pts.begin());
  return FaceTemplate(pts, cfg.target_size);
}

// Stream tag for batch-level decisions, distinct from any sample index.
constexpr std::uint64_t kBatchStream = ~0ULL;

}  // namespace

void SynthConfig::validate() const {
  require(!scales.empty(), "scales must be non-empty");
  for (double s : scales) require(std::isfinite(s) && s > 0.0, "scales must all be > 0");
  require(target_size >= 1, "target_size must be >= 1");
  require(blur_size >= 1 && blur_size % 2 == 1, "blur_size must be odd and >= 1");
  require(std::isfinite(blur_sigma) && blur_sigma > 0.0, "blur_sigma must be > 0");
  require(whole_face_prob >= 0.0 && convex_polygon_prob >= 0.0 &&
              std::abs(whole_face_prob + convex_polygon_prob - 1.0) <= 1e-9,
          "shape mode probabilities must be >= 0 and sum to 1");
  check_range(brightness, 1.0, "brightness");
  check_range(contrast, 1.0, "contrast");
  check_range(sharpness, 1.0, "sharpness");
  check_range(distortion, 0.0, "distortion");
  require(feather_px >= 0, "feather_px must be >= 0");
  require(hard_edge_prob >= 0.0 && hard_edge_prob <= 1.0, "hard_edge_prob must be in [0, 1]");
  require(sample_size >= 1, "sample_size must be >= 1");
  require(conversion_ratio >= 0.0 && conversion_ratio <= 1.0, "conversion_ratio must be in [0, 1]");
}

const char* label_name(Label label) { return label == Label::kFake ? "fake" : "real"; }

Label parse_label(const std::string& text) {
  if (text == "real") return Label::kReal;
  if (text == "fake") return Label::kFake;
  throw FormatError("label must be \"real\" or \"fake\", got \"" + text + "\"");
}

NegativeRecipe draw_negative_recipe(const SynthConfig& cfg, Rng& rng) {
  NegativeRecipe recipe;
  recipe.scale = cfg.scales[rng.index(cfg.scales.size())];
  recipe.shape = rng.bernoulli(cfg.whole_face_prob) ? ShapeMode::kWholeFace : ShapeMode::kConvexPolygon;
  recipe.feather_px = rng.bernoulli(cfg.hard_edge_prob) ? 0 : cfg.feather_px;
  return recipe;
}

Mask face_region_mask(int width, int height, const LandmarkSet& landmarks,
                      const SimilarityTransform& alignment, int aligned_size, ShapeMode mode) {
  if (mode == ShapeMode::kConvexPolygon) {
    return polygon_mask(width, height, landmarks, ShapeMode::kConvexPolygon);
  }
  const SimilarityTransform back = invert(alignment);
  const double far = aligned_size - 1.0;
  const Point2 corners[] = {back.apply({0, 0}), back.apply({far, 0}), back.apply({far, far}),
                            back.apply({0, far})};
  return fill_convex_polygon(width, height, convex_hull(corners));
}

ImageBuffer apply_negative(const ImageBuffer& image, const LandmarkSet& landmarks,
                           const SynthConfig& cfg, const NegativeRecipe& recipe) {
  const FaceTemplate face_template = template_for(cfg);
  const SimilarityTransform to_aligned = estimate_alignment(landmarks, face_template, recipe.scale);
  const int side = face_template.aligned_size(recipe.scale);

  const ImageBuffer aligned = warp(image, to_aligned, side, side);
  const ImageBuffer blurred = gaussian_blur(aligned, cfg.blur_kernel());
  const ImageBuffer warped_back = warp(blurred, invert(to_aligned), image.width(), image.height());

  const Mask mask = face_region_mask(image.width(), image.height(), landmarks, to_aligned, side,
                                     recipe.shape);
  return composite(image, warped_back, mask, recipe.feather_px);
}

ImageBuffer make_negative(const ImageBuffer& image, const LandmarkSet& landmarks,
                          const SynthConfig& cfg, Rng& rng) {
  return apply_negative(image, landmarks, cfg, draw_negative_recipe(cfg, rng));
}

FaceBox face_box(const LandmarkSet& landmarks) {
  const auto pts = landmarks.range(ibug::kJawEnd, kLandmarkCount);
  FaceBox box{pts[0].y, pts[0].x, pts[0].y, pts[0].x};
  for (const Point2& p : pts) {
    box.x0 = std::min(box.x0, p.x);
    box.x1 = std::max(box.x1, p.x);
    box.y0 = std::min(box.y0, p.y);
    box.y1 = std::max(box.y1, p.y);
  }
  if (!(box.width() > 0.0) || !(box.height() > 0.0)) {
    throw EmptyBox("landmark bounding box has zero area");
  }
  return box;
}

RoiMargins draw_margins(const FaceBox& box, Rng& rng) {
  RoiMargins m;
  m.top = rng.uniform(0.0, box.height() / 5.0);
  m.left = rng.uniform(0.0, box.width() / 8.0);
  m.bottom = rng.uniform(0.0, box.height() / 5.0);
  m.right = rng.uniform(0.0, box.width() / 8.0);
  return m;
}

RoiSpec expand_roi(const FaceBox& box, const RoiMargins& margins, int image_w, int image_h) {
  auto clamp_to = [](double v, int hi) {
    return static_cast<int>(std::clamp(v, 0.0, static_cast<double>(hi)));
  };
  RoiSpec roi;
  roi.y0 = clamp_to(std::floor(box.y0 - margins.top), image_h);
  roi.x0 = clamp_to(std::floor(box.x0 - margins.left), image_w);
  roi.y1 = clamp_to(std::ceil(box.y1 + margins.bottom), image_h);
  roi.x1 = clamp_to(std::ceil(box.x1 + margins.right), image_w);
  if (roi.x0 >= roi.x1 || roi.y0 >= roi.y1) throw EmptyBox("RoI lies outside the image");
  return roi;
}

RoiSpec sample_roi(const LandmarkSet& landmarks, int image_w, int image_h, Rng& rng) {
  const FaceBox box = face_box(landmarks);
  return expand_roi(box, draw_margins(box, rng), image_w, image_h);
}

ImageBuffer crop_resize(const ImageBuffer& image, const RoiSpec& roi, int out_size) {
  if (out_size < 1) throw InvalidArgument("crop_resize output size must be >= 1");
  if (roi.x0 < 0 || roi.y0 < 0 || roi.x1 > image.width() || roi.y1 > image.height() ||
      roi.x0 >= roi.x1 || roi.y0 >= roi.y1) {
    throw InvalidArgument("RoI does not fit inside the image");
  }
  const double sx = static_cast<double>(roi.width()) / out_size;
  const double sy = static_cast<double>(roi.height()) / out_size;
  auto axis = [](int u, double scale, int lo, int hi) {
    const double p = (u + 0.5) * scale - 0.5 + lo;
    return std::clamp(p, static_cast<double>(lo), static_cast<double>(hi - 1));
  };
  ImageBuffer out(out_size, out_size);
  for (int v = 0; v < out_size; ++v) {
    const double py = axis(v, sy, roi.y0, roi.y1);
    const int y0 = static_cast<int>(std::floor(py));
    const int y1 = std::min(y0 + 1, roi.y1 - 1);
    const double fy = py - y0;
    for (int u = 0; u < out_size; ++u) {
      const double px = axis(u, sx, roi.x0, roi.x1);
      const int x0 = static_cast<int>(std::floor(px));
      const int x1 = std::min(x0 + 1, roi.x1 - 1);
      const double fx = px - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - fx) * image.at(x0, y0, c) + fx * image.at(x1, y0, c);
        const double bottom = (1.0 - fx) * image.at(x0, y1, c) + fx * image.at(x1, y1, c);
        out.at(u, v, c) = static_cast<float>(std::clamp((1.0 - fy) * top + fy * bottom, 0.0, 1.0));
      }
    }
  }
  return out;
}

ColorJitterParams draw_jitter(const SynthConfig& cfg, Rng& rng) {
  ColorJitterParams p;
  p.brightness = rng.uniform(cfg.brightness.min, cfg.brightness.max);
  p.contrast = rng.uniform(cfg.contrast.min, cfg.contrast.max);
  p.sharpness = rng.uniform(cfg.sharpness.min, cfg.sharpness.max);
  p.distortion = rng.uniform(cfg.distortion.min, cfg.distortion.max);
  return p;
}

void validate_example(const FaceExample& example, const SynthConfig& cfg) {
  const ImageBuffer& img = example.image;
  example.landmarks.require_inside(img.width(), img.height());
  const FaceTemplate face_template = template_for(cfg);
  for (double s : cfg.scales) (void)estimate_alignment(example.landmarks, face_template, s);
  if (cfg.convex_polygon_prob > 0.0) (void)convex_hull(shape_polygon_points(example.landmarks));
  (void)expand_roi(face_box(example.landmarks), RoiMargins{}, img.width(), img.height());
}

Sample synthesize_sample(const FaceExample& example, Label label, const SynthConfig& cfg, Rng& rng) {
  const ImageBuffer& img = example.image;
  Sample sample;
  sample.label = label;
  sample.source_id = example.source_id;
  sample.video_id = example.video_id;
  const RoiSpec roi = sample_roi(example.landmarks, img.width(), img.height(), rng);
  const ColorJitterParams jitter = draw_jitter(cfg, rng);
  if (label == Label::kFake) {
    const ImageBuffer negative = make_negative(img, example.landmarks, cfg, rng);
    sample.pixels = apply_color_jitter(crop_resize(negative, roi, cfg.sample_size), jitter);
  } else {
    sample.pixels = apply_color_jitter(crop_resize(img, roi, cfg.sample_size), jitter);
  }
  return sample;
}

std::vector<Sample> build_batch(std::span<const FaceExample> positives, int batch_size,
                                const SynthConfig& cfg, std::uint64_t seed, int workers) {
  if (batch_size < 2 || batch_size % 2 != 0) {
    throw InvalidArgument("batch size must be even and >= 2, got " + std::to_string(batch_size));
  }
  if (positives.size() < static_cast<std::size_t>(batch_size)) {
    throw InsufficientInput("need " + std::to_string(batch_size) + " images for a batch, got " +
                            std::to_string(positives.size()));
  }
  const auto n = static_cast<std::size_t>(batch_size);
  Rng batch_rng = Rng::derive(seed, {kBatchStream});
  std::vector<std::size_t> convert(n);
  std::iota(convert.begin(), convert.end(), 0);
  batch_rng.shuffle(std::span(convert));
  std::vector<Label> labels(n, Label::kReal);
  for (std::size_t i = 0; i < n / 2; ++i) labels[convert[i]] = Label::kFake;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  batch_rng.shuffle(std::span(order));

  std::vector<Sample> out(n);
  parallel_for(n, workers, [&](std::size_t slot) {
    const std::size_t i = order[slot];
    Rng rng = Rng::derive(seed, {static_cast<std::uint64_t>(i)});
    out[slot] = synthesize_sample(positives[i], labels[i], cfg, rng);
  });
  return out;
}

}  // namespace warpfake

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "support.hpp"
#include "warpfake/procedural_faces.hpp"
#include "warpfake/synth.hpp"

using namespace warpfake;
using namespace warpfake::testing;

namespace {

FaceExample smooth_face(std::uint64_t seed) {
  ProceduralFaceOptions opts;
  opts.grain = 0.0;
  opts.smoothing_sigma = 1.5;
  return make_procedural_face(opts, seed);
}

/// Landmarks 17-67 span exactly the given box; the jawline sits inside it.
LandmarkSet box_landmarks(double y0, double x0, double y1, double x1) {
  std::array<Point2, kLandmarkCount> pts;
  Rng rng(1);
  for (auto& p : pts) p = {rng.uniform(x0, x1), rng.uniform(y0, y1)};
  pts[20] = {x0, y0};
  pts[30] = {x1, y1};
  return LandmarkSet(pts);
}

std::vector<FaceExample> faces(int n, std::uint64_t seed = 0) {
  ProceduralFaceOptions opts;
  opts.width = opts.height = 64;
  opts.face_size_min = opts.face_size_max = 44;
  std::vector<FaceExample> out;
  for (int i = 0; i < n; ++i) out.push_back(make_procedural_face(opts, seed + i));
  return out;
}

}  // namespace

TEST(MakeNegative, IdentityBlurOnlyResamples) {
  SynthConfig cfg;
  cfg.blur_size = 1;
  cfg.feather_px = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const FaceExample face = smooth_face(seed);
    for (double scale : cfg.scales) {
      for (ShapeMode shape : {ShapeMode::kWholeFace, ShapeMode::kConvexPolygon}) {
        const NegativeRecipe recipe{scale, shape, 0};
        const ImageBuffer out = apply_negative(face.image, face.landmarks, cfg, recipe);
        const auto align = estimate_alignment(face.landmarks, FaceTemplate::canonical(), scale);
        const Mask mask = face_region_mask(face.image.width(), face.image.height(), face.landmarks, align,
                                           FaceTemplate::canonical().aligned_size(scale), shape);
        EXPECT_GE(psnr_where(out, face.image, [&](int x, int y) { return mask.at(x, y) > 0.0f; }), 35.0);
      }
    }
  }
}

TEST(MakeNegative, ConvexPolygonLeavesOutsideUntouched) {
  SynthConfig cfg;
  const FaceExample face = make_procedural_face({}, 3);
  const NegativeRecipe recipe{0.75, ShapeMode::kConvexPolygon, 0};
  const ImageBuffer out = apply_negative(face.image, face.landmarks, cfg, recipe);
  const Mask poly = polygon_mask(out.width(), out.height(), face.landmarks, ShapeMode::kConvexPolygon);
  int changed_inside = 0;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        if (poly.at(x, y) == 0.0f) {
          ASSERT_EQ(out.at(x, y, c), face.image.at(x, y, c));
        } else {
          changed_inside += out.at(x, y, c) != face.image.at(x, y, c);
        }
      }
    }
  }
  EXPECT_GT(changed_inside, 0);
}

TEST(MakeNegative, FeatheredMaskZeroRegionIsBitIdentical) {
  SynthConfig cfg;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const FaceExample face = make_procedural_face({}, 40 + seed);
    Rng rng(seed);
    const NegativeRecipe recipe = draw_negative_recipe(cfg, rng);
    const ImageBuffer out = apply_negative(face.image, face.landmarks, cfg, recipe);
    const auto align = estimate_alignment(face.landmarks, FaceTemplate::canonical(), recipe.scale);
    const Mask soft = feather_mask(face_region_mask(out.width(), out.height(), face.landmarks, align,
                                                    FaceTemplate::canonical().aligned_size(recipe.scale),
                                                    recipe.shape),
                                   recipe.feather_px);
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x)
        if (soft.at(x, y) == 0.0f)
          for (int c = 0; c < 3; ++c) ASSERT_EQ(out.at(x, y, c), face.image.at(x, y, c));
  }
}

TEST(MakeNegative, FixedSeedIsDeterministic) {
  SynthConfig cfg;
  const FaceExample face = make_procedural_face({}, 42);
  Rng a(42), b(42);
  const ImageBuffer x = make_negative(face.image, face.landmarks, cfg, a);
  const ImageBuffer y = make_negative(face.image, face.landmarks, cfg, b);
  EXPECT_EQ(x, y);
  EXPECT_NE(x, face.image);
  EXPECT_TRUE(x.same_shape(face.image));
}

TEST(MakeNegative, RecipeCoversEveryScaleAndShape) {
  SynthConfig cfg;
  Rng rng(9);
  std::set<double> scales;
  std::set<int> shapes, feathers;
  for (int i = 0; i < 400; ++i) {
    const NegativeRecipe r = draw_negative_recipe(cfg, rng);
    scales.insert(r.scale);
    shapes.insert(static_cast<int>(r.shape));
    feathers.insert(r.feather_px);
  }
  EXPECT_EQ(scales.size(), cfg.scales.size());
  EXPECT_EQ(shapes.size(), 2u);
  EXPECT_EQ(feathers, (std::set<int>{0, cfg.feather_px}));
}

TEST(SampleRoi, ZeroMarginsGiveTheBox) {
  const LandmarkSet lm = box_landmarks(10, 20, 110, 180);
  const FaceBox b = face_box(lm);
  EXPECT_EQ(b.y0, 10);
  EXPECT_EQ(b.x1, 180);
  EXPECT_EQ(expand_roi(b, {}, 300, 300), (RoiSpec{10, 20, 110, 180}));
}

TEST(SampleRoi, MarginsAreUniformWithinBounds) {
  const FaceBox b = face_box(box_landmarks(10, 20, 110, 180));
  ASSERT_DOUBLE_EQ(b.height(), 100.0);
  ASSERT_DOUBLE_EQ(b.width(), 160.0);
  Rng rng(10);
  double sum[4] = {}, hi[4] = {};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const RoiMargins m = draw_margins(b, rng);
    const double v[4] = {m.top, m.left, m.bottom, m.right};
    for (int k = 0; k < 4; ++k) {
      EXPECT_GE(v[k], 0.0);
      sum[k] += v[k];
      hi[k] = std::max(hi[k], v[k]);
    }
  }
  for (int k = 0; k < 4; ++k) {
    EXPECT_LE(hi[k], 20.0);
    EXPECT_NEAR(sum[k] / n, 10.0, 0.5);
  }
}

TEST(SampleRoi, ClampsToImageAndContainsBox) {
  const LandmarkSet lm = box_landmarks(1.5, 2, 98, 97.25);
  const FaceBox b = face_box(lm);
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const RoiSpec r = sample_roi(lm, 100, 99, rng);
    EXPECT_GE(r.x0, 0);
    EXPECT_GE(r.y0, 0);
    EXPECT_LE(r.x1, 100);
    EXPECT_LE(r.y1, 99);
    EXPECT_LE(r.x0, b.x0);
    EXPECT_LE(r.y0, b.y0);
    EXPECT_GE(r.x1, b.x1);
    EXPECT_GE(r.y1, b.y1);
  }
}

TEST(SampleRoi, DegenerateBoxThrows) {
  std::array<Point2, kLandmarkCount> pts;
  pts.fill({5, 5});
  Rng rng(1);
  EXPECT_THROW(sample_roi(LandmarkSet(pts), 10, 10, rng), EmptyBox);
  EXPECT_THROW(expand_roi(face_box(box_landmarks(200, 200, 210, 210)), {}, 100, 100), EmptyBox);
}

TEST(CropResize, SameSizeCropIsTheSubimage) {
  const ImageBuffer img = random_image(260, 240, 12);
  const RoiSpec roi{7, 11, 231, 235};
  const ImageBuffer out = crop_resize(img, roi);
  ASSERT_EQ(out.width(), 224);
  for (int y = 0; y < 224; ++y)
    for (int x = 0; x < 224; ++x)
      for (int c = 0; c < 3; ++c) ASSERT_EQ(out.at(x, y, c), img.at(x + 11, y + 7, c));
}

TEST(CropResize, ConstantStaysConstant) {
  const ImageBuffer out = crop_resize(ImageBuffer(50, 40, 0.6f), {3, 4, 37, 49});
  for (float v : out.data()) EXPECT_EQ(v, 0.6f);
}

TEST(CropResize, HalvedRampMatchesAnalyticRamp) {
  ImageBuffer img(500, 460);
  for (int y = 0; y < 460; ++y)
    for (int x = 0; x < 500; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(x / 1000.0);
  const RoiSpec roi{6, 20, 454, 468};
  const ImageBuffer out = crop_resize(img, roi);
  double worst = 0;
  for (int v = 0; v < 224; ++v) {
    for (int u = 0; u < 224; ++u) {
      const double expected = (roi.x0 + 2.0 * u + 0.5) / 1000.0;
      worst = std::max(worst, std::abs(out.at(u, v, 1) - expected));
    }
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(CropResize, RejectsRoiOutsideImage) {
  EXPECT_THROW(crop_resize(ImageBuffer(10, 10), {0, 0, 11, 5}), InvalidArgument);
}

TEST(BuildBatch, HalfRealHalfFake) {
  SynthConfig cfg;
  cfg.sample_size = 32;
  const auto data = faces(64);
  const auto batch = build_batch(data, 64, cfg, 5);
  ASSERT_EQ(batch.size(), 64u);
  int fake = 0;
  for (const Sample& s : batch) {
    fake += s.label == Label::kFake;
    EXPECT_EQ(s.pixels.width(), 32);
    EXPECT_EQ(s.pixels.height(), 32);
    for (float v : s.pixels.data()) ASSERT_TRUE(v >= 0.0f && v <= 1.0f);
  }
  EXPECT_EQ(fake, 32);
}

TEST(BuildBatch, DefaultSampleSizeIs224) {
  SynthConfig cfg;
  const auto batch = build_batch(faces(2), 2, cfg, 1);
  for (const Sample& s : batch) {
    EXPECT_EQ(s.pixels.width(), 224);
    EXPECT_EQ(s.pixels.height(), 224);
  }
}

TEST(BuildBatch, BalancedAndDeterministicAcrossSeedsAndWorkers) {
  SynthConfig cfg;
  cfg.sample_size = 16;
  const auto data = faces(4, 100);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto a = build_batch(data, 2, cfg, seed);
    ASSERT_NE(a[0].label, a[1].label);
    if (seed < 10) {
      const auto b = build_batch(data, 2, cfg, seed, 2);
      for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].label, b[i].label);
        EXPECT_EQ(a[i].pixels, b[i].pixels);
        EXPECT_EQ(a[i].source_id, b[i].source_id);
      }
    }
  }
}

TEST(BuildBatch, RejectsBadSizes) {
  SynthConfig cfg;
  const auto data = faces(3);
  EXPECT_THROW(build_batch(data, 4, cfg, 0), InsufficientInput);
  EXPECT_THROW(build_batch(data, 3, cfg, 0), InvalidArgument);
}

TEST(SynthConfig, ValidateRejectsBrokenInvariants) {
  SynthConfig ok;
  EXPECT_NO_THROW(ok.validate());
  auto broken = [&](auto mutate) {
    SynthConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(broken([](SynthConfig& c) { c.scales.clear(); }).validate(), ConfigError);
  EXPECT_THROW(broken([](SynthConfig& c) { c.scales = {1.0, -0.5}; }).validate(), ConfigError);
  EXPECT_THROW(broken([](SynthConfig& c) { c.whole_face_prob = 0.7; }).validate(), ConfigError);
  EXPECT_THROW(broken([](SynthConfig& c) { c.brightness = {1.1, 1.3}; }).validate(), ConfigError);
  EXPECT_THROW(broken([](SynthConfig& c) { c.distortion = {0.5, 2.0}; }).validate(), ConfigError);
  EXPECT_THROW(broken([](SynthConfig& c) { c.blur_size = 4; }).validate(), ConfigError);
}

TEST(Labels, NamesRoundTrip) {
  EXPECT_EQ(parse_label(label_name(Label::kReal)), Label::kReal);
  EXPECT_EQ(parse_label(label_name(Label::kFake)), Label::kFake);
  EXPECT_THROW(parse_label("Fake"), FormatError);
}

TEST(ValidateExample, RejectsFacesOutsideTheImage) {
  FaceExample ex = make_procedural_face({}, 1);
  EXPECT_NO_THROW(validate_example(ex, SynthConfig{}));
  ex.landmarks = ex.landmarks.transformed({1, 0, 1000, 1000});
  EXPECT_THROW(validate_example(ex, SynthConfig{}), Error);
}

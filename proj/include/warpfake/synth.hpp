#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "warpfake/geometry.hpp"
#include "warpfake/imaging.hpp"
#include "warpfake/raster.hpp"
#include "warpfake/rng.hpp"

namespace warpfake {

struct JitterRange {
  double min = 1.0;
  double max = 1.0;
};

/// Knobs of the negative-example generator and the RoI sampler.
struct SynthConfig {
  /// Alignment scales; the aligned square is scale * target_size px wide.
  std::vector<double> scales{0.5, 0.75, 1.0, 1.25};
  int target_size = 128;
  int blur_size = 5;
  double blur_sigma = 1.1;
  double whole_face_prob = 0.5;
  double convex_polygon_prob = 0.5;
  JitterRange brightness{0.8, 1.2};
  JitterRange contrast{0.8, 1.2};
  JitterRange sharpness{0.7, 1.3};
  JitterRange distortion{0.0, 2.0};
  int feather_px = 3;
  /// Probability that a negative is composited with a hard (unfeathered) edge.
  double hard_edge_prob = 0.25;
  /// Side length of the network input produced by crop_resize.
  int sample_size = 224;
  /// Fraction of entries converted to negatives when materializing a dataset.
  double conversion_ratio = 0.5;
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError when any invariant is violated.
  void validate() const;
  GaussianKernel blur_kernel() const { return GaussianKernel(blur_size, blur_sigma); }
};

enum class Label : int {
  kReal = 0,
  kFake = 1,
};

const char* label_name(Label label);
/// Accepts "real"/"fake" (case-sensitive). Throws FormatError otherwise.
Label parse_label(const std::string& text);

/// A pristine input image with its landmarks.
struct FaceExample {
  ImageBuffer image;
  LandmarkSet landmarks;
  std::string source_id;
  std::optional<std::string> video_id;
};

/// A network-ready crop.
struct Sample {
  ImageBuffer pixels;
  Label label = Label::kReal;
  std::string source_id;
  std::optional<std::string> video_id;
};

/// The random choices behind one negative example.
struct NegativeRecipe {
  double scale = 1.0;
  ShapeMode shape = ShapeMode::kWholeFace;
  int feather_px = 0;
};

NegativeRecipe draw_negative_recipe(const SynthConfig& cfg, Rng& rng);

/// Region of `image` replaced by the blurred face, before feathering.
/// WholeFace is the footprint of the aligned square mapped back into the
/// image; ConvexPolygon is the brow/lower-lip hull.
Mask face_region_mask(int width, int height, const LandmarkSet& landmarks,
                      const SimilarityTransform& alignment, int aligned_size, ShapeMode mode);

/// Align -> blur -> warp back -> composite, for a fixed recipe.
ImageBuffer apply_negative(const ImageBuffer& image, const LandmarkSet& landmarks,
                           const SynthConfig& cfg, const NegativeRecipe& recipe);

ImageBuffer make_negative(const ImageBuffer& image, const LandmarkSet& landmarks,
                          const SynthConfig& cfg, Rng& rng);

/// Tight box around landmarks 17-67 (the jawline is excluded), continuous px.
struct FaceBox {
  double y0 = 0, x0 = 0, y1 = 0, x1 = 0;
  double height() const { return y1 - y0; }
  double width() const { return x1 - x0; }
};

/// Throws EmptyBox when the box has zero area.
FaceBox face_box(const LandmarkSet& landmarks);

struct RoiMargins {
  double top = 0, left = 0, bottom = 0, right = 0;
};

/// Crop rectangle, half-open: rows [y0, y1), columns [x0, x1).
struct RoiSpec {
  int y0 = 0, x0 = 0, y1 = 0, x1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool operator==(const RoiSpec&) const = default;
};

/// top/bottom ~ U[0, h/5], left/right ~ U[0, w/8], drawn independently.
RoiMargins draw_margins(const FaceBox& box, Rng& rng);
/// Expands the box outward to whole pixels and clamps to the image.
RoiSpec expand_roi(const FaceBox& box, const RoiMargins& margins, int image_w, int image_h);
RoiSpec sample_roi(const LandmarkSet& landmarks, int image_w, int image_h, Rng& rng);

/// Bilinear resize of the crop to out_size x out_size (pixel-center aligned).
ImageBuffer crop_resize(const ImageBuffer& image, const RoiSpec& roi, int out_size = 224);

ColorJitterParams draw_jitter(const SynthConfig& cfg, Rng& rng);

/// Throws the error any pipeline stage would raise on this example.
void validate_example(const FaceExample& example, const SynthConfig& cfg);

/// Converts one example into a network sample; `rng` drives every random choice.
Sample synthesize_sample(const FaceExample& example, Label label, const SynthConfig& cfg, Rng& rng);

/// Half of the first `batch_size` positives become Fake via make_negative; the
/// rest stay Real. Each sample uses its own stream derived from (seed, index),
/// so the result does not depend on `workers`.
std::vector<Sample> build_batch(std::span<const FaceExample> positives, int batch_size,
                                const SynthConfig& cfg, std::uint64_t seed, int workers = 1);

}  // namespace warpfake

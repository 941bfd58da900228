#pragma once

#include <cstdint>

#include "warpfake/synth.hpp"

namespace warpfake {

/// Parameters of the face-like test-pattern generator.
struct ProceduralFaceOptions {
  int width = 128;
  int height = 128;
  /// Width in px of the template's unit square once placed in the image.
  double face_size_min = 72.0;
  double face_size_max = 88.0;
  double max_rotation_deg = 12.0;
  /// Max offset of the face center from the image center, px.
  double max_offset = 6.0;
  /// Uniform noise added to each landmark coordinate, px.
  double landmark_noise = 0.5;
  /// Amplitude of independent per-pixel grain. Grain is what a blur removes,
  /// so it is the cue a detector can learn.
  double grain = 0.06;
  /// Sigma of a final whole-image blur; 0 keeps the pattern crisp.
  double smoothing_sigma = 0.0;
};

/// Renders a face-like image (skin ellipse, brows, eyes, nose, mouth over a
/// textured background) with landmarks placed from the canonical template.
FaceExample make_procedural_face(const ProceduralFaceOptions& options, std::uint64_t seed);

/// Frame `frame` of a synthetic "video" of one identity: appearance comes from
/// `identity_seed`; pose and grain vary slightly per frame.
FaceExample make_procedural_frame(const ProceduralFaceOptions& options, std::uint64_t identity_seed,
                                  int frame);

}  // namespace warpfake

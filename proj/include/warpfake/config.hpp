#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "warpfake/model.hpp"
#include "warpfake/synth.hpp"
#include "warpfake/training.hpp"

namespace warpfake {

/// Everything a command needs besides its input files. Serialized as one JSON
/// document; missing keys take their defaults and unknown keys are rejected.
///
///   {
///     "seed": 0,
///     "output_dir": "",
///     "max_skip_fraction": 0.1,
///     "synth": {"scales", "target_size", "blur_size", "blur_sigma",
///               "whole_face_prob", "convex_polygon_prob",
///               "brightness", "contrast", "sharpness", "distortion",   // [min, max]
///               "feather_px", "hard_edge_prob", "conversion_ratio"},
///     "model": {"input_size", "channels"},
///     "train": {"batch_size", "lr0", "lr_decay", "lr_decay_steps", "max_epochs",
///               "hard_mine_epochs", "hard_mine_lr", "hard_threshold", "momentum"},
///     "score": {"n_crops"},
///     "eval":  {"roc_csv"}
///   }
struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir;
  double max_skip_fraction = 0.1;
  SynthConfig synth;
  CnnArchitecture model;
  TrainConfig train;
  int n_crops = 10;
  bool roc_csv = true;

  /// Propagates `seed` into the synth and train sections.
  void set_seed(std::uint64_t value);
  void validate() const;
  /// Canonical JSON (sorted keys, every field present).
  std::string to_json() const;
  /// FNV-1a of to_json(); identifies the configuration in written artifacts.
  std::uint64_t hash() const;
  std::string hash_hex() const;
};

/// Throws ConfigError on malformed JSON, wrong types, or unknown keys.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace warpfake

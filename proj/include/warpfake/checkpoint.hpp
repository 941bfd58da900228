#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "warpfake/model.hpp"

namespace warpfake {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(const std::string& text);

/// Serialized model plus the training state needed to resume bit-exactly.
///
/// Layout (all integers little-endian, floats IEEE-754 binary32 LE):
///   "WFCK"  u32 format_version
///   u32 input_size  u32 n_blocks  u32 channels[n_blocks]
///   u64 step  u32 epochs_done  u32 hard_epochs_done  u64 hard_start_step
///   u64 seed  u64 config_hash  u64 rng_digest
///   u64 n_weights  f32 weights[n_weights]
///   u64 n_velocity f32 velocity[n_velocity]     (0 or n_weights)
///   u64 fnv1a64 of all preceding bytes
struct ModelCheckpoint {
  static constexpr std::uint32_t kFormatVersion = 1;

  CnnArchitecture architecture;
  std::vector<float> weights;
  std::vector<float> velocity;
  std::uint64_t step = 0;
  std::uint32_t epochs_done = 0;
  std::uint32_t hard_epochs_done = 0;
  /// Step at which hard-example fine-tuning began; its schedule restarts there.
  std::uint64_t hard_start_step = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t rng_digest = 0;

  std::vector<std::uint8_t> serialize() const;
  /// Throws FormatError on bad magic, version, truncation, or checksum.
  static ModelCheckpoint deserialize(std::span<const std::uint8_t> bytes);

  Cnn<float> network() const;

  bool operator==(const ModelCheckpoint&) const = default;
};

/// Digest of the training position, recorded so that resumed runs can be
/// matched to the stream they continue.
std::uint64_t training_rng_digest(std::uint64_t seed, std::uint64_t step, std::uint32_t epochs_done,
                                  std::uint32_t hard_epochs_done);

void write_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& checkpoint);
ModelCheckpoint read_checkpoint(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace warpfake

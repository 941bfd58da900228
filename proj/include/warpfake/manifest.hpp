#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "warpfake/eval.hpp"
#include "warpfake/synth.hpp"

namespace warpfake {

/// One JSONL manifest record. Relative paths are resolved against the
/// directory holding the manifest. Keys other than the ones below are ignored,
/// so manifests written by `synth` can be fed back in.
struct ManifestEntry {
  std::string image_path;
  std::string landmarks_path;
  std::optional<Label> label;
  std::optional<std::string> video_id;
  std::optional<int> frame_index;
};

/// Throws FormatError (with the line number) on a malformed record.
std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::filesystem::path& base_dir = {});
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Loads the image and landmark sidecar of an entry.
FaceExample load_example(const ManifestEntry& entry);

/// Scored-frame JSONL: {"video_id", "frame_index", "score", "label"} per line.
/// Records without a label are rejected, since evaluation needs one.
std::vector<ScoredFrame> parse_scored_frames(std::istream& in);
std::vector<ScoredFrame> read_scored_frames(const std::filesystem::path& path);

}  // namespace warpfake

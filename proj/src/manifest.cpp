#include "warpfake/manifest.hpp"

#include <fstream>
#include <istream>

#include <json.hpp>

#include "warpfake/png_io.hpp"

namespace warpfake {

using nlohmann::json;

namespace {

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  const std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return p;
  return (base / path).string();
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(std::istream& in, const std::filesystem::path& base_dir) {
  std::vector<ManifestEntry> entries;
  for_each_record(in, [&](const json& rec) {
    if (!rec.is_object()) throw FormatError("manifest record must be an object");
    ManifestEntry e;
    e.image_path = resolve(rec.at("image_path").get<std::string>(), base_dir);
    e.landmarks_path = resolve(rec.at("landmarks_path").get<std::string>(), base_dir);
    if (rec.contains("label") && !rec["label"].is_null()) e.label = parse_label(rec["label"].get<std::string>());
    if (rec.contains("video_id") && !rec["video_id"].is_null()) e.video_id = rec["video_id"].get<std::string>();
    if (rec.contains("frame_index") && !rec["frame_index"].is_null()) {
      e.frame_index = rec["frame_index"].get<int>();
    }
    entries.push_back(std::move(e));
  });
  return entries;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  try {
    return parse_manifest(in, path.parent_path());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

FaceExample load_example(const ManifestEntry& entry) {
  FaceExample ex{read_png(entry.image_path), read_landmarks(entry.landmarks_path), entry.image_path,
                 entry.video_id};
  ex.landmarks.require_inside(ex.image.width(), ex.image.height());
  return ex;
}

std::vector<ScoredFrame> parse_scored_frames(std::istream& in) {
  std::vector<ScoredFrame> frames;
  for_each_record(in, [&](const json& rec) {
    if (!rec.is_object()) throw FormatError("scored frame must be an object");
    if (!rec.contains("label") || rec["label"].is_null()) throw FormatError("scored frame has no label");
    ScoredFrame f;
    f.video_id = rec.at("video_id").get<std::string>();
    f.frame_index = rec.at("frame_index").get<int>();
    f.score = rec.at("score").get<double>();
    f.label = parse_label(rec.at("label").get<std::string>());
    frames.push_back(std::move(f));
  });
  return frames;
}

std::vector<ScoredFrame> read_scored_frames(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scored frames " + path.string());
  try {
    return parse_scored_frames(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace warpfake

#include "warpfake/commands.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "warpfake/manifest.hpp"
#include "warpfake/parallel.hpp"
#include "warpfake/png_io.hpp"

namespace warpfake {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

enum Stream : std::uint64_t {
  kSynthSelect = 11,
  kSynthEntry = 12,
  kScoreEntry = 13,
};

struct Loaded {
  std::optional<FaceExample> example;
  std::string error;
};

std::vector<Loaded> load_all(const std::vector<ManifestEntry>& entries, const SynthConfig* validate_with,
                             int workers) {
  std::vector<Loaded> out(entries.size());
  parallel_for(entries.size(), workers, [&](std::size_t i) {
    try {
      FaceExample ex = load_example(entries[i]);
      if (validate_with != nullptr) validate_example(ex, *validate_with);
      out[i].example = std::move(ex);
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  });
  return out;
}

bool too_many_skipped(std::size_t skipped, std::size_t total, double max_fraction) {
  return total > 0 && static_cast<double>(skipped) > max_fraction * static_cast<double>(total);
}

std::string index_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu", i);
  return buf;
}

std::string landmarks_text(const LandmarkSet& lm) {
  std::ostringstream out;
  write_landmarks(out, lm);
  return out.str();
}

ordered_json provenance(const RunConfig& config) {
  return {{"seed", config.seed}, {"config_hash", config.hash_hex()}};
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

SynthResult cmd_synth(const fs::path& manifest, const RunConfig& config, const fs::path& out_dir,
                      const CommandIo& io) {
  config.validate();
  const auto entries = read_manifest(manifest);
  const auto loaded = load_all(entries, &config.synth, io.workers);

  SynthResult result;
  result.total = entries.size();
  std::vector<std::size_t> usable;
  ordered_json skipped_lines = ordered_json::array();
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    if (loaded[i].example) {
      usable.push_back(i);
    } else {
      io.err << "skipping entry " << i << " (" << entries[i].image_path << "): " << loaded[i].error << "\n";
      skipped_lines.push_back({{"index", i}, {"image_path", entries[i].image_path}, {"reason", loaded[i].error}});
    }
  }
  result.skipped = entries.size() - usable.size();

  const auto n_fake = static_cast<std::size_t>(std::llround(config.synth.conversion_ratio * usable.size()));
  std::vector<std::size_t> pick(usable.size());
  std::iota(pick.begin(), pick.end(), 0);
  Rng::derive(config.seed, {kSynthSelect}).shuffle(std::span(pick));
  std::vector<Label> labels(usable.size(), Label::kReal);
  for (std::size_t k = 0; k < n_fake; ++k) labels[pick[k]] = Label::kFake;

  std::vector<std::vector<std::uint8_t>> pngs(usable.size());
  std::vector<std::string> failures(usable.size());
  parallel_for(usable.size(), io.workers, [&](std::size_t k) {
    const std::size_t i = usable[k];
    const FaceExample& ex = *loaded[i].example;
    Rng rng = Rng::derive(config.seed, {kSynthEntry, i});
    const ColorJitterParams jitter = draw_jitter(config.synth, rng);
    try {
      const ImageBuffer base = labels[k] == Label::kFake
                                   ? make_negative(ex.image, ex.landmarks, config.synth, rng)
                                   : ex.image;
      pngs[k] = encode_png(apply_color_jitter(base, jitter));
    } catch (const Error& e) {
      failures[k] = e.what();
    }
  });

  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "landmarks");
  std::string manifest_text;
  for (std::size_t k = 0; k < usable.size(); ++k) {
    const std::size_t i = usable[k];
    const ManifestEntry& entry = entries[i];
    if (!failures[k].empty()) {
      io.err << "skipping entry " << i << " (" << entry.image_path << "): " << failures[k] << "\n";
      skipped_lines.push_back({{"index", i}, {"image_path", entry.image_path}, {"reason", failures[k]}});
      ++result.skipped;
      continue;
    }
    const std::string stem = index_name(i);
    write_file_atomic(out_dir / "images" / (stem + ".png"), pngs[k]);
    write_file_atomic(out_dir / "landmarks" / (stem + ".txt"), landmarks_text(loaded[i].example->landmarks));
    ordered_json rec;
    rec["image_path"] = "images/" + stem + ".png";
    rec["landmarks_path"] = "landmarks/" + stem + ".txt";
    rec["label"] = label_name(labels[k]);
    rec["video_id"] = entry.video_id ? ordered_json(*entry.video_id) : ordered_json();
    rec["frame_index"] = entry.frame_index ? ordered_json(*entry.frame_index) : ordered_json();
    rec["source"] = entry.image_path;
    rec["seed"] = config.seed;
    rec["config_hash"] = config.hash_hex();
    manifest_text += rec.dump() + "\n";
    (labels[k] == Label::kFake ? result.fake : result.real)++;
  }
  write_file_atomic(out_dir / "manifest.jsonl", manifest_text);

  std::string skipped_text;
  for (const auto& line : skipped_lines) skipped_text += line.dump() + "\n";
  write_file_atomic(out_dir / "skipped.jsonl", skipped_text);

  ordered_json prov = provenance(config);
  prov["config"] = ordered_json::parse(config.to_json());
  prov["entries"] = result.total;
  prov["real"] = result.real;
  prov["fake"] = result.fake;
  prov["skipped"] = result.skipped;
  write_file_atomic(out_dir / "provenance.json", prov.dump(2) + "\n");

  io.out << "synth: " << result.real << " real, " << result.fake << " fake, " << result.skipped
         << " skipped of " << result.total << "\n";
  if (too_many_skipped(result.skipped, result.total, config.max_skip_fraction)) {
    io.err << "error: more than " << config.max_skip_fraction * 100.0 << "% of entries were skipped\n";
    result.exit_code = kExitTooManySkipped;
  }
  return result;
}

TrainResult cmd_train(const fs::path& manifest, const RunConfig& config, const fs::path& out_checkpoint,
                      const std::optional<fs::path>& resume, const CommandIo& io) {
  config.validate();
  // Resolve the starting point first so a bad checkpoint fails before any work.
  ModelCheckpoint start;
  if (resume) {
    start = read_checkpoint(*resume);
    if (!(start.architecture == config.model)) {
      throw ConfigError("checkpoint architecture does not match the configured model");
    }
  } else {
    start = initialize_checkpoint(config.model, config.train);
  }

  const auto entries = read_manifest(manifest);
  const auto loaded = load_all(entries, &config.synth, io.workers);
  TrainResult result;
  std::vector<FaceExample> dataset;
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    if (!loaded[i].example) {
      io.err << "skipping entry " << i << " (" << entries[i].image_path << "): " << loaded[i].error << "\n";
      ++result.skipped;
    } else if (entries[i].label != Label::kFake) {
      dataset.push_back(*loaded[i].example);
    }
  }
  result.used = dataset.size();
  if (too_many_skipped(result.skipped, entries.size(), config.max_skip_fraction)) {
    io.err << "error: more than " << config.max_skip_fraction * 100.0 << "% of entries were skipped\n";
    result.exit_code = kExitTooManySkipped;
    return result;
  }

  TrainConfig train_cfg = config.train;
  train_cfg.workers = io.workers;
  std::string log = "# seed=" + std::to_string(config.seed) + " config_hash=" + config.hash_hex() + "\n";
  log += "step,lr,loss\n";
  ModelCheckpoint ck = train(dataset, train_cfg, config.synth, std::move(start), [&](const TrainLogRow& row) {
    log += std::to_string(row.step) + "," + format_double(row.lr) + "," + format_double(row.loss) + "\n";
  });
  ck.config_hash = config.hash();

  if (out_checkpoint.has_parent_path()) fs::create_directories(out_checkpoint.parent_path());
  write_checkpoint(out_checkpoint, ck);
  fs::path log_path = out_checkpoint;
  log_path += ".log.csv";
  write_file_atomic(log_path, log);
  io.out << "train: " << result.used << " images, step " << ck.step << ", epochs " << ck.epochs_done
         << " + " << ck.hard_epochs_done << " hard\n";
  result.checkpoint = std::move(ck);
  return result;
}

int cmd_score(const FakeScorer& scorer, const fs::path& manifest, const RunConfig& config,
              const fs::path& out_path, const CommandIo& io) {
  config.validate();
  const auto entries = read_manifest(manifest);
  const auto loaded = load_all(entries, nullptr, io.workers);
  std::vector<std::optional<double>> scores(entries.size());
  std::vector<std::string> errors(entries.size());
  parallel_for(entries.size(), io.workers, [&](std::size_t i) {
    if (!loaded[i].example) {
      errors[i] = loaded[i].error;
      return;
    }
    try {
      Rng rng = Rng::derive(config.seed, {kScoreEntry, i});
      const FaceExample& ex = *loaded[i].example;
      scores[i] = predict_image(scorer, ex.image, ex.landmarks, rng, config.n_crops);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  std::string text;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ManifestEntry& e = entries[i];
    if (!scores[i]) {
      io.err << "skipping entry " << i << " (" << e.image_path << "): " << errors[i] << "\n";
      ++skipped;
      continue;
    }
    ordered_json rec;
    rec["video_id"] = e.video_id ? *e.video_id : fs::path(e.image_path).stem().string();
    rec["frame_index"] = e.frame_index ? *e.frame_index : static_cast<int>(i);
    rec["score"] = *scores[i];
    rec["label"] = e.label ? ordered_json(label_name(*e.label)) : ordered_json();
    rec["image_path"] = e.image_path;
    rec["seed"] = config.seed;
    rec["config_hash"] = config.hash_hex();
    text += rec.dump() + "\n";
  }
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_file_atomic(out_path, text);
  io.out << "score: " << entries.size() - skipped << " frames scored, " << skipped << " skipped\n";
  if (too_many_skipped(skipped, entries.size(), config.max_skip_fraction)) {
    io.err << "error: more than " << config.max_skip_fraction * 100.0 << "% of entries were skipped\n";
    return kExitTooManySkipped;
  }
  return kExitOk;
}

int cmd_score(const fs::path& checkpoint, const fs::path& manifest, const RunConfig& config,
              const fs::path& out_path, const CommandIo& io) {
  const CnnScorer scorer(read_checkpoint(checkpoint).network());
  return cmd_score(scorer, manifest, config, out_path, io);
}

int cmd_eval(const fs::path& scored_frames, const RunConfig& config, const fs::path& report_path,
             const CommandIo& io) {
  const auto frames = read_scored_frames(scored_frames);
  const EvalReport report = evaluate(frames);
  if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path());
  ordered_json doc = ordered_json::parse(report_to_json(report));
  doc["provenance"] = provenance(config);
  write_file_atomic(report_path, doc.dump(2) + "\n");
  if (config.roc_csv && !report.frame_roc.empty()) {
    fs::path roc_path = report_path;
    roc_path += ".roc.csv";
    write_file_atomic(roc_path, roc_to_csv(report.frame_roc));
  }
  io.out << report_to_table(report);
  if (!report.complete()) {
    for (const std::string& e : report.errors) io.err << "error: " << e << "\n";
    return kExitSingleClass;
  }
  return kExitOk;
}

std::string template_table(std::optional<int> size) {
  const FaceTemplate& t = FaceTemplate::canonical();
  const double scale = size ? static_cast<double>(*size) : 1.0;
  std::string out;
  char line[64];
  for (const Point2& p : t.unit_points()) {
    std::snprintf(line, sizeof line, "%.9f %.9f\n", p.x * scale, p.y * scale);
    out += line;
  }
  return out;
}

}  // namespace warpfake

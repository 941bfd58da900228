#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "warpfake/checkpoint.hpp"
#include "warpfake/config.hpp"
#include "warpfake/training.hpp"

namespace warpfake {

/// Process exit codes shared by all subcommands.
enum ExitCode : int {
  kExitOk = 0,
  kExitError = 1,
  kExitTooManySkipped = 2,
  kExitSingleClass = 3,
};

struct CommandIo {
  std::ostream& out;
  std::ostream& err;
  int workers = 1;
};

struct SynthResult {
  int exit_code = kExitOk;
  std::size_t total = 0;
  std::size_t real = 0;
  std::size_t fake = 0;
  std::size_t skipped = 0;
};

/// Materializes a labeled dataset under out_dir:
///   images/NNNNNN.png, landmarks/NNNNNN.txt   one pair per usable entry
///   manifest.jsonl                             input-manifest compatible, with label + provenance
///   skipped.jsonl                              entries that could not be used, with the reason
///   provenance.json                            seed, config hash, full config, counts
/// round(conversion_ratio * usable) entries, chosen by a seeded permutation,
/// become negatives; the rest keep their pixels apart from color jitter.
SynthResult cmd_synth(const std::filesystem::path& manifest, const RunConfig& config,
                      const std::filesystem::path& out_dir, const CommandIo& io);

struct TrainResult {
  int exit_code = kExitOk;
  std::size_t used = 0;
  std::size_t skipped = 0;
  ModelCheckpoint checkpoint;
};

/// Trains on the pristine entries of `manifest` (entries labeled fake are
/// ignored) and writes the checkpoint plus `<checkpoint>.log.csv`. With
/// `resume`, training continues from that checkpoint's position.
TrainResult cmd_train(const std::filesystem::path& manifest, const RunConfig& config,
                      const std::filesystem::path& out_checkpoint,
                      const std::optional<std::filesystem::path>& resume, const CommandIo& io);

/// Writes one scored-frame JSONL record per usable manifest entry.
int cmd_score(const FakeScorer& scorer, const std::filesystem::path& manifest, const RunConfig& config,
              const std::filesystem::path& out_path, const CommandIo& io);
int cmd_score(const std::filesystem::path& checkpoint, const std::filesystem::path& manifest,
              const RunConfig& config, const std::filesystem::path& out_path, const CommandIo& io);

/// Writes the JSON report to `report_path`, the ROC points to
/// `<report_path>.roc.csv` (when enabled), and a table to io.out.
int cmd_eval(const std::filesystem::path& scored_frames, const RunConfig& config,
             const std::filesystem::path& report_path, const CommandIo& io);

/// The canonical template as a landmark sidecar: unit coordinates, or pixels
/// of the aligned square when `size` is given.
std::string template_table(std::optional<int> size = std::nullopt);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace warpfake

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "warpfake/commands.hpp"
#include "warpfake/config.hpp"
#include "warpfake/errors.hpp"
#include "warpfake/parallel.hpp"

namespace fs = std::filesystem;
using namespace warpfake;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", opts.seed, "overrides the configured seed");
  cmd->add_option("--workers", opts.workers, "worker threads (default: WARPFAKE_WORKERS or all cores)")
      ->check(CLI::PositiveNumber);
}

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig cfg = opts.config.empty() ? RunConfig{} : load_run_config(opts.config);
  cfg.set_seed(opts.seed.value_or(cfg.seed));
  cfg.validate();
  return cfg;
}

fs::path output_path(const CommonOptions& opts, const RunConfig& cfg, const char* fallback) {
  if (!opts.out.empty()) return opts.out;
  return fs::path(cfg.output_dir.empty() ? "." : cfg.output_dir) / fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"warpfake: face-warping negatives, a compact CNN detector, and AUC evaluation"};
  app.require_subcommand(1);

  CommonOptions synth_opts, train_opts, score_opts, eval_opts;
  std::string synth_manifest, train_manifest, score_manifest;
  std::string resume, checkpoint, scores;
  std::optional<int> template_size;

  auto* synth = app.add_subcommand("synth", "write a labeled dataset of pristine and warped faces");
  add_common(synth, synth_opts);
  synth->add_option("--manifest", synth_manifest, "input JSONL manifest")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_opts.out, "output directory");

  auto* train = app.add_subcommand("train", "train the detector on pristine faces");
  add_common(train, train_opts);
  train->add_option("--manifest", train_manifest, "input JSONL manifest")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_opts.out, "checkpoint path");
  train->add_option("--resume", resume, "continue from this checkpoint")->check(CLI::ExistingFile);

  auto* score = app.add_subcommand("score", "score frames with a trained checkpoint");
  add_common(score, score_opts);
  score->add_option("--manifest", score_manifest, "input JSONL manifest")->required()->check(CLI::ExistingFile);
  score->add_option("--checkpoint", checkpoint, "trained checkpoint")->required()->check(CLI::ExistingFile);
  score->add_option("--out", score_opts.out, "scored-frame JSONL path");

  auto* eval = app.add_subcommand("eval", "frame- and video-level AUC of scored frames");
  add_common(eval, eval_opts);
  eval->add_option("--scores", scores, "scored-frame JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", eval_opts.out, "report JSON path");

  auto* inspect = app.add_subcommand("inspect-template", "print the canonical landmark template");
  inspect->add_option("--size", template_size, "print pixel coordinates for this square side")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    auto io_for = [](const CommonOptions& o) {
      return CommandIo{std::cout, std::cerr, o.workers.value_or(default_worker_count())};
    };
    if (synth->parsed()) {
      const RunConfig cfg = resolve_config(synth_opts);
      return cmd_synth(synth_manifest, cfg, output_path(synth_opts, cfg, "synth"), io_for(synth_opts)).exit_code;
    }
    if (train->parsed()) {
      const RunConfig cfg = resolve_config(train_opts);
      std::optional<fs::path> from;
      if (!resume.empty()) from = resume;
      return cmd_train(train_manifest, cfg, output_path(train_opts, cfg, "model.wfck"), from, io_for(train_opts))
          .exit_code;
    }
    if (score->parsed()) {
      const RunConfig cfg = resolve_config(score_opts);
      return cmd_score(fs::path(checkpoint), score_manifest, cfg, output_path(score_opts, cfg, "scores.jsonl"),
                       io_for(score_opts));
    }
    if (eval->parsed()) {
      const RunConfig cfg = resolve_config(eval_opts);
      return cmd_eval(scores, cfg, output_path(eval_opts, cfg, "report.json"), io_for(eval_opts));
    }
    if (inspect->parsed()) {
      std::cout << template_table(template_size);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitOk;
}

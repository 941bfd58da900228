// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Run with a criterion number to run only that one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "support.hpp"
#include "warpfake/commands.hpp"
#include "warpfake/eval.hpp"
#include "warpfake/geometry.hpp"
#include "warpfake/model.hpp"
#include "warpfake/parallel.hpp"
#include "warpfake/procedural_faces.hpp"
#include "warpfake/synth.hpp"
#include "warpfake/training.hpp"

namespace fs = std::filesystem;
using namespace warpfake;
using namespace warpfake::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double env_or(const char* name, double fallback) {
  const char* v = std::getenv(name);
  return v != nullptr ? std::atof(v) : fallback;
}

// 1. Central finite differences against the analytic gradient, every parameter.
Outcome gradient_oracle() {
  CnnArchitecture arch;
  arch.input_size = 8;
  arch.channels = {4};
  Cnn<double> net(arch);
  net.init_kaiming(7);
  Rng rng(11);
  // Nonzero biases so that every parameter's gradient is exercised.
  for (double& p : net.parameters()) p += 0.05 * rng.uniform(-1.0, 1.0);
  std::vector<ImageBuffer> images;
  for (int i = 0; i < 3; ++i) images.push_back(random_image(8, 8, 100 + i));
  const Tensor4<double> batch = images_to_tensor<double>(images);
  const std::vector<int> labels{1, 0, 1};

  std::vector<double> grad(net.parameters().size());
  net.loss_and_gradient(batch, labels, grad);
  const double eps = 1e-4;
  double worst = 0.0;
  std::size_t worst_i = 0;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    double& w = net.parameters()[i];
    const double w0 = w;
    w = w0 + eps;
    const double up = net.loss(batch, labels);
    w = w0 - eps;
    const double down = net.loss(batch, labels);
    w = w0;
    const double numeric = (up - down) / (2 * eps);
    const double rel = std::abs(numeric - grad[i]) / std::max({std::abs(numeric), std::abs(grad[i]), 1e-7});
    if (rel > worst) worst = rel, worst_i = i;
  }
  return {worst < 1e-4, fmt("%zu parameters, max relative error %.3g (parameter %zu)", grad.size(), worst, worst_i)};
}

// 2. Rank AUC against exact pairwise counting.
Outcome auc_oracle() {
  Rng rng(2024);
  double worst = 0.0;
  int ties_instances = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t n = 2 + rng.index(199);
    const int levels = 1 + static_cast<int>(rng.index(30));
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = inst % 2 == 0 ? static_cast<double>(rng.index(levels)) / levels : rng.uniform01();
      labels[i] = rng.bernoulli(0.4) ? 1 : 0;
    }
    labels[0] = 0;
    labels[1] = 1;
    long long twice = 0, pairs = 0;
    bool tie = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (labels[i] != 1 || labels[j] != 0) continue;
        ++pairs;
        if (scores[i] > scores[j]) twice += 2;
        if (scores[i] == scores[j]) twice += 1, tie = true;
      }
    }
    ties_instances += tie;
    const double oracle = static_cast<double>(twice) / (2.0 * static_cast<double>(pairs));
    worst = std::max(worst, std::abs(auc(scores, labels) - oracle));
  }
  return {worst <= 1e-12, fmt("100 instances (%d with ties), max |error| %.3g", ties_instances, worst)};
}

// 3. Alignment recovery and warp round trip.
Outcome geometry_oracle() {
  const FaceTemplate& tmpl = FaceTemplate::canonical();
  const std::vector<Point2> dst = tmpl.scaled_points(1.0);
  Rng rng(3);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double s = rng.uniform(0.5, 2.0);
    double theta = std::numbers::pi - rng.uniform(0.0, 2.0 * std::numbers::pi);  // (-pi, pi]
    const double r = 50.0 * std::sqrt(rng.uniform01());
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const auto truth = SimilarityTransform::from_params(s, theta, r * std::cos(phi), r * std::sin(phi));
    const SimilarityTransform back = invert(truth);
    std::array<Point2, kLandmarkCount> pts;
    for (std::size_t k = 0; k < kLandmarkCount; ++k) pts[k] = back.apply(dst[k]);
    const SimilarityTransform got = estimate_alignment(LandmarkSet(pts), tmpl, 1.0);
    double dtheta = std::remainder(got.rotation() - theta, 2.0 * std::numbers::pi);
    worst = std::max({worst, std::abs(got.scale() - s), std::abs(dtheta), std::abs(got.tx - truth.tx),
                      std::abs(got.ty - truth.ty)});
  }

  double worst_psnr = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 20; ++i) {
    const ImageBuffer img = smooth_image(64, 64, 500 + i);
    const double s = i == 0 ? 2.0 : rng.uniform(1.0, 2.0);
    const double theta = i == 0 ? 0.0 : rng.uniform(-std::numbers::pi, std::numbers::pi);
    const int out = static_cast<int>(std::ceil(64 * s * std::numbers::sqrt2)) + 2;
    // Rotate/scale about the image center and land it at the output center.
    const auto about = SimilarityTransform::from_params(1.0, 0.0, -31.5, -31.5);
    const auto rs = SimilarityTransform::from_params(s, theta, (out - 1) / 2.0, (out - 1) / 2.0);
    const SimilarityTransform t = compose(rs, about);
    const ImageBuffer big = warp(img, t, out, out);
    const ImageBuffer round = warp(big, invert(t), 64, 64);
    const double p = psnr_where(img, round, [](int x, int y) { return x >= 4 && y >= 4 && x < 60 && y < 60; });
    worst_psnr = std::min(worst_psnr, p);
  }
  return {worst < 1e-6 && worst_psnr >= 35.0,
          fmt("1000 transforms, max parameter error %.3g; 20 warp round trips, min PSNR %.2f dB", worst,
              worst_psnr)};
}

// 4. make_negative leaves out-of-mask pixels untouched; identity blur only resamples.
Outcome pipeline_fidelity() {
  ProceduralFaceOptions opts;
  opts.grain = 0.0;
  opts.smoothing_sigma = 1.5;
  SynthConfig cfg;
  cfg.feather_px = 0;
  SynthConfig identity_cfg = cfg;
  identity_cfg.blur_size = 1;

  int outside_changed = 0;
  double worst_psnr = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const FaceExample face = make_procedural_face(opts, 9000 + seed);
    for (const SynthConfig* c : {&cfg, &identity_cfg}) {
      Rng rng(seed);
      const NegativeRecipe recipe = draw_negative_recipe(*c, rng);
      Rng replay(seed);
      const ImageBuffer out = make_negative(face.image, face.landmarks, *c, replay);
      const auto align = estimate_alignment(face.landmarks, FaceTemplate::canonical(), recipe.scale);
      const Mask mask = face_region_mask(face.image.width(), face.image.height(), face.landmarks, align,
                                         FaceTemplate::canonical().aligned_size(recipe.scale), recipe.shape);
      for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
          if (mask.at(x, y) != 0.0f) continue;
          for (int ch = 0; ch < 3; ++ch) outside_changed += out.at(x, y, ch) != face.image.at(x, y, ch);
        }
      }
      if (c == &identity_cfg) {
        worst_psnr = std::min(worst_psnr, psnr_where(out, face.image, [&](int x, int y) {
                                return mask.at(x, y) != 0.0f;
                              }));
      }
    }
  }
  return {outside_changed == 0 && worst_psnr >= 35.0,
          fmt("100 seeds: %d out-of-mask values changed; identity-blur in-mask min PSNR %.2f dB",
              outside_changed, worst_psnr)};
}

// 5. Desk-scale end-to-end experiment on procedural faces.
Outcome desk_experiment() {
  const int n_train = static_cast<int>(env_or("WF_DESK_TRAIN", 1024));
  const int n_videos = 20;
  const int frames = 6;
  ProceduralFaceOptions opts;

  std::vector<FaceExample> train_set;
  for (int i = 0; i < n_train; ++i) train_set.push_back(make_procedural_face(opts, 100000 + i));

  RunConfig cfg;
  cfg.set_seed(5);
  cfg.model.input_size = 64;
  cfg.synth.sample_size = 64;
  cfg.train.max_epochs = static_cast<int>(env_or("WF_DESK_EPOCHS", 8));
  cfg.train.hard_mine_epochs = static_cast<int>(env_or("WF_DESK_HARD", 2));
  // A 10-epoch budget on ~1k images allows ~160 steps; the stage-1 rate is
  // raised so the run converges within it. Everything else keeps its default.
  cfg.train.lr0 = env_or("WF_DESK_LR", 0.01);
  cfg.train.workers = default_worker_count();

  const ModelCheckpoint start = initialize_checkpoint(cfg.model, cfg.train);
  std::vector<double> losses;
  const ModelCheckpoint ck = train(train_set, cfg.train, cfg.synth, start,
                                   [&](const TrainLogRow& row) { losses.push_back(row.loss); });

  // Held-out identities: half the videos are converted to negatives frame by frame.
  const CnnScorer scorer(ck.network());
  std::vector<ScoredFrame> scored;
  for (int v = 0; v < n_videos; ++v) {
    const bool fake = v >= n_videos / 2;
    for (int f = 0; f < frames; ++f) {
      FaceExample ex = make_procedural_frame(opts, 900000 + v, f);
      if (fake) {
        Rng neg = Rng::derive(77, {static_cast<std::uint64_t>(v), static_cast<std::uint64_t>(f)});
        ex.image = make_negative(ex.image, ex.landmarks, cfg.synth, neg);
      }
      Rng crops = Rng::derive(78, {static_cast<std::uint64_t>(v), static_cast<std::uint64_t>(f)});
      const double p = predict_image(scorer, ex.image, ex.landmarks, crops, cfg.n_crops);
      scored.push_back({"video_" + std::to_string(v), f, p, fake ? Label::kFake : Label::kReal});
    }
  }
  const EvalReport report = evaluate(scored);
  const double frame_auc = report.frame_auc.value_or(0.0);
  const double video_auc = report.video_auc.value_or(0.0);
  // Mean loss of the first and last stage-1 epochs.
  const std::size_t per_epoch = train_set.size() / static_cast<std::size_t>(cfg.train.batch_size);
  const std::size_t stage1 = per_epoch * static_cast<std::size_t>(cfg.train.max_epochs);
  auto epoch_mean = [&](std::size_t begin) {
    double s = 0;
    for (std::size_t i = begin; i < begin + per_epoch; ++i) s += losses[i];
    return s / static_cast<double>(per_epoch);
  };
  return {frame_auc >= 0.90 && video_auc >= frame_auc - 0.02,
          fmt("%d train images, lr0 %g, %d+%d epochs, %llu steps (stage-1 epoch loss %.3f -> %.3f); %d held-out frames in %d "
              "videos: frame AUC %.4f, video AUC %.4f",
              n_train, cfg.train.lr0, cfg.train.max_epochs, cfg.train.hard_mine_epochs,
              static_cast<unsigned long long>(ck.step), epoch_mean(0), epoch_mean(stage1 - per_epoch), n_videos * frames, n_videos, frame_auc, video_auc)};
}

// 6. The learning rate written by the training log at selected steps.
Outcome schedule_check() {
  CnnArchitecture arch;
  arch.input_size = 32;
  arch.channels = {2};
  TrainConfig tc;
  tc.batch_size = 2;
  tc.max_epochs = 2501;
  tc.hard_mine_epochs = 0;
  tc.seed = 6;
  SynthConfig sc;
  sc.scales = {0.25};
  ProceduralFaceOptions opts;
  opts.width = opts.height = 48;
  opts.face_size_min = opts.face_size_max = 32;
  std::vector<FaceExample> data{make_procedural_face(opts, 1), make_procedural_face(opts, 2)};

  std::vector<std::string> lr_text;
  train(data, tc, sc, initialize_checkpoint(arch, tc),
        [&](const TrainLogRow& row) { lr_text.push_back(format_double(row.lr)); });
  if (lr_text.size() != 2501) return {false, fmt("expected 2501 logged steps, got %zu", lr_text.size())};
  const std::size_t steps[] = {0, 999, 1000, 2500};
  const double expected[] = {0.001, 0.001, 0.00095, 0.0009025};
  bool ok = true;
  std::string seen;
  for (int i = 0; i < 4; ++i) {
    ok = ok && std::stod(lr_text[steps[i]]) == expected[i];
    seen += (i ? ", " : "") + lr_text[steps[i]];
  }
  return {ok, "logged lr at steps {0, 999, 1000, 2500} = {" + seen + "}"};
}

std::vector<std::pair<std::string, std::string>> tree_bytes(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto bytes = read_file_bytes(e.path());
    files.emplace_back(fs::relative(e.path(), root).string(), std::string(bytes.begin(), bytes.end()));
  }
  std::sort(files.begin(), files.end());
  return files;
}

// 7. Byte-identical synth and train outputs across runs and worker counts.
Outcome determinism() {
  TempDir dir("accept7");
  const fs::path manifest = write_corpus(dir.path() / "in", 24, 70);
  RunConfig cfg;
  cfg.set_seed(7);
  cfg.model.input_size = 32;
  cfg.model.channels = {4, 8};
  cfg.synth.sample_size = 32;
  cfg.train.batch_size = 8;
  cfg.train.max_epochs = 2;
  cfg.train.hard_mine_epochs = 1;
  std::ostringstream sink;

  std::vector<decltype(tree_bytes({}))> synth_trees, train_trees;
  for (int run = 0; run < 3; ++run) {
    const int workers = run == 2 ? 3 : 1;
    const CommandIo io{sink, sink, workers};
    const fs::path s_out = dir.path() / ("synth" + std::to_string(run));
    const fs::path t_out = dir.path() / ("train" + std::to_string(run));
    if (cmd_synth(manifest, cfg, s_out, io).exit_code != 0) return {false, "cmd_synth failed"};
    if (cmd_train(manifest, cfg, t_out / "model.wfck", std::nullopt, io).exit_code != 0) {
      return {false, "cmd_train failed"};
    }
    synth_trees.push_back(tree_bytes(s_out));
    train_trees.push_back(tree_bytes(t_out));
  }
  const bool synth_same = synth_trees[0] == synth_trees[1] && synth_trees[0] == synth_trees[2];
  const bool train_same = train_trees[0] == train_trees[1] && train_trees[0] == train_trees[2];
  return {synth_same && train_same,
          fmt("synth tree (%zu files) %s, train tree (%zu files) %s across 2 runs x workers {1, 3}",
              synth_trees[0].size(), synth_same ? "identical" : "DIFFERS", train_trees[0].size(),
              train_same ? "identical" : "DIFFERS")};
}

// 8. Top-third aggregation fixtures.
Outcome aggregation_golden() {
  const std::vector<double> three{0.9, 0.5, 0.1};
  std::vector<double> ramp;
  for (int i = 1; i <= 10; ++i) ramp.push_back(0.05 * i);
  const double a = aggregate_video(three);
  const double b = aggregate_video(ramp);
  return {std::abs(a - 0.9) <= 1e-12 && std::abs(b - 0.425) <= 1e-12,
          fmt("n=3 -> %.17g, n=10 ramp -> %.17g", a, b)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "gradient oracle", 30, gradient_oracle},
      {2, "AUC oracle", 10, auc_oracle},
      {3, "geometry oracle", 30, geometry_oracle},
      {4, "pipeline fidelity", 60, pipeline_fidelity},
      {5, "desk-scale experiment", 15 * 60, desk_experiment},
      {6, "schedule check", 60, schedule_check},
      {7, "determinism", 120, determinism},
      {8, "aggregation golden", 1, aggregation_golden},
  };
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("[%s] %d %s: %s; %.1f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : " OVER TIME LIMIT");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

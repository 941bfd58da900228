#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "warpfake/checkpoint.hpp"
#include "warpfake/model.hpp"
#include "warpfake/synth.hpp"

namespace warpfake {

struct TrainConfig {
  int batch_size = 64;
  double lr0 = 0.001;
  double lr_decay = 0.95;
  int lr_decay_steps = 1000;
  int max_epochs = 100;
  int hard_mine_epochs = 20;
  double hard_mine_lr = 0.0001;
  double hard_threshold = 0.5;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  int workers = 1;

  void validate() const;
  LrSchedule schedule() const { return {lr0, lr_decay, static_cast<std::uint64_t>(lr_decay_steps)}; }
  LrSchedule hard_schedule() const {
    return {hard_mine_lr, lr_decay, static_cast<std::uint64_t>(lr_decay_steps)};
  }
};

struct TrainLogRow {
  std::uint64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

using TrainLogger = std::function<void(const TrainLogRow&)>;

/// Fresh checkpoint with Kaiming-initialized weights and no training progress.
ModelCheckpoint initialize_checkpoint(const CnnArchitecture& arch, const TrainConfig& cfg);

/// Runs the remaining epochs of both stages starting from `start`:
///   stage 1: max_epochs passes with per-batch negative synthesis at lr0;
///   stage 2: hard_mine_epochs passes, each re-mining misclassified samples
///            and training on them at hard_mine_lr.
/// Every random choice is derived from cfg.seed and the (stage, epoch, batch)
/// position, so resuming from a checkpoint continues the same trajectory.
ModelCheckpoint train(std::span<const FaceExample> dataset, const TrainConfig& cfg,
                      const SynthConfig& synth, ModelCheckpoint start, const TrainLogger& log = {});

/// Indices of misclassified samples at `threshold`: real with p > threshold,
/// fake with p < threshold. p == threshold is never hard.
std::vector<std::size_t> select_hard(std::span<const double> fake_probabilities,
                                     std::span<const Label> labels, double threshold = 0.5);

std::vector<std::size_t> mine_hard(const Cnn<float>& net, std::span<const Sample> samples,
                                   double threshold = 0.5);

/// Anything that maps square crops to fake probabilities.
class FakeScorer {
 public:
  virtual ~FakeScorer() = default;
  virtual int input_size() const = 0;
  virtual std::vector<double> fake_probabilities(std::span<const ImageBuffer> crops) const = 0;
};

class CnnScorer final : public FakeScorer {
 public:
  explicit CnnScorer(Cnn<float> net) : net_(std::move(net)) {}
  int input_size() const override { return net_.architecture().input_size; }
  std::vector<double> fake_probabilities(std::span<const ImageBuffer> crops) const override;

 private:
  Cnn<float> net_;
};

/// Mean fake probability over the given crops of `image`.
double predict_from_rois(const FakeScorer& scorer, const ImageBuffer& image, std::span<const RoiSpec> rois);

/// Draws `n_crops` RoIs with sample_roi and averages their predictions.
double predict_image(const FakeScorer& scorer, const ImageBuffer& image, const LandmarkSet& landmarks,
                     Rng& rng, int n_crops = 10);

}  // namespace warpfake

#include "warpfake/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace warpfake {

namespace {

enum Stream : std::uint64_t {
  kStage1Order = 1,
  kStage1Batch = 2,
  kMiningOrder = 3,
  kMiningPool = 4,
  kHardOrder = 5,
};

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t epoch,
                          std::uint64_t batch = 0) {
  return Rng::derive(seed, {stream, epoch, batch}).next();
}

std::vector<FaceExample> gather(std::span<const FaceExample> dataset, std::span<const std::size_t> idx) {
  std::vector<FaceExample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(dataset[i]);
  return out;
}

struct StepResult {
  double lr;
  double loss;
};

StepResult sgd_on_samples(Cnn<float>& net, SgdMomentum<float>& opt, std::span<const Sample> samples,
                          const LrSchedule& schedule, std::uint64_t schedule_step) {
  std::vector<ImageBuffer> images;
  std::vector<int> labels;
  images.reserve(samples.size());
  for (const Sample& s : samples) {
    images.push_back(s.pixels);
    labels.push_back(static_cast<int>(s.label));
  }
  const Tensor4<float> batch = images_to_tensor<float>(images);
  std::vector<float> grad(net.parameters().size());
  const float loss = net.loss_and_gradient(batch, labels, grad);
  const double lr = opt.step(net.parameters(), grad, schedule, schedule_step);
  return {lr, static_cast<double>(loss)};
}

std::vector<double> predict_samples(const Cnn<float>& net, std::span<const Sample> samples) {
  constexpr std::size_t kChunk = 64;
  std::vector<double> out;
  out.reserve(samples.size());
  for (std::size_t begin = 0; begin < samples.size(); begin += kChunk) {
    const std::size_t end = std::min(samples.size(), begin + kChunk);
    std::vector<ImageBuffer> images;
    for (std::size_t i = begin; i < end; ++i) images.push_back(samples[i].pixels);
    for (float p : net.probabilities(images_to_tensor<float>(images))) out.push_back(p);
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(batch_size >= 2 && batch_size % 2 == 0, "batch_size must be even and >= 2");
  require(lr0 > 0.0 && std::isfinite(lr0), "lr0 must be > 0");
  require(lr_decay > 0.0 && std::isfinite(lr_decay), "lr_decay must be > 0");
  require(lr_decay_steps >= 1, "lr_decay_steps must be >= 1");
  require(max_epochs >= 0, "max_epochs must be >= 0");
  require(hard_mine_epochs >= 0, "hard_mine_epochs must be >= 0");
  require(hard_mine_lr > 0.0 && std::isfinite(hard_mine_lr), "hard_mine_lr must be > 0");
  require(hard_threshold > 0.0 && hard_threshold < 1.0, "hard_threshold must be in (0, 1)");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
  require(workers >= 1, "workers must be >= 1");
}

ModelCheckpoint initialize_checkpoint(const CnnArchitecture& arch, const TrainConfig& cfg) {
  Cnn<float> net(arch);
  net.init_kaiming(cfg.seed);
  ModelCheckpoint ck;
  ck.architecture = arch;
  ck.weights.assign(net.parameters().begin(), net.parameters().end());
  ck.seed = cfg.seed;
  ck.rng_digest = training_rng_digest(cfg.seed, 0, 0, 0);
  return ck;
}

ModelCheckpoint train(std::span<const FaceExample> dataset, const TrainConfig& cfg,
                      const SynthConfig& synth_in, ModelCheckpoint ck, const TrainLogger& log) {
  cfg.validate();
  SynthConfig synth = synth_in;
  synth.sample_size = ck.architecture.input_size;
  synth.validate();

  const bool work_left = ck.epochs_done < static_cast<std::uint32_t>(cfg.max_epochs) ||
                         ck.hard_epochs_done < static_cast<std::uint32_t>(cfg.hard_mine_epochs);
  if (!work_left) return ck;
  if (dataset.empty()) throw InsufficientInput("training dataset is empty");
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  if (dataset.size() < batch) {
    throw InsufficientInput("need at least " + std::to_string(batch) + " images, got " +
                            std::to_string(dataset.size()));
  }

  Cnn<float> net = ck.network();
  net.set_workers(cfg.workers);
  SgdMomentum<float> opt(net.parameters().size(), cfg.momentum);
  if (!ck.velocity.empty()) opt.mutable_velocity() = ck.velocity;

  const std::size_t n = dataset.size();
  const std::size_t batches_per_epoch = n / batch;
  auto emit = [&](double lr, double loss) {
    if (log) log({ck.step, lr, loss});
    ++ck.step;
  };

  for (; ck.epochs_done < static_cast<std::uint32_t>(cfg.max_epochs); ++ck.epochs_done) {
    const std::uint32_t epoch = ck.epochs_done;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng::derive(cfg.seed, {kStage1Order, epoch}).shuffle(std::span(order));
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const auto chosen = gather(dataset, std::span(order).subspan(b * batch, batch));
      const auto samples = build_batch(chosen, cfg.batch_size, synth,
                                       stream_seed(cfg.seed, kStage1Batch, epoch, b), cfg.workers);
      const StepResult r = sgd_on_samples(net, opt, samples, cfg.schedule(), ck.step);
      emit(r.lr, r.loss);
    }
  }

  for (; ck.hard_epochs_done < static_cast<std::uint32_t>(cfg.hard_mine_epochs); ++ck.hard_epochs_done) {
    const std::uint32_t epoch = ck.hard_epochs_done;
    if (epoch == 0) ck.hard_start_step = ck.step;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng::derive(cfg.seed, {kMiningOrder, epoch}).shuffle(std::span(order));
    std::vector<Sample> pool;
    for (std::size_t b = 0; b < batches_per_epoch; ++b) {
      const auto chosen = gather(dataset, std::span(order).subspan(b * batch, batch));
      auto samples = build_batch(chosen, cfg.batch_size, synth,
                                 stream_seed(cfg.seed, kMiningPool, epoch, b), cfg.workers);
      std::move(samples.begin(), samples.end(), std::back_inserter(pool));
    }
    std::vector<std::size_t> hard = mine_hard(net, pool, cfg.hard_threshold);
    Rng::derive(cfg.seed, {kHardOrder, epoch}).shuffle(std::span(hard));
    for (std::size_t begin = 0; begin < hard.size(); begin += batch) {
      const std::size_t end = std::min(hard.size(), begin + batch);
      std::vector<Sample> chunk;
      for (std::size_t i = begin; i < end; ++i) chunk.push_back(pool[hard[i]]);
      const StepResult r =
          sgd_on_samples(net, opt, chunk, cfg.hard_schedule(), ck.step - ck.hard_start_step);
      emit(r.lr, r.loss);
    }
  }

  ck.weights.assign(net.parameters().begin(), net.parameters().end());
  ck.velocity.assign(opt.velocity().begin(), opt.velocity().end());
  ck.seed = cfg.seed;
  ck.rng_digest = training_rng_digest(cfg.seed, ck.step, ck.epochs_done, ck.hard_epochs_done);
  return ck;
}

std::vector<std::size_t> select_hard(std::span<const double> fake_probabilities,
                                     std::span<const Label> labels, double threshold) {
  if (fake_probabilities.size() != labels.size()) throw ShapeMismatch("score/label count mismatch");
  std::vector<std::size_t> hard;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = fake_probabilities[i];
    const bool miss = labels[i] == Label::kReal ? p > threshold : p < threshold;
    if (miss) hard.push_back(i);
  }
  return hard;
}

std::vector<std::size_t> mine_hard(const Cnn<float>& net, std::span<const Sample> samples, double threshold) {
  std::vector<Label> labels;
  labels.reserve(samples.size());
  for (const Sample& s : samples) labels.push_back(s.label);
  return select_hard(predict_samples(net, samples), labels, threshold);
}

std::vector<double> CnnScorer::fake_probabilities(std::span<const ImageBuffer> crops) const {
  std::vector<double> out;
  for (float p : net_.probabilities(images_to_tensor<float>(crops))) out.push_back(p);
  return out;
}

double predict_from_rois(const FakeScorer& scorer, const ImageBuffer& image, std::span<const RoiSpec> rois) {
  if (rois.empty()) throw InvalidArgument("at least one RoI is required");
  std::vector<ImageBuffer> crops;
  crops.reserve(rois.size());
  for (const RoiSpec& roi : rois) crops.push_back(crop_resize(image, roi, scorer.input_size()));
  const std::vector<double> probs = scorer.fake_probabilities(crops);
  if (probs.size() != crops.size()) throw ShapeMismatch("scorer returned the wrong number of scores");
  double sum = 0.0;
  for (double p : probs) sum += p;
  return sum / static_cast<double>(probs.size());
}

double predict_image(const FakeScorer& scorer, const ImageBuffer& image, const LandmarkSet& landmarks,
                     Rng& rng, int n_crops) {
  if (n_crops < 1) throw InvalidArgument("n_crops must be >= 1");
  std::vector<RoiSpec> rois;
  for (int i = 0; i < n_crops; ++i) rois.push_back(sample_roi(landmarks, image.width(), image.height(), rng));
  return predict_from_rois(scorer, image, rois);
}

}  // namespace warpfake

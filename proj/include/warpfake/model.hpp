#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "warpfake/raster.hpp"

namespace warpfake {

/// Plain CNN: blocks of [3x3 conv (stride 1, pad 1) -> ReLU -> 2x2 max-pool],
/// then global average pooling and a single-logit linear head.
struct CnnArchitecture {
  int input_size = 224;
  std::vector<int> channels{8, 16, 32, 64};

  void validate() const;
  /// Spatial side length after the last pool.
  int final_spatial() const;
  int final_channels() const { return channels.empty() ? 3 : channels.back(); }
  std::size_t parameter_count() const;

  bool operator==(const CnnArchitecture&) const = default;
};

/// Dense NCHW batch.
template <typename T>
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_) {}

  std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
  std::span<const T> sample(int i) const {
    return std::span<const T>(data).subspan(static_cast<std::size_t>(i) * sample_size(), sample_size());
  }
  T& at(int i, int ch, int y, int x) {
    return data[((static_cast<std::size_t>(i) * c + ch) * h + y) * w + x];
  }
};

/// Converts HWC images to an NCHW tensor with values shifted to [-0.5, 0.5].
template <typename T>
Tensor4<T> images_to_tensor(std::span<const ImageBuffer> images);

/// Offsets of one conv block's parameters inside the flat parameter vector.
struct ConvLayout {
  int in_channels = 0;
  int out_channels = 0;
  std::size_t weight_offset = 0;  // [out][in][3][3]
  std::size_t bias_offset = 0;    // [out]
};

template <typename T>
class Cnn {
 public:
  /// All parameters zero-initialized.
  explicit Cnn(CnnArchitecture arch);

  const CnnArchitecture& architecture() const { return arch_; }
  std::span<T> parameters() { return params_; }
  std::span<const T> parameters() const { return params_; }
  const std::vector<ConvLayout>& conv_layout() const { return layout_; }
  std::size_t head_weight_offset() const { return head_offset_; }
  std::size_t head_bias_offset() const { return head_offset_ + arch_.final_channels(); }

  /// Kaiming-uniform fan-in weights, zero biases.
  void init_kaiming(std::uint64_t seed);
  void set_workers(int workers) { workers_ = workers < 1 ? 1 : workers; }

  std::vector<T> logits(const Tensor4<T>& batch) const;
  std::vector<T> probabilities(const Tensor4<T>& batch) const;

  /// Mean binary cross-entropy over the batch; labels are 0 (real) or 1 (fake).
  T loss(const Tensor4<T>& batch, std::span<const int> labels) const;
  /// Same loss; writes its gradient w.r.t. every parameter into `grad`.
  T loss_and_gradient(const Tensor4<T>& batch, std::span<const int> labels, std::span<T> grad) const;

 private:
  struct Trace;
  void check_batch(const Tensor4<T>& batch) const;
  T forward_sample(std::span<const T> input, Trace* trace) const;
  void backward_sample(const Trace& trace, T dlogit, std::span<T> grad) const;

  CnnArchitecture arch_;
  std::vector<ConvLayout> layout_;
  std::size_t head_offset_ = 0;
  std::vector<T> params_;
  int workers_ = 1;
};

template <typename T>
T sigmoid(T z);

/// Numerically stable log(1 + e^-|z|) based BCE of one logit.
template <typename T>
T bce_with_logit(T logit, int label);

/// lr(step) = base_lr * decay^floor(step / decay_steps).
struct LrSchedule {
  double base_lr = 0.001;
  double decay = 0.95;
  std::uint64_t decay_steps = 1000;

  double at(std::uint64_t step) const;
};

/// Classical momentum SGD: v = momentum * v + g; w -= lr * v.
template <typename T>
class SgdMomentum {
 public:
  SgdMomentum(std::size_t n_params, double momentum) : velocity_(n_params, T(0)), momentum_(momentum) {}

  /// One update at lr = schedule.at(schedule_step); returns that rate.
  double step(std::span<T> params, std::span<const T> grads, const LrSchedule& schedule,
              std::uint64_t schedule_step);

  std::span<const T> velocity() const { return velocity_; }
  std::vector<T>& mutable_velocity() { return velocity_; }

 private:
  std::vector<T> velocity_;
  double momentum_;
};

}  // namespace warpfake

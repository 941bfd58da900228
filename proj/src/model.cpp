#include "warpfake/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "warpfake/parallel.hpp"
#include "warpfake/rng.hpp"

namespace warpfake {

void CnnArchitecture::validate() const {
  if (input_size < 1) throw InvalidArgument("input_size must be >= 1");
  for (int c : channels) {
    if (c < 1) throw InvalidArgument("block channel counts must be >= 1");
  }
  if (final_spatial() < 1) {
    throw InvalidArgument("input_size " + std::to_string(input_size) + " is too small for " +
                          std::to_string(channels.size()) + " pooling blocks");
  }
}

int CnnArchitecture::final_spatial() const {
  int s = input_size;
  for (std::size_t i = 0; i < channels.size(); ++i) s /= 2;
  return s;
}

std::size_t CnnArchitecture::parameter_count() const {
  std::size_t n = 0;
  int in = 3;
  for (int out : channels) {
    n += static_cast<std::size_t>(out) * in * 9 + out;
    in = out;
  }
  return n + static_cast<std::size_t>(in) + 1;
}

template <typename T>
Tensor4<T> images_to_tensor(std::span<const ImageBuffer> images) {
  if (images.empty()) return {};
  const int h = images[0].height(), w = images[0].width();
  Tensor4<T> t(static_cast<int>(images.size()), 3, h, w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ImageBuffer& img = images[i];
    if (img.height() != h || img.width() != w) throw ShapeMismatch("batch images differ in size");
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          t.at(static_cast<int>(i), c, y, x) = static_cast<T>(img.at(x, y, c)) - T(0.5);
        }
      }
    }
  }
  return t;
}

template <typename T>
T sigmoid(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

template <typename T>
T bce_with_logit(T logit, int label) {
  return std::max(logit, T(0)) - logit * static_cast<T>(label) + std::log1p(std::exp(-std::abs(logit)));
}

namespace {

// out[oc] = bias[oc] + sum_ic W[oc][ic] * in[ic], 3x3 taps, zero padding.
template <typename T>
void conv3x3_forward(std::span<const T> in, int in_c, int s, std::span<const T> weights,
                     std::span<const T> bias, int out_c, std::span<T> out) {
  const std::size_t plane = static_cast<std::size_t>(s) * s;
  for (int oc = 0; oc < out_c; ++oc) {
    T* o = out.data() + oc * plane;
    std::fill(o, o + plane, bias[oc]);
    for (int ic = 0; ic < in_c; ++ic) {
      const T* src = in.data() + ic * plane;
      const T* k = weights.data() + (static_cast<std::size_t>(oc) * in_c + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const int y_begin = std::max(0, -dy), y_end = std::min(s, s - dy);
        for (int kx = 0; kx < 3; ++kx) {
          const int dx = kx - 1;
          const int x_begin = std::max(0, -dx), x_end = std::min(s, s - dx);
          const T wv = k[ky * 3 + kx];
          for (int y = y_begin; y < y_end; ++y) {
            T* orow = o + static_cast<std::size_t>(y) * s;
            const T* irow = src + static_cast<std::size_t>(y + dy) * s + dx;
            for (int x = x_begin; x < x_end; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
  }
}

template <typename T>
void conv3x3_backward(std::span<const T> in, int in_c, int s, std::span<const T> weights, int out_c,
                      std::span<const T> dout, std::span<T> dweights, std::span<T> dbias,
                      std::span<T> din) {
  const std::size_t plane = static_cast<std::size_t>(s) * s;
  const bool want_input_grad = !din.empty();
  if (want_input_grad) std::fill(din.begin(), din.end(), T(0));
  for (int oc = 0; oc < out_c; ++oc) {
    const T* g = dout.data() + oc * plane;
    T bsum = T(0);
    for (std::size_t i = 0; i < plane; ++i) bsum += g[i];
    dbias[oc] += bsum;
    for (int ic = 0; ic < in_c; ++ic) {
      const T* src = in.data() + ic * plane;
      const std::size_t kofs = (static_cast<std::size_t>(oc) * in_c + ic) * 9;
      T* dsrc = want_input_grad ? din.data() + ic * plane : nullptr;
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const int y_begin = std::max(0, -dy), y_end = std::min(s, s - dy);
        for (int kx = 0; kx < 3; ++kx) {
          const int dx = kx - 1;
          const int x_begin = std::max(0, -dx), x_end = std::min(s, s - dx);
          const T wv = weights[kofs + ky * 3 + kx];
          T acc = T(0);
          for (int y = y_begin; y < y_end; ++y) {
            const T* grow = g + static_cast<std::size_t>(y) * s;
            const std::size_t irow = static_cast<std::size_t>(y + dy) * s + dx;
            for (int x = x_begin; x < x_end; ++x) acc += grow[x] * src[irow + x];
            if (dsrc != nullptr) {
              for (int x = x_begin; x < x_end; ++x) dsrc[irow + x] += wv * grow[x];
            }
          }
          dweights[kofs + ky * 3 + kx] += acc;
        }
      }
    }
  }
}

}  // namespace

template <typename T>
struct Cnn<T>::Trace {
  // Per block: input activations, pre-activation conv output, argmax of each pooled cell.
  std::vector<std::vector<T>> inputs;
  std::vector<std::vector<T>> preact;
  std::vector<std::vector<std::uint32_t>> argmax;
  std::vector<int> sizes;
  std::vector<T> pooled_features;
};

template <typename T>
Cnn<T>::Cnn(CnnArchitecture arch) : arch_(std::move(arch)) {
  arch_.validate();
  std::size_t offset = 0;
  int in = 3;
  for (int out : arch_.channels) {
    ConvLayout l;
    l.in_channels = in;
    l.out_channels = out;
    l.weight_offset = offset;
    offset += static_cast<std::size_t>(out) * in * 9;
    l.bias_offset = offset;
    offset += out;
    layout_.push_back(l);
    in = out;
  }
  head_offset_ = offset;
  params_.assign(arch_.parameter_count(), T(0));
}

template <typename T>
void Cnn<T>::init_kaiming(std::uint64_t seed) {
  Rng rng = Rng::derive(seed, {0x696e6974});
  std::fill(params_.begin(), params_.end(), T(0));
  for (const ConvLayout& l : layout_) {
    const double bound = std::sqrt(6.0 / (l.in_channels * 9.0));
    const std::size_t n = static_cast<std::size_t>(l.out_channels) * l.in_channels * 9;
    for (std::size_t i = 0; i < n; ++i) params_[l.weight_offset + i] = static_cast<T>(rng.uniform(-bound, bound));
  }
  const double bound = std::sqrt(6.0 / arch_.final_channels());
  for (int i = 0; i < arch_.final_channels(); ++i) {
    params_[head_offset_ + i] = static_cast<T>(rng.uniform(-bound, bound));
  }
}

template <typename T>
void Cnn<T>::check_batch(const Tensor4<T>& batch) const {
  if (batch.c != 3 || batch.h != arch_.input_size || batch.w != arch_.input_size) {
    throw ShapeMismatch("expected 3x" + std::to_string(arch_.input_size) + "x" +
                        std::to_string(arch_.input_size) + " inputs, got " + std::to_string(batch.c) +
                        "x" + std::to_string(batch.h) + "x" + std::to_string(batch.w));
  }
}

template <typename T>
T Cnn<T>::forward_sample(std::span<const T> input, Trace* trace) const {
  std::vector<T> x(input.begin(), input.end());
  int s = arch_.input_size;
  for (const ConvLayout& l : layout_) {
    const std::size_t plane = static_cast<std::size_t>(s) * s;
    std::vector<T> z(plane * l.out_channels);
    conv3x3_forward<T>(x, l.in_channels, s,
                       std::span<const T>(params_).subspan(l.weight_offset),
                       std::span<const T>(params_).subspan(l.bias_offset), l.out_channels, z);
    const int p = s / 2;
    std::vector<T> pooled(static_cast<std::size_t>(p) * p * l.out_channels);
    std::vector<std::uint32_t> arg(trace != nullptr ? pooled.size() : 0);
    for (int c = 0; c < l.out_channels; ++c) {
      const T* zc = z.data() + c * plane;
      for (int py = 0; py < p; ++py) {
        for (int px = 0; px < p; ++px) {
          // ReLU then max: max(relu(a), relu(b)) == relu(max(a, b)).
          std::uint32_t best = static_cast<std::uint32_t>(2 * py * s + 2 * px);
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const auto idx = static_cast<std::uint32_t>((2 * py + dy) * s + 2 * px + dx);
              if (zc[idx] > zc[best]) best = idx;
            }
          }
          const std::size_t out_idx = (static_cast<std::size_t>(c) * p + py) * p + px;
          pooled[out_idx] = std::max(zc[best], T(0));
          if (trace != nullptr) arg[out_idx] = best;
        }
      }
    }
    if (trace != nullptr) {
      trace->inputs.push_back(std::move(x));
      trace->preact.push_back(std::move(z));
      trace->argmax.push_back(std::move(arg));
      trace->sizes.push_back(s);
    }
    x = std::move(pooled);
    s = p;
  }
  const int channels = arch_.final_channels();
  const std::size_t plane = static_cast<std::size_t>(s) * s;
  std::vector<T> features(channels);
  for (int c = 0; c < channels; ++c) {
    T sum = T(0);
    for (std::size_t i = 0; i < plane; ++i) sum += x[c * plane + i];
    features[c] = sum / static_cast<T>(plane);
  }
  T logit = params_[head_bias_offset()];
  for (int c = 0; c < channels; ++c) logit += params_[head_offset_ + c] * features[c];
  if (trace != nullptr) trace->pooled_features = std::move(features);
  return logit;
}

template <typename T>
void Cnn<T>::backward_sample(const Trace& trace, T dlogit, std::span<T> grad) const {
  const int channels = arch_.final_channels();
  const int s_final = arch_.final_spatial();
  const std::size_t plane = static_cast<std::size_t>(s_final) * s_final;
  grad[head_bias_offset()] += dlogit;
  std::vector<T> dx(plane * channels);
  for (int c = 0; c < channels; ++c) {
    grad[head_offset_ + c] += dlogit * trace.pooled_features[c];
    const T g = dlogit * params_[head_offset_ + c] / static_cast<T>(plane);
    std::fill(dx.begin() + c * plane, dx.begin() + (c + 1) * plane, g);
  }
  for (std::size_t b = layout_.size(); b-- > 0;) {
    const ConvLayout& l = layout_[b];
    const int s = trace.sizes[b];
    const std::size_t full = static_cast<std::size_t>(s) * s;
    const std::vector<T>& z = trace.preact[b];
    std::vector<T> dz(full * l.out_channels, T(0));
    const int p = s / 2;
    for (int c = 0; c < l.out_channels; ++c) {
      for (std::size_t i = 0; i < static_cast<std::size_t>(p) * p; ++i) {
        const std::size_t out_idx = c * static_cast<std::size_t>(p) * p + i;
        const std::size_t src = c * full + trace.argmax[b][out_idx];
        if (z[src] > T(0)) dz[src] += dx[out_idx];
      }
    }
    std::vector<T> din(b == 0 ? 0 : full * l.in_channels);
    conv3x3_backward<T>(trace.inputs[b], l.in_channels, s,
                        std::span<const T>(params_).subspan(l.weight_offset), l.out_channels, dz,
                        grad.subspan(l.weight_offset), grad.subspan(l.bias_offset), din);
    dx = std::move(din);
  }
}

template <typename T>
std::vector<T> Cnn<T>::logits(const Tensor4<T>& batch) const {
  check_batch(batch);
  std::vector<T> out(batch.n);
  parallel_for(static_cast<std::size_t>(batch.n), workers_,
               [&](std::size_t i) { out[i] = forward_sample(batch.sample(static_cast<int>(i)), nullptr); });
  return out;
}

template <typename T>
std::vector<T> Cnn<T>::probabilities(const Tensor4<T>& batch) const {
  std::vector<T> out = logits(batch);
  for (T& v : out) v = sigmoid(v);
  return out;
}

template <typename T>
T Cnn<T>::loss(const Tensor4<T>& batch, std::span<const int> labels) const {
  if (labels.size() != static_cast<std::size_t>(batch.n)) throw ShapeMismatch("label count != batch size");
  const std::vector<T> z = logits(batch);
  T sum = T(0);
  for (std::size_t i = 0; i < z.size(); ++i) sum += bce_with_logit(z[i], labels[i]);
  return sum / static_cast<T>(z.size());
}

template <typename T>
T Cnn<T>::loss_and_gradient(const Tensor4<T>& batch, std::span<const int> labels,
                            std::span<T> grad) const {
  check_batch(batch);
  if (labels.size() != static_cast<std::size_t>(batch.n)) throw ShapeMismatch("label count != batch size");
  if (grad.size() != params_.size()) throw ShapeMismatch("gradient buffer size != parameter count");
  for (int label : labels) {
    if (label != 0 && label != 1) throw InvalidArgument("labels must be 0 or 1");
  }
  const auto n = static_cast<std::size_t>(batch.n);
  std::vector<std::vector<T>> per_sample(n);
  std::vector<T> losses(n);
  parallel_for(n, workers_, [&](std::size_t i) {
    Trace trace;
    const T z = forward_sample(batch.sample(static_cast<int>(i)), &trace);
    losses[i] = bce_with_logit(z, labels[i]);
    const T dlogit = (sigmoid(z) - static_cast<T>(labels[i])) / static_cast<T>(n);
    per_sample[i].assign(params_.size(), T(0));
    backward_sample(trace, dlogit, per_sample[i]);
  });
  // Reduce in sample order so the result is independent of the worker count.
  std::fill(grad.begin(), grad.end(), T(0));
  T total = T(0);
  for (std::size_t i = 0; i < n; ++i) {
    total += losses[i];
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += per_sample[i][j];
  }
  return total / static_cast<T>(n);
}

double LrSchedule::at(std::uint64_t step) const {
  const auto k = static_cast<double>(step / decay_steps);
  return base_lr * std::pow(decay, k);
}

template <typename T>
double SgdMomentum<T>::step(std::span<T> params, std::span<const T> grads, const LrSchedule& schedule,
                            std::uint64_t schedule_step) {
  if (params.size() != velocity_.size() || grads.size() != velocity_.size()) {
    throw ShapeMismatch("SGD buffers differ in size");
  }
  const double lr = schedule.at(schedule_step);
  const T mu = static_cast<T>(momentum_);
  const T rate = static_cast<T>(lr);
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity_[i] = mu * velocity_[i] + grads[i];
    params[i] -= rate * velocity_[i];
  }
  return lr;
}

template class Cnn<float>;
template class Cnn<double>;
template class SgdMomentum<float>;
template class SgdMomentum<double>;
template Tensor4<float> images_to_tensor<float>(std::span<const ImageBuffer>);
template Tensor4<double> images_to_tensor<double>(std::span<const ImageBuffer>);
template float sigmoid<float>(float);
template double sigmoid<double>(double);
template float bce_with_logit<float>(float, int);
template double bce_with_logit<double>(double, int);

}  // namespace warpfake

#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "frodo/data.hpp"
#include "frodo/objective.hpp"
#include "frodo/rng.hpp"
#include "frodo/vec.hpp"

namespace frodo {

// Multilayer perceptron with tanh hidden activations and a softmax
// cross-entropy output, trained on mini-batches drawn from a private data
// partition. Parameters live in one flat vector laid out per layer as the
// weight matrix (row-major, out x in) followed by the bias.
//
// value() is the mean per-sample loss over the whole partition and is
// deterministic; gradient() backpropagates the exact mini-batch gradient and
// advances the sampler, reshuffling once per epoch (drop-last batching).
class MlpObjective final : public Objective {
 public:
  MlpObjective(std::vector<int> layers, Dataset partition, int batch_size,
               std::uint64_t seed)
      : layers_(std::move(layers)),
        data_(std::move(partition)),
        batch_size_(batch_size),
        rng_(derive_seed(seed, 0x3a17)) {
    if (layers_.size() < 2) {
      throw std::invalid_argument("mlp needs at least input and output layers");
    }
    for (int width : layers_) {
      if (width < 1) throw std::invalid_argument("mlp layer width must be positive");
    }
    if (data_.size() == 0) throw std::invalid_argument("mlp partition is empty");
    if (layers_.front() != data_.dim) {
      throw std::invalid_argument("mlp input width does not match data dimension");
    }
    if (layers_.back() != data_.num_classes) {
      throw std::invalid_argument("mlp output width does not match class count");
    }
    if (batch_size_ < 1 || batch_size_ > static_cast<int>(data_.size())) {
      throw std::invalid_argument("batch_size must be in [1, partition size]");
    }
    for (int label : data_.labels) {
      if (label < 0 || label >= data_.num_classes) {
        throw std::invalid_argument("label outside class range: " + std::to_string(label));
      }
    }
    offsets_.push_back(0);
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
      const std::size_t w = static_cast<std::size_t>(layers_[l + 1]) *
                            static_cast<std::size_t>(layers_[l]);
      offsets_.push_back(offsets_.back() + w);                      // weights
      offsets_.push_back(offsets_.back() + static_cast<std::size_t>(layers_[l + 1]));  // bias
    }
    order_.resize(data_.size());
    std::iota(order_.begin(), order_.end(), 0);
    cursor_ = data_.size();  // force a shuffle before the first batch
  }

  std::size_t dimension() const override { return offsets_.back(); }

  double value(const Vec& params) const override {
    check_params(params);
    double total = 0.0;
    std::vector<Vec> acts;
    for (std::size_t i = 0; i < data_.size(); ++i) {
      total += forward(params, i, acts);
    }
    return total / static_cast<double>(data_.size());
  }

  Vec gradient(const Vec& params) override {
    check_params(params);
    Vec grad = zeros(dimension());
    std::vector<Vec> acts;
    std::vector<Vec> deltas(layers_.size() - 1);
    if (order_.size() - cursor_ < static_cast<std::size_t>(batch_size_)) {
      // next epoch: reshuffle, drop the short remainder
      rng_.shuffle(order_);
      cursor_ = 0;
    }
    for (int b = 0; b < batch_size_; ++b) {
      const std::size_t sample = order_[cursor_++];
      forward(params, sample, acts);
      backward(params, sample, acts, deltas, grad);
    }
    scale_in_place(grad, 1.0 / static_cast<double>(batch_size_));
    return grad;
  }

  const std::vector<int>& layers() const { return layers_; }
  int batch_size() const { return batch_size_; }
  std::size_t partition_size() const { return data_.size(); }

  std::size_t weight_offset(std::size_t layer) const { return offsets_[2 * layer]; }
  std::size_t bias_offset(std::size_t layer) const { return offsets_[2 * layer + 1]; }

  // Scaled uniform init (Glorot); biases start at zero.
  static Vec initial_params(const std::vector<int>& layers, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x1a17));
    Vec params;
    for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
      const int fan_in = layers[l];
      const int fan_out = layers[l + 1];
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      for (int i = 0; i < fan_out * fan_in; ++i) {
        params.push_back(rng.uniform(-bound, bound));
      }
      for (int i = 0; i < fan_out; ++i) params.push_back(0.0);
    }
    return params;
  }

 private:
  void check_params(const Vec& params) const {
    if (params.size() != dimension()) {
      throw std::invalid_argument("parameter vector has wrong dimension");
    }
  }

  // Runs the network on one sample; fills acts[l] with the activation of
  // layer l (acts[0] is the input, the last entry holds softmax probs).
  // Returns the cross-entropy loss of the sample.
  double forward(const Vec& params, std::size_t sample,
                 std::vector<Vec>& acts) const {
    acts.resize(layers_.size());
    const double* x = data_.row(sample);
    acts[0].assign(x, x + data_.dim);
    for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
      const int in_w = layers_[l];
      const int out_w = layers_[l + 1];
      const double* w = params.data() + offsets_[2 * l];
      const double* b = params.data() + offsets_[2 * l + 1];
      Vec& out = acts[l + 1];
      out.assign(static_cast<std::size_t>(out_w), 0.0);
      for (int r = 0; r < out_w; ++r) {
        double z = b[r];
        const double* row = w + static_cast<std::size_t>(r) * in_w;
        for (int c = 0; c < in_w; ++c) z += row[c] * acts[l][static_cast<std::size_t>(c)];
        out[static_cast<std::size_t>(r)] = z;
      }
      if (l + 2 < layers_.size()) {
        for (double& v : out) v = std::tanh(v);
      }
    }
    // softmax on the output logits, in place
    Vec& logits = acts.back();
    double peak = logits[0];
    for (double v : logits) peak = std::max(peak, v);
    double denom = 0.0;
    for (double& v : logits) {
      v = std::exp(v - peak);
      denom += v;
    }
    for (double& v : logits) v /= denom;
    const int label = data_.labels[sample];
    const double p = logits[static_cast<std::size_t>(label)];
    return -std::log(std::max(p, 1e-300));
  }

  // Accumulates this sample's parameter gradient into grad. acts must hold
  // the forward pass of the same sample.
  void backward(const Vec& params, std::size_t sample,
                const std::vector<Vec>& acts, std::vector<Vec>& deltas,
                Vec& grad) const {
    const std::size_t last = layers_.size() - 2;
    deltas[last] = acts[last + 1];
    deltas[last][static_cast<std::size_t>(data_.labels[sample])] -= 1.0;

    for (std::size_t l = last + 1; l-- > 0;) {
      const int in_w = layers_[l];
      const int out_w = layers_[l + 1];
      const double* w = params.data() + offsets_[2 * l];
      double* gw = grad.data() + offsets_[2 * l];
      double* gb = grad.data() + offsets_[2 * l + 1];
      const Vec& delta = deltas[l];
      for (int r = 0; r < out_w; ++r) {
        const double d = delta[static_cast<std::size_t>(r)];
        double* grow = gw + static_cast<std::size_t>(r) * in_w;
        for (int c = 0; c < in_w; ++c) grow[c] += d * acts[l][static_cast<std::size_t>(c)];
        gb[r] += d;
      }
      if (l > 0) {
        // propagate through the tanh of layer l
        Vec& prev = deltas[l - 1];
        prev.assign(static_cast<std::size_t>(in_w), 0.0);
        for (int r = 0; r < out_w; ++r) {
          const double d = delta[static_cast<std::size_t>(r)];
          const double* row = w + static_cast<std::size_t>(r) * in_w;
          for (int c = 0; c < in_w; ++c) prev[static_cast<std::size_t>(c)] += d * row[c];
        }
        for (int c = 0; c < in_w; ++c) {
          const double a = acts[l][static_cast<std::size_t>(c)];
          prev[static_cast<std::size_t>(c)] *= 1.0 - a * a;
        }
      }
    }
  }

  std::vector<int> layers_;
  Dataset data_;
  int batch_size_;
  Rng rng_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace frodo

// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// EDSR-baseline style super-resolution network: 3x3 conv head, a chain of
// residual blocks with a long skip, and a sub-pixel upsampler tail. No batch
// norm, no mean-shift layers; images live in [0,1].

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mmsr/rng.hpp"
#include "mmsr/tensor_ops.hpp"

namespace mmsr {

struct SRModelConfig {
  int n_res_blocks = 16;
  int n_features = 64;
  int scale = 4;  // one of {2, 3, 4}
  double res_scale = 1.0;
  int in_channels = 3;

  static SRModelConfig paper_preset() { return {16, 64, 4, 1.0, 3}; }
  static SRModelConfig desk_preset() { return {2, 8, 4, 1.0, 3}; }

  void validate() const {
    if (scale != 2 && scale != 3 && scale != 4)
      throw UsageError("SRModelConfig: unsupported scale " + std::to_string(scale));
    if (n_res_blocks < 1 || n_features < 1 || in_channels < 1)
      throw UsageError("SRModelConfig: block/feature/channel counts must be positive");
  }

  bool operator==(const SRModelConfig&) const = default;
};

template <typename T>
struct NamedParam {
  std::string name;
  Tensor<T> tensor;  // shares storage with the layer
};

// 3x3 (or kxk) convolution layer with same-padding, stride 1.
template <typename T>
struct Conv2dLayer {
  Tensor<T> weight;  // [Cout, Cin, k, k]
  Tensor<T> bias;    // [Cout]
  int k = 3;

  Conv2dLayer() = default;

  // He fan-in initialization, zero bias. `zero_init` zeroes the weights too
  // (used by the fusion net's final projection).
  Conv2dLayer(int cin, int cout, int k_, Rng& rng, bool zero_init = false) : k(k_) {
    weight = Tensor<T>::zeros({cout, cin, k, k}, /*requires_grad=*/true);
    bias = Tensor<T>::zeros({cout}, /*requires_grad=*/true);
    if (!zero_init) {
      const double stddev = std::sqrt(2.0 / (static_cast<double>(cin) * k * k));
      for (T& v : weight.data()) v = static_cast<T>(stddev * rng.gaussian());
    }
  }

  Tensor<T> operator()(const Tensor<T>& x) const { return conv2d(x, weight, bias, k / 2, 1); }

  void collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
    out.push_back({prefix + ".weight", weight});
    out.push_back({prefix + ".bias", bias});
  }
};

// conv3x3 -> ReLU -> conv3x3, output = input + res_scale * branch.
template <typename T>
struct ResBlock {
  Conv2dLayer<T> conv1, conv2;
  T res_scale = T(1);

  ResBlock() = default;
  ResBlock(int features, T res_scale_, Rng& rng)
      : conv1(features, features, 3, rng), conv2(features, features, 3, rng), res_scale(res_scale_) {}

  Tensor<T> operator()(const Tensor<T>& x) const {
    Tensor<T> branch = conv2(relu(conv1(x)));
    if (res_scale != T(1)) branch = scale(branch, res_scale);
    return add(x, branch);
  }

  void collect(const std::string& prefix, std::vector<NamedParam<T>>& out) {
    conv1.collect(prefix + ".conv1", out);
    conv2.collect(prefix + ".conv2", out);
  }
};

template <typename T>
class SRModel {
 public:
  SRModel() = default;

  // Parameters are drawn from per-layer streams derived from (seed, layer
  // index), so the same seed always yields bit-identical weights.
  SRModel(const SRModelConfig& cfg, uint64_t seed, std::string class_label = "")
      : cfg_(cfg), class_label_(std::move(class_label)) {
    cfg.validate();
    int layer = 0;
    auto next_rng = [&]() { return Rng(mix_seed(seed, static_cast<uint64_t>(layer++))); };

    Rng r0 = next_rng();
    head_ = Conv2dLayer<T>(cfg.in_channels, cfg.n_features, 3, r0);
    for (int i = 0; i < cfg.n_res_blocks; ++i) {
      Rng r = next_rng();
      body_.emplace_back(cfg.n_features, static_cast<T>(cfg.res_scale), r);
    }
    Rng rb = next_rng();
    body_end_ = Conv2dLayer<T>(cfg.n_features, cfg.n_features, 3, rb);

    // x4 = two successive x2 sub-pixel stages; x2/x3 = a single stage.
    const std::vector<int> factors = cfg.scale == 4 ? std::vector<int>{2, 2} : std::vector<int>{cfg.scale};
    for (int r : factors) {
      Rng ru = next_rng();
      up_convs_.emplace_back(cfg.n_features, cfg.n_features * r * r, 3, ru);
      up_factors_.push_back(r);
    }
    Rng rt = next_rng();
    tail_ = Conv2dLayer<T>(cfg.n_features, cfg.in_channels, 3, rt);
  }

  Tensor<T> forward(const Tensor<T>& lr) const {
    if (lr.ndim() != 4 || lr.dim(1) != cfg_.in_channels)
      throw ShapeError("SRModel: input must be [N," + std::to_string(cfg_.in_channels) + ",H,W]");
    Tensor<T> h = head_(lr);
    Tensor<T> b = h;
    for (const auto& blk : body_) b = blk(b);
    b = body_end_(b);
    Tensor<T> f = add(b, h);
    for (size_t i = 0; i < up_convs_.size(); ++i)
      f = pixel_shuffle(up_convs_[i](f), up_factors_[i]);
    return tail_(f);
  }

  std::vector<NamedParam<T>> parameters() {
    std::vector<NamedParam<T>> out;
    head_.collect("head", out);
    for (size_t i = 0; i < body_.size(); ++i) body_[i].collect("body." + std::to_string(i), out);
    body_end_.collect("body_end", out);
    for (size_t i = 0; i < up_convs_.size(); ++i)
      up_convs_[i].collect("upsample." + std::to_string(i), out);
    tail_.collect("tail", out);
    return out;
  }

  int64_t parameter_count() {
    int64_t n = 0;
    for (const auto& p : parameters()) n += p.tensor.numel();
    return n;
  }

  int upsample_stages() const { return static_cast<int>(up_factors_.size()); }
  const SRModelConfig& config() const { return cfg_; }
  const std::string& class_label() const { return class_label_; }
  void set_class_label(std::string label) { class_label_ = std::move(label); }

  // Direct layer access (tests, checkpoint loader).
  Conv2dLayer<T>& head() { return head_; }
  std::vector<ResBlock<T>>& body() { return body_; }
  Conv2dLayer<T>& body_end() { return body_end_; }
  std::vector<Conv2dLayer<T>>& up_convs() { return up_convs_; }
  Conv2dLayer<T>& tail() { return tail_; }

 private:
  SRModelConfig cfg_;
  std::string class_label_;
  Conv2dLayer<T> head_;
  std::vector<ResBlock<T>> body_;
  Conv2dLayer<T> body_end_;
  std::vector<Conv2dLayer<T>> up_convs_;
  std::vector<int> up_factors_;
};

template <typename T>
SRModel<T> build_sr_model(const SRModelConfig& cfg, uint64_t seed, const std::string& label = "") {
  return SRModel<T>(cfg, seed, label);
}

// Runs the model; output is left unclamped unless requested so training
// gradients can flow. Evaluation and export clamp to [0,1].
template <typename T>
Tensor<T> super_resolve(const SRModel<T>& model, const Tensor<T>& lr, bool clamp_output = false) {
  Tensor<T> out = model.forward(lr);
  if (!out.all_finite()) throw NumericError("super_resolve: non-finite activations");
  return clamp_output ? clamp01(out) : out;
}

// Ordered set of SR models feeding the fusion stage: N-1 class-specific plus
// one generic. When frozen, no tape is recorded through the bank.
template <typename T>
struct ModelBank {
  std::vector<SRModel<T>> models;
  bool frozen = true;

  void validate() const {
    if (models.empty()) throw UsageError("ModelBank: bank is empty");
    for (const auto& m : models)
      if (m.config().scale != models.front().config().scale)
        throw UsageError("ModelBank: all models must share the same scale");
  }
};

template <typename T>
std::vector<Tensor<T>> bank_forward(const ModelBank<T>& bank, const Tensor<T>& lr) {
  bank.validate();
  std::vector<Tensor<T>> outs;
  outs.reserve(bank.models.size());
  if (bank.frozen) {
    NoGradGuard guard;
    for (const auto& m : bank.models) outs.push_back(super_resolve(m, lr));
  } else {
    for (const auto& m : bank.models) outs.push_back(super_resolve(m, lr));
  }
  return outs;
}

}  // namespace mmsr

// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Post-SR fusion network. The N super-resolved candidates are concatenated
// on the channel axis, run through a small residual conv stack, and the
// elementwise mean of the inputs is added back as a global skip. The final
// projection starts at zero, so a fresh net reproduces the mean exactly and
// training can only improve on that baseline.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmsr/sr_model.hpp"

namespace mmsr {

struct FusionConfig {
  int n_inputs = 3;
  int n_features = 32;
  int n_res_blocks = 2;
  int in_channels = 3;

  void validate() const {
    if (n_inputs < 1) throw UsageError("FusionConfig: n_inputs must be >= 1");
    if (n_features < 1 || n_res_blocks < 0)
      throw UsageError("FusionConfig: bad feature/block counts");
  }

  bool operator==(const FusionConfig&) const = default;
};

template <typename T>
class FusionNet {
 public:
  FusionNet() = default;

  FusionNet(const FusionConfig& cfg, uint64_t seed) : cfg_(cfg) {
    cfg.validate();
    int layer = 0;
    auto next_rng = [&]() { return Rng(mix_seed(seed, static_cast<uint64_t>(layer++))); };
    Rng r0 = next_rng();
    head_ = Conv2dLayer<T>(cfg.in_channels * cfg.n_inputs, cfg.n_features, 3, r0);
    for (int i = 0; i < cfg.n_res_blocks; ++i) {
      Rng r = next_rng();
      body_.emplace_back(cfg.n_features, T(1), r);
    }
    Rng rt = next_rng();
    final_ = Conv2dLayer<T>(cfg.n_features, cfg.in_channels, 3, rt, /*zero_init=*/true);
  }

  Tensor<T> fuse(const std::vector<Tensor<T>>& sr_outputs) const {
    if (static_cast<int>(sr_outputs.size()) != cfg_.n_inputs)
      throw UsageError("FusionNet: expected " + std::to_string(cfg_.n_inputs) + " inputs, got " +
                       std::to_string(sr_outputs.size()));
    for (const auto& t : sr_outputs)
      if (t.shape() != sr_outputs.front().shape())
        throw ShapeError("FusionNet: input shapes differ");
    Tensor<T> f = relu(head_(concat_channels(sr_outputs)));
    for (const auto& blk : body_) f = blk(f);
    return add(final_(f), mean_stack(sr_outputs));
  }

  std::vector<NamedParam<T>> parameters() {
    std::vector<NamedParam<T>> out;
    head_.collect("head", out);
    for (size_t i = 0; i < body_.size(); ++i) body_[i].collect("body." + std::to_string(i), out);
    final_.collect("final", out);
    return out;
  }

  int64_t parameter_count() {
    int64_t n = 0;
    for (const auto& p : parameters()) n += p.tensor.numel();
    return n;
  }

  const FusionConfig& config() const { return cfg_; }

  Conv2dLayer<T>& head() { return head_; }
  std::vector<ResBlock<T>>& body() { return body_; }
  Conv2dLayer<T>& final_conv() { return final_; }

 private:
  FusionConfig cfg_;
  Conv2dLayer<T> head_;
  std::vector<ResBlock<T>> body_;
  Conv2dLayer<T> final_;
};

template <typename T>
Tensor<T> fuse(const FusionNet<T>& net, const std::vector<Tensor<T>>& sr_outputs) {
  return net.fuse(sr_outputs);
}

}  // namespace mmsr

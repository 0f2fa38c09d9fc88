// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Adam/L1 training loops for SR models and the fusion net. Learning rate
// starts at 1e-4 and is halved every half_life iterations; the desk schedule
// keeps the same shape at 1/40 length.

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "mmsr/data.hpp"
#include "mmsr/fusion.hpp"
#include "mmsr/sr_model.hpp"

namespace mmsr {

struct TrainSchedule {
  double lr0 = 1e-4;
  int64_t half_life = 50000;
  int64_t total_iters = 130000;

  static TrainSchedule desk() { return {1e-4, 1200, 3000}; }
  static TrainSchedule paper() { return {1e-4, 50000, 130000}; }

  void validate() const {
    if (lr0 <= 0.0) throw UsageError("schedule: lr0 must be positive");
    if (half_life < 1) throw UsageError("schedule: half_life must be >= 1");
    if (total_iters < 0) throw UsageError("schedule: total_iters must be >= 0");
  }
};

// lr0 * 0.5^floor(t / half_life). ldexp keeps the halving exact in binary.
inline double lr_at(const TrainSchedule& s, int64_t t) {
  s.validate();
  if (t < 0) throw UsageError("lr_at: negative step");
  return std::ldexp(s.lr0, -static_cast<int>(t / s.half_life));
}

template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t t = 0;
  std::vector<std::vector<double>> m, v;

  void init(const std::vector<NamedParam<T>>& params) {
    t = 0;
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(static_cast<size_t>(p.tensor.numel()), 0.0);
      v.emplace_back(static_cast<size_t>(p.tensor.numel()), 0.0);
    }
  }
};

// Standard Adam with bias correction; moments and update math in double.
// All gradients are checked before anything mutates, so a non-finite
// gradient aborts the step with parameters intact. Grads reset to zero.
template <typename T>
void adam_step(std::vector<NamedParam<T>>& params, AdamState<T>& state, double lr) {
  if (state.m.size() != params.size())
    throw UsageError("adam_step: optimizer state does not match parameter list");
  for (auto& p : params) {
    for (T g : p.tensor.grad())
      if (!std::isfinite(static_cast<double>(g)))
        throw NumericError("adam_step: non-finite gradient in " + p.name);
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    auto data = params[i].tensor.data();
    auto grad = params[i].tensor.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != data.size()) throw UsageError("adam_step: parameter shape changed");
    for (size_t j = 0; j < data.size(); ++j) {
      const double g = static_cast<double>(grad[j]);
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double step = lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + state.eps);
      data[j] = static_cast<T>(static_cast<double>(data[j]) - step);
      grad[j] = T(0);
    }
  }
}

struct LossPoint {
  int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};
using LossCurve = std::vector<LossPoint>;

struct TrainOptions {
  int64_t log_every = 100;
  std::function<void(const LossPoint&)> on_log;
};

inline void write_loss_log(const std::string& path, const LossCurve& curve,
                           const std::vector<std::string>& header_lines = {}) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("write_loss_log: cannot open " + path);
  for (const auto& line : header_lines) os << "# " << line << "\n";
  os << "step\tlr\tloss\n";
  char buf[96];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%lld\t%.9g\t%.9g\n", static_cast<long long>(p.step), p.lr,
                  p.loss);
    os << buf;
  }
}

namespace detail {

inline void maybe_log(LossCurve& curve, const TrainOptions& opts, int64_t step, int64_t total,
                      double lr, double loss) {
  if (step % std::max<int64_t>(1, opts.log_every) == 0 || step == total - 1) {
    curve.push_back({step, lr, loss});
    if (opts.on_log) opts.on_log(curve.back());
  }
}

}  // namespace detail

// Minimizes L1(model(lr_patch), hr_patch) over the dataset's patch stream.
inline LossCurve train_sr(SRModel<float>& model, const ClassDataset& ds, const PatchSpec& spec,
                          const TrainSchedule& schedule, const TrainOptions& opts = {}) {
  schedule.validate();
  spec.validate();
  if (ds.split != Split::train) throw UsageError("train_sr: dataset split must be 'train'");
  if (ds.scale != model.config().scale || spec.scale != model.config().scale)
    throw UsageError("train_sr: dataset/patch scale must match the model scale");
  validate_dataset(ds, spec.hr_patch);

  auto params = model.parameters();
  AdamState<float> state;
  state.init(params);
  LossCurve curve;
  for (int64_t t = 0; t < schedule.total_iters; ++t) {
    MiniBatch batch = sample_minibatch(ds, spec, t);
    Tensor<float> out = model.forward(batch.lr);
    Tensor<float> loss = l1_loss(out, batch.hr);
    const double lr = lr_at(schedule, t);
    detail::maybe_log(curve, opts, t, schedule.total_iters, lr, loss.data()[0]);
    backward(loss);
    adam_step(params, state, lr);
  }
  return curve;
}

// Trains the fusion on top of a frozen bank: the bank runs without a tape
// and its parameters are never touched by the optimizer.
inline LossCurve train_fusion(FusionNet<float>& net, const ModelBank<float>& bank,
                              const PairStream& stream, const PatchSpec& spec,
                              const TrainSchedule& schedule, const TrainOptions& opts = {}) {
  schedule.validate();
  spec.validate();
  if (!bank.frozen) throw UsageError("train_fusion: bank must be frozen");
  bank.validate();
  if (static_cast<int>(bank.models.size()) != net.config().n_inputs)
    throw UsageError("train_fusion: bank size does not match fusion n_inputs");
  if (bank.models.front().config().scale != spec.scale)
    throw UsageError("train_fusion: patch scale must match the bank scale");
  for (const auto* ds : stream.sets) {
    if (ds->split != Split::train) throw UsageError("train_fusion: stream split must be 'train'");
    validate_dataset(*ds, spec.hr_patch);
  }

  auto params = net.parameters();
  AdamState<float> state;
  state.init(params);
  LossCurve curve;
  for (int64_t t = 0; t < schedule.total_iters; ++t) {
    MiniBatch batch = sample_minibatch(stream, spec, t);
    std::vector<Tensor<float>> sr = bank_forward(bank, batch.lr);
    Tensor<float> fused = net.fuse(sr);
    Tensor<float> loss = l1_loss(fused, batch.hr);
    const double lr = lr_at(schedule, t);
    detail::maybe_log(curve, opts, t, schedule.total_iters, lr, loss.data()[0]);
    backward(loss);
    adam_step(params, state, lr);
  }
  return curve;
}

}  // namespace mmsr

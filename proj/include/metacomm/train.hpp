// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "metacomm/autodiff.hpp"
#include "metacomm/channel.hpp"
#include "metacomm/model.hpp"
#include "metacomm/rng.hpp"

namespace metacomm {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// P sampled (message, noise) pairs. `noise` holds P rows of 2*rx_len reals.
struct Batch {
  std::vector<int> messages;
  std::vector<double> noise;
  std::size_t size() const { return messages.size(); }
};

/// Uniform i.i.d. messages, or in exhaustive mode every message P/2^k times
/// in index order. Noise is always freshly drawn.
Batch sample_batch(const ModelSpec& spec, std::size_t batch_size, const NoiseSpec& noise, Stream& rng,
                   bool exhaustive);

/// Empirical cross-entropy of the end-to-end system on one channel:
/// encoder -> h * x + w -> receiver -> softmax cross-entropy, with the batch
/// noise entering as fixed data.
struct AutoencoderLoss {
  const ModelSpec& spec;
  const ParamLayout& layout;
  const ChannelRealization& channel;
  const Batch& batch;

  template <class T>
  ad::Var operator()(ad::Tape<T>& tape, ad::Var theta) const {
    const ad::Var x = graph::encoder(tape, theta, spec, layout, batch.messages);
    tape.set_scope("channel");
    const ad::Var h = tape.constant(channel.taps.reals(), 1, channel.taps.reals().size());
    const ad::Var w = tape.constant(batch.noise, batch.size(), 2 * spec.rx_len());
    const ad::Var y = tape.add(tape.complex_conv(h, x), w);
    const ad::Var logits = graph::receiver(tape, theta, spec, layout, y);
    tape.set_scope("loss");
    return tape.softmax_cross_entropy(logits, batch.messages);
  }
};

double empirical_loss(const ParamVector& params, const ModelSpec& spec, const ChannelRealization& h,
                      const Batch& batch);
ad::LossGrad loss_and_gradient(const ParamVector& params, const ModelSpec& spec, const ChannelRealization& h,
                               const Batch& batch);

enum class OptimizerKind { kSgd, kAdam };

struct OptState {
  OptimizerKind kind = OptimizerKind::kSgd;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;

  static OptState sgd(double lr);
  static OptState adam(double lr, std::size_t dim);
};

/// Bias-corrected Adam: theta -= lr * mhat / (sqrt(vhat) + eps).
void adam_step(OptState& state, std::span<double> params, std::span<const double> grad);
/// Dispatches on state.kind.
void apply_step(OptState& state, std::span<double> params, std::span<const double> grad);

/// One segment of a learning-rate schedule. steps == 0 means "until the end".
struct SchedulePhase {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 0.001;
  std::size_t steps = 0;
};

/// Parses "sgd:0.1:1,adam:0.001" (kind:lr[:steps], comma separated).
std::vector<SchedulePhase> parse_schedule(const std::string& text);
std::string format_schedule(const std::vector<SchedulePhase>& schedule);

struct TrainConfig {
  std::size_t batch_size = 4;
  std::size_t iterations = 0;
  std::vector<SchedulePhase> schedule{{OptimizerKind::kAdam, 0.001, 0}};
  bool exhaustive = false;
};

/// Called with (iteration index, parameters after that many updates).
using TrajectoryObserver = std::function<void(std::size_t, const ParamVector&)>;

/// Algorithm 1 on one channel. Update i draws its batch from
/// rng.split(i).split(0). Returns [theta_0, ..., theta_iterations].
std::vector<ParamVector> local_train(const ParamVector& init, const ModelSpec& spec, const ChannelRealization& h,
                                     const TrainConfig& cfg, const NoiseSpec& noise, const Stream& rng);

/// Streaming variant; the observer sees every iterate including theta_0.
void local_train(const ParamVector& init, const ModelSpec& spec, const ChannelRealization& h,
                 const TrainConfig& cfg, const NoiseSpec& noise, const Stream& rng,
                 const TrajectoryObserver& observe);

/// Gradient descent on the summed loss over `channels`. Channel c at
/// iteration i draws its batch from rng.split(i).split(c).
ParamVector joint_train(const ParamVector& init, const ModelSpec& spec, std::span<const ChannelRealization> channels,
                        const TrainConfig& cfg, const NoiseSpec& noise, const Stream& rng, std::size_t threads = 1);

/// Summed empirical loss over channels with one batch per channel.
ad::LossGrad joint_loss_and_gradient(const ParamVector& params, const ModelSpec& spec,
                                     std::span<const ChannelRealization> channels, std::span<const Batch> batches);

}  // namespace metacomm

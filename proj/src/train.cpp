// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "metacomm/train.hpp"

#include <cmath>
#include <sstream>

#include "metacomm/parallel.hpp"

namespace metacomm {

Batch sample_batch(const ModelSpec& spec, std::size_t batch_size, const NoiseSpec& noise, Stream& rng,
                   bool exhaustive) {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  const std::size_t m = spec.messages();
  if (exhaustive && batch_size % m != 0) {
    throw ConfigError("exhaustive batches need a batch size that is a multiple of 2^k = " + std::to_string(m));
  }
  Batch b;
  b.messages.resize(batch_size);
  for (std::size_t j = 0; j < batch_size; ++j) {
    b.messages[j] = static_cast<int>(exhaustive ? j % m : rng.index(m));
  }
  b.noise.resize(batch_size * 2 * spec.rx_len());
  draw_noise(b.noise, noise, rng);
  return b;
}

double empirical_loss(const ParamVector& params, const ModelSpec& spec, const ChannelRealization& h,
                      const Batch& batch) {
  return ad::evaluate(AutoencoderLoss{spec, params.layout(), h, batch}, params.values());
}

ad::LossGrad loss_and_gradient(const ParamVector& params, const ModelSpec& spec, const ChannelRealization& h,
                               const Batch& batch) {
  return ad::gradient(AutoencoderLoss{spec, params.layout(), h, batch}, params.values());
}

ad::LossGrad joint_loss_and_gradient(const ParamVector& params, const ModelSpec& spec,
                                     std::span<const ChannelRealization> channels, std::span<const Batch> batches) {
  if (channels.size() != batches.size() || channels.empty()) {
    throw std::invalid_argument("joint loss: need one batch per channel");
  }
  auto build = [&](auto& tape, ad::Var theta) {
    ad::Var total = AutoencoderLoss{spec, params.layout(), channels[0], batches[0]}(tape, theta);
    for (std::size_t c = 1; c < channels.size(); ++c) {
      total = tape.add(total, AutoencoderLoss{spec, params.layout(), channels[c], batches[c]}(tape, theta));
    }
    return total;
  };
  return ad::gradient(build, params.values());
}

OptState OptState::sgd(double lr) {
  OptState s;
  s.kind = OptimizerKind::kSgd;
  s.lr = lr;
  return s;
}

OptState OptState::adam(double lr, std::size_t dim) {
  OptState s;
  s.kind = OptimizerKind::kAdam;
  s.lr = lr;
  s.m.assign(dim, 0.0);
  s.v.assign(dim, 0.0);
  return s;
}

void adam_step(OptState& s, std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size() || s.m.size() != params.size() || s.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: dimension mismatch");
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * grad[i];
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * grad[i] * grad[i];
    const double mhat = s.m[i] / c1;
    const double vhat = s.v[i] / c2;
    params[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

void apply_step(OptState& s, std::span<double> params, std::span<const double> grad) {
  if (s.kind == OptimizerKind::kAdam) {
    adam_step(s, params, grad);
    return;
  }
  if (params.size() != grad.size()) throw std::invalid_argument("sgd step: dimension mismatch");
  ++s.step;
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= s.lr * grad[i];
}

std::vector<SchedulePhase> parse_schedule(const std::string& text) {
  std::vector<SchedulePhase> out;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ',')) {
    std::stringstream parts(item);
    std::string kind, lr, steps;
    std::getline(parts, kind, ':');
    std::getline(parts, lr, ':');
    std::getline(parts, steps, ':');
    if (std::string rest; std::getline(parts, rest)) {
      throw ConfigError("schedule: malformed entry '" + item + "' (expected kind:lr[:steps])");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kind = trim(kind);
    SchedulePhase p;
    if (kind == "sgd") {
      p.kind = OptimizerKind::kSgd;
    } else if (kind == "adam") {
      p.kind = OptimizerKind::kAdam;
    } else {
      throw ConfigError("schedule: unknown optimizer '" + kind + "' (expected sgd or adam)");
    }
    try {
      std::size_t used = 0;
      const std::string lr_text = trim(lr), steps_text = trim(steps);
      p.lr = std::stod(lr_text, &used);
      if (used != lr_text.size()) throw std::invalid_argument(lr_text);
      if (!steps_text.empty()) {
        if (steps_text.front() == '-') throw std::invalid_argument(steps_text);
        p.steps = std::stoul(steps_text, &used);
        if (used != steps_text.size()) throw std::invalid_argument(steps_text);
      }
    } catch (const std::exception&) {
      throw ConfigError("schedule: malformed entry '" + item + "' (expected kind:lr[:steps])");
    }
    if (!(p.lr > 0.0)) throw ConfigError("schedule: learning rate must be positive in '" + item + "'");
    out.push_back(p);
  }
  if (out.empty()) throw ConfigError("schedule: empty");
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    if (out[i].steps == 0) throw ConfigError("schedule: only the last phase may be open-ended");
  }
  return out;
}

std::string format_schedule(const std::vector<SchedulePhase>& schedule) {
  std::ostringstream os;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (i) os << ',';
    os << (schedule[i].kind == OptimizerKind::kSgd ? "sgd" : "adam") << ':' << schedule[i].lr;
    if (schedule[i].steps) os << ':' << schedule[i].steps;
  }
  return os.str();
}

namespace {

/// Tracks which schedule phase applies at each update and resets optimizer
/// state at phase boundaries.
class ScheduledOptimizer {
 public:
  ScheduledOptimizer(const std::vector<SchedulePhase>& schedule, std::size_t dim)
      : schedule_(schedule), dim_(dim) {
    if (schedule_.empty()) throw ConfigError("training schedule is empty");
    start_phase(0);
  }

  void step(std::span<double> params, std::span<const double> grad) {
    const auto& ph = schedule_[phase_];
    if (ph.steps != 0 && taken_ == ph.steps && phase_ + 1 < schedule_.size()) start_phase(phase_ + 1);
    apply_step(state_, params, grad);
    ++taken_;
  }

 private:
  void start_phase(std::size_t i) {
    phase_ = i;
    taken_ = 0;
    const auto& ph = schedule_[i];
    state_ = ph.kind == OptimizerKind::kAdam ? OptState::adam(ph.lr, dim_) : OptState::sgd(ph.lr);
  }

  const std::vector<SchedulePhase>& schedule_;
  std::size_t dim_;
  std::size_t phase_ = 0;
  std::size_t taken_ = 0;
  OptState state_;
};

void check_loss(double loss, std::size_t iteration) {
  if (!std::isfinite(loss)) {
    throw TrainingError("non-finite training loss at iteration " + std::to_string(iteration));
  }
}

}  // namespace

void local_train(const ParamVector& init, const ModelSpec& spec, const ChannelRealization& h,
                 const TrainConfig& cfg, const NoiseSpec& noise, const Stream& rng,
                 const TrajectoryObserver& observe) {
  ParamVector theta = init;
  observe(0, theta);
  if (cfg.iterations == 0) return;
  ScheduledOptimizer opt(cfg.schedule, theta.size());
  for (std::size_t i = 0; i < cfg.iterations; ++i) {
    Stream batch_rng = rng.split(i).split(std::uint64_t{0});
    const Batch batch = sample_batch(spec, cfg.batch_size, noise, batch_rng, cfg.exhaustive);
    ad::LossGrad lg;
    try {
      lg = loss_and_gradient(theta, spec, h, batch);
    } catch (const ad::NumericError& e) {
      throw TrainingError("iteration " + std::to_string(i) + ": " + e.what());
    }
    check_loss(lg.loss, i);
    opt.step(theta.values(), lg.grad);
    observe(i + 1, theta);
  }
}

std::vector<ParamVector> local_train(const ParamVector& init, const ModelSpec& spec, const ChannelRealization& h,
                                     const TrainConfig& cfg, const NoiseSpec& noise, const Stream& rng) {
  std::vector<ParamVector> trajectory;
  trajectory.reserve(cfg.iterations + 1);
  local_train(init, spec, h, cfg, noise, rng, [&](std::size_t, const ParamVector& p) { trajectory.push_back(p); });
  return trajectory;
}

ParamVector joint_train(const ParamVector& init, const ModelSpec& spec, std::span<const ChannelRealization> channels,
                        const TrainConfig& cfg, const NoiseSpec& noise, const Stream& rng, std::size_t threads) {
  if (channels.empty()) throw ConfigError("joint training needs at least one channel");
  ParamVector theta = init;
  if (cfg.iterations == 0) return theta;
  ScheduledOptimizer opt(cfg.schedule, theta.size());
  std::vector<ad::LossGrad> per_channel(channels.size());
  std::vector<double> total(theta.size());
  for (std::size_t i = 0; i < cfg.iterations; ++i) {
    const Stream iter_rng = rng.split(i);
    parallel_for(channels.size(), threads, [&](std::size_t c) {
      Stream batch_rng = iter_rng.split(static_cast<std::uint64_t>(c));
      const Batch batch = sample_batch(spec, cfg.batch_size, noise, batch_rng, cfg.exhaustive);
      try {
        per_channel[c] = loss_and_gradient(theta, spec, channels[c], batch);
      } catch (const ad::NumericError& e) {
        throw TrainingError("iteration " + std::to_string(i) + ", channel " + std::to_string(c) + ": " + e.what());
      }
    });
    std::fill(total.begin(), total.end(), 0.0);
    for (std::size_t c = 0; c < channels.size(); ++c) {
      check_loss(per_channel[c].loss, i);
      for (std::size_t j = 0; j < total.size(); ++j) total[j] += per_channel[c].grad[j];
    }
    opt.step(theta.values(), total);
  }
  return theta;
}

}  // namespace metacomm

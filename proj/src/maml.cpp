// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "metacomm/maml.hpp"

#include <cmath>
#include <numeric>

#include "metacomm/parallel.hpp"

namespace metacomm {

std::vector<double> inner_update(const ParamVector& params, const ModelSpec& spec, const ChannelRealization& h,
                                 double inner_lr, const Batch& inner) {
  const auto lg = loss_and_gradient(params, spec, h, inner);
  std::vector<double> u = params.values();
  for (std::size_t i = 0; i < u.size(); ++i) u[i] -= inner_lr * lg.grad[i];
  return u;
}

MetaGradient meta_gradient(const ParamVector& params, const ModelSpec& spec, const ChannelRealization& h,
                           double inner_lr, const Batch& inner, const Batch& outer, MetaOrder order) {
  return meta_gradient(AutoencoderLoss{spec, params.layout(), h, inner}, AutoencoderLoss{spec, params.layout(), h, outer},
                       params.values(), inner_lr, order);
}

MetaResult meta_train(const ParamVector& init, const ModelSpec& spec, std::span<const ChannelRealization> channels,
                      const MetaConfig& cfg, const NoiseSpec& noise, const Stream& rng, std::size_t threads) {
  if (channels.empty()) throw ConfigError("meta-training needs at least one channel");
  if (!(cfg.inner_lr >= 0.0) || !(cfg.outer_lr > 0.0)) throw ConfigError("meta learning rates must be positive");
  MetaResult result{init, {}};
  ParamVector& theta = result.init;
  OptState opt = cfg.outer == OptimizerKind::kAdam ? OptState::adam(cfg.outer_lr, theta.size())
                                                   : OptState::sgd(cfg.outer_lr);
  const std::size_t k = channels.size();
  const std::size_t per_iter =
      cfg.channels_per_iteration == 0 ? k : std::min(cfg.channels_per_iteration, k);
  std::vector<std::size_t> order(k);
  std::vector<MetaGradient> parts(per_iter);
  std::vector<double> total(theta.size());
  result.meta_loss.reserve(cfg.iterations);

  for (std::size_t i = 0; i < cfg.iterations; ++i) {
    const Stream iter_rng = rng.split(i);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (per_iter < k) {
      Stream pick = iter_rng.split("subset");
      for (std::size_t j = 0; j < per_iter; ++j) std::swap(order[j], order[j + pick.index(k - j)]);
    }
    parallel_for(per_iter, threads, [&](std::size_t j) {
      const std::size_t c = order[j];
      Stream outer_rng = iter_rng.split(static_cast<std::uint64_t>(c));
      Stream inner_rng = outer_rng.split("inner");
      const Batch inner = sample_batch(spec, cfg.batch_size, noise, inner_rng, cfg.exhaustive);
      const Batch outer = sample_batch(spec, cfg.batch_size, noise, outer_rng, cfg.exhaustive);
      try {
        parts[j] = meta_gradient(theta, spec, channels[c], cfg.inner_lr, inner, outer, cfg.order);
      } catch (const ad::NumericError& e) {
        throw TrainingError("meta-iteration " + std::to_string(i) + ", channel " + std::to_string(c) + ": " +
                            e.what());
      }
    });
    std::fill(total.begin(), total.end(), 0.0);
    double meta_loss = 0.0;
    for (std::size_t j = 0; j < per_iter; ++j) {
      if (!std::isfinite(parts[j].outer_loss)) {
        throw TrainingError("non-finite meta-loss at meta-iteration " + std::to_string(i) + " on channel " +
                            std::to_string(order[j]));
      }
      meta_loss += parts[j].outer_loss;
      for (std::size_t p = 0; p < total.size(); ++p) total[p] += parts[j].grad[p];
    }
    result.meta_loss.push_back(meta_loss);
    apply_step(opt, theta.values(), total);
  }
  return result;
}

}  // namespace metacomm

// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "metacomm/channel.hpp"
#include "metacomm/model.hpp"
#include "metacomm/rng.hpp"
#include "metacomm/train.hpp"

namespace metacomm {

enum class MetaOrder { kSecond, kFirst };

struct MetaConfig {
  std::size_t iterations = 1000;
  /// Step size of the single inner SGD update.
  double inner_lr = 0.1;
  OptimizerKind outer = OptimizerKind::kAdam;
  double outer_lr = 0.01;
  std::size_t batch_size = 4;
  bool exhaustive = false;
  MetaOrder order = MetaOrder::kSecond;
  /// Channels drawn (without replacement) per meta-iteration; 0 uses all.
  std::size_t channels_per_iteration = 0;
};

/// U_h(theta) = theta - eta * grad L_h(theta) on the inner batch.
std::vector<double> inner_update(const ParamVector& params, const ModelSpec& spec, const ChannelRealization& h,
                                 double inner_lr, const Batch& inner);

struct MetaGradient {
  std::vector<double> grad;
  /// L'_h(U_h(theta)) on the outer batch.
  double outer_loss = 0.0;
};

/// Meta-gradient of theta -> outer(theta - eta * grad inner(theta)) for any
/// pair of loss builders.
template <ad::LossBuilder Inner, ad::LossBuilder Outer>
MetaGradient meta_gradient(const Inner& inner, const Outer& outer, std::span<const double> theta, double eta,
                           MetaOrder order) {
  std::vector<double> u(theta.begin(), theta.end());
  const auto g = ad::gradient(inner, theta).grad;
  for (std::size_t i = 0; i < u.size(); ++i) u[i] -= eta * g[i];
  auto out = ad::gradient(outer, u);
  MetaGradient mg{std::move(out.grad), out.loss};
  if (order == MetaOrder::kFirst) return mg;
  const auto hv = ad::hvp(inner, theta, mg.grad);
  for (std::size_t i = 0; i < mg.grad.size(); ++i) mg.grad[i] -= eta * hv.hv[i];
  return mg;
}

/// (I - eta * Hessian L_h(theta; inner)) * grad L'_h(U_h(theta); outer).
/// The Hessian term is an exact Hessian-vector product; first-order mode
/// drops it and returns the outer gradient alone.
MetaGradient meta_gradient(const ParamVector& params, const ModelSpec& spec, const ChannelRealization& h,
                           double inner_lr, const Batch& inner, const Batch& outer, MetaOrder order);

struct MetaResult {
  ParamVector init;
  /// Sum over the iteration's channels of the post-update outer losses,
  /// logged before each meta-update.
  std::vector<double> meta_loss;
};

/// Meta-trains the initialization over `channels`. At meta-iteration i the
/// outer batch of channel c comes from rng.split(i).split(c) and the inner
/// batch from that stream's "inner" child.
MetaResult meta_train(const ParamVector& init, const ModelSpec& spec, std::span<const ChannelRealization> channels,
                      const MetaConfig& cfg, const NoiseSpec& noise, const Stream& rng, std::size_t threads = 1);

}  // namespace metacomm

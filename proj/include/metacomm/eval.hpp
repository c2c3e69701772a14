// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "metacomm/channel.hpp"
#include "metacomm/model.hpp"
#include "metacomm/rng.hpp"
#include "metacomm/train.hpp"

namespace metacomm {

/// Messages per evaluation block; block b of a measurement draws from rng.split(b).
inline constexpr std::size_t kEvalBlock = 4096;

/// Fraction of uniformly drawn messages whose MAP decision is wrong.
double measure_bler(const ParamVector& params, const ModelSpec& spec, const ChannelRealization& h,
                    const NoiseSpec& noise, std::size_t num_messages, const Stream& rng);

struct BlerCurve {
  std::vector<std::size_t> iterations;
  std::vector<double> mean;
  /// per_channel[point][channel]
  std::vector<std::vector<double>> per_channel;
  std::size_t messages_per_channel = 0;
  std::string init_label;
  std::string architecture;
  std::string stream_label;
};

/// 0..10 then 20, 50, 100, 200, 500, ... up to and including `budget`.
std::vector<std::size_t> log_schedule(std::size_t budget);

/// Adapts `init` on `num_new_channels` freshly drawn channels and records
/// the BLER at each logged iteration. Channel c is drawn from
/// rng.split("channels").split(c), trained with rng.split("adapt").split(c)
/// and evaluated with rng.split("eval").split(c).split(iteration).
BlerCurve adaptation_curve(const ParamVector& init, const ModelSpec& spec, const ChannelClass& channel_class,
                           const TrainConfig& adapt, std::size_t num_new_channels,
                           std::size_t messages_per_channel, const NoiseSpec& noise, const Stream& rng,
                           std::size_t threads = 1);

/// `iter,mean_bler,channel_0,...` with one header line.
void write_curve_csv(const BlerCurve& curve, std::ostream& os);
nlohmann::json curve_sidecar(const BlerCurve& curve, const nlohmann::json& config);

struct GridBounds {
  double re_min = -2.0;
  double re_max = 2.0;
  double im_min = -2.0;
  double im_max = 2.0;
};

/// Receiver decisions over a square grid of received values (n = 1 only)
/// plus the encoder constellation.
struct DecisionGrid {
  GridBounds bounds;
  std::size_t resolution = 0;
  /// labels[i * resolution + j] is the decision at (re_j, im_i).
  std::vector<int> labels;
  std::vector<ComplexVec> constellation;

  double re(std::size_t j) const;
  double im(std::size_t i) const;
  bool operator==(const DecisionGrid& o) const { return labels == o.labels && constellation == o.constellation; }
};

DecisionGrid export_decision_grid(const ParamVector& params, const ModelSpec& spec, const GridBounds& bounds,
                                  std::size_t resolution);

/// `re,im,label` rows, then a line `constellation` and `m,re,im` rows.
void write_grid_csv(const DecisionGrid& grid, std::ostream& os);

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Build version (git describe of the source tree at configure time).
const char* version_string();

}  // namespace metacomm

// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "metacomm/eval.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

#include "metacomm/parallel.hpp"

namespace metacomm {

double measure_bler(const ParamVector& params, const ModelSpec& spec, const ChannelRealization& h,
                    const NoiseSpec& noise, std::size_t num_messages, const Stream& rng) {
  if (num_messages == 0) throw std::invalid_argument("measure_bler: need at least one message");
  const std::size_t m = spec.messages();
  const std::size_t width = 2 * spec.rx_len();
  std::vector<std::vector<double>> clean;
  for (const auto& x : constellation(params, spec)) clean.push_back(convolve(h, x).reals());

  std::size_t errors = 0;
  std::vector<int> sent;
  std::vector<double> received;
  for (std::size_t b = 0, done = 0; done < num_messages; ++b) {
    const std::size_t count = std::min(kEvalBlock, num_messages - done);
    Stream block = rng.split(static_cast<std::uint64_t>(b));
    sent.resize(count);
    for (auto& s : sent) s = static_cast<int>(block.index(m));
    received.resize(count * width);
    draw_noise(received, noise, block);
    for (std::size_t r = 0; r < count; ++r) {
      const auto& c = clean[static_cast<std::size_t>(sent[r])];
      for (std::size_t i = 0; i < width; ++i) received[r * width + i] += c[i];
    }
    const auto probs = decode_batch(params, spec, received, count);
    for (std::size_t r = 0; r < count; ++r) {
      if (map_decision(std::span<const double>(probs).subspan(r * m, m)) != sent[r]) ++errors;
    }
    done += count;
  }
  return static_cast<double>(errors) / static_cast<double>(num_messages);
}

std::vector<std::size_t> log_schedule(std::size_t budget) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i <= std::min<std::size_t>(budget, 10); ++i) out.push_back(i);
  for (std::size_t decade = 10; decade <= budget; decade *= 10) {
    for (std::size_t f : {2, 5, 10}) {
      const std::size_t v = decade * f;
      if (v <= budget) out.push_back(v);
    }
  }
  if (out.back() != budget) out.push_back(budget);
  return out;
}

BlerCurve adaptation_curve(const ParamVector& init, const ModelSpec& spec, const ChannelClass& channel_class,
                           const TrainConfig& adapt, std::size_t num_new_channels,
                           std::size_t messages_per_channel, const NoiseSpec& noise, const Stream& rng,
                           std::size_t threads) {
  BlerCurve curve;
  curve.iterations = log_schedule(adapt.iterations);
  curve.messages_per_channel = messages_per_channel;
  curve.architecture = spec.rtn ? "rtn" : "vanilla";
  curve.stream_label = rng.label();
  const std::size_t points = curve.iterations.size();
  curve.per_channel.assign(points, std::vector<double>(num_new_channels, 0.0));

  const Stream channel_rng = rng.split("channels");
  const Stream adapt_rng = rng.split("adapt");
  const Stream eval_rng = rng.split("eval");
  parallel_for(num_new_channels, threads, [&](std::size_t c) {
    Stream draw = channel_rng.split(static_cast<std::uint64_t>(c));
    const ChannelRealization h = sample_channel(channel_class, draw);
    const Stream ch_eval = eval_rng.split(static_cast<std::uint64_t>(c));
    std::size_t next = 0;
    local_train(init, spec, h, adapt, noise, adapt_rng.split(static_cast<std::uint64_t>(c)),
                [&](std::size_t iter, const ParamVector& p) {
                  if (next < points && curve.iterations[next] == iter) {
                    curve.per_channel[next][c] =
                        measure_bler(p, spec, h, noise, messages_per_channel, ch_eval.split(iter));
                    ++next;
                  }
                });
  });
  curve.mean.resize(points);
  for (std::size_t p = 0; p < points; ++p) {
    double sum = 0.0;
    for (double v : curve.per_channel[p]) sum += v;
    curve.mean[p] = num_new_channels ? sum / static_cast<double>(num_new_channels) : 0.0;
  }
  return curve;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_curve_csv(const BlerCurve& curve, std::ostream& os) {
  const std::size_t channels = curve.per_channel.empty() ? 0 : curve.per_channel.front().size();
  os << "iter,mean_bler";
  for (std::size_t c = 0; c < channels; ++c) os << ",channel_" << c;
  os << '\n';
  for (std::size_t p = 0; p < curve.iterations.size(); ++p) {
    os << curve.iterations[p] << ',' << format_double(curve.mean[p]);
    for (double v : curve.per_channel[p]) os << ',' << format_double(v);
    os << '\n';
  }
}

nlohmann::json curve_sidecar(const BlerCurve& curve, const nlohmann::json& config) {
  return {{"init", curve.init_label},
          {"architecture", curve.architecture},
          {"stream", curve.stream_label},
          {"messages_per_channel", curve.messages_per_channel},
          {"new_channels", curve.per_channel.empty() ? 0 : curve.per_channel.front().size()},
          {"iterations", curve.iterations},
          {"version", version_string()},
          {"config", config}};
}

double DecisionGrid::re(std::size_t j) const {
  return resolution < 2 ? bounds.re_min
                        : bounds.re_min + (bounds.re_max - bounds.re_min) * static_cast<double>(j) /
                                              static_cast<double>(resolution - 1);
}

double DecisionGrid::im(std::size_t i) const {
  return resolution < 2 ? bounds.im_min
                        : bounds.im_min + (bounds.im_max - bounds.im_min) * static_cast<double>(i) /
                                              static_cast<double>(resolution - 1);
}

DecisionGrid export_decision_grid(const ParamVector& params, const ModelSpec& spec, const GridBounds& bounds,
                                  std::size_t resolution) {
  if (spec.n != 1 || spec.rx_len() != 1) {
    throw std::invalid_argument("decision grids need a single complex received sample (n = 1, one channel tap)");
  }
  if (resolution == 0) throw std::invalid_argument("decision grid resolution must be >= 1");
  DecisionGrid grid;
  grid.bounds = bounds;
  grid.resolution = resolution;
  std::vector<double> points;
  points.reserve(2 * resolution * resolution);
  for (std::size_t i = 0; i < resolution; ++i) {
    for (std::size_t j = 0; j < resolution; ++j) {
      points.push_back(grid.re(j));
      points.push_back(grid.im(i));
    }
  }
  const std::size_t m = spec.messages();
  const auto probs = decode_batch(params, spec, points, resolution * resolution);
  grid.labels.resize(resolution * resolution);
  for (std::size_t r = 0; r < grid.labels.size(); ++r) {
    grid.labels[r] = map_decision(std::span<const double>(probs).subspan(r * m, m));
  }
  grid.constellation = constellation(params, spec);
  return grid;
}

void write_grid_csv(const DecisionGrid& grid, std::ostream& os) {
  os << "re,im,label\n";
  for (std::size_t i = 0; i < grid.resolution; ++i) {
    for (std::size_t j = 0; j < grid.resolution; ++j) {
      os << format_double(grid.re(j)) << ',' << format_double(grid.im(i)) << ','
         << grid.labels[i * grid.resolution + j] << '\n';
    }
  }
  os << "constellation\nm,re,im\n";
  for (std::size_t m = 0; m < grid.constellation.size(); ++m) {
    const auto x = grid.constellation[m][0];
    os << m << ',' << format_double(x.real()) << ',' << format_double(x.imag()) << '\n';
  }
}

}  // namespace metacomm

// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "metacomm/channel.hpp"

#include <cmath>
#include <span>

namespace metacomm {

ComplexVec::ComplexVec(std::vector<double> interleaved) : data_(std::move(interleaved)) {
  if (data_.size() % 2 != 0) throw std::invalid_argument("ComplexVec: odd number of reals");
}

ComplexVec::ComplexVec(std::initializer_list<std::complex<double>> values) {
  data_.reserve(2 * values.size());
  for (const auto& v : values) {
    data_.push_back(v.real());
    data_.push_back(v.imag());
  }
}

double ComplexVec::energy() const {
  double e = 0.0;
  for (double v : data_) e += v * v;
  return e;
}

std::size_t channel_length(const ChannelClass& cls) {
  if (const auto* r = std::get_if<RayleighBlock>(&cls)) return r->taps;
  return 1;
}

NoiseSpec snr_to_n0(const SnrConfig& cfg) {
  if (!(cfg.es > 0.0)) throw ConfigError("noise: Es must be positive");
  double esn0_db = cfg.snr_db;
  if (cfg.mode == SnrMode::kEbN0) {
    if (!(cfg.bits_per_symbol > 0.0)) throw ConfigError("noise: bits per symbol must be positive");
    esn0_db = cfg.snr_db + 10.0 * std::log10(cfg.bits_per_symbol);
  }
  NoiseSpec spec;
  spec.es = cfg.es;
  spec.esn0_db = esn0_db;
  spec.n0 = cfg.mode == SnrMode::kEbN0 ? cfg.es / (cfg.bits_per_symbol * std::pow(10.0, cfg.snr_db / 10.0))
                                       : cfg.es / std::pow(10.0, cfg.snr_db / 10.0);
  return spec;
}

ChannelRealization sample_channel(const ChannelClass& cls, Stream& rng) {
  ChannelRealization h;
  if (const auto* two = std::get_if<TwoPhase>(&cls)) {
    if (two->phases.empty()) throw ConfigError("channel: phase set is empty");
    const double phase = two->phases[rng.index(two->phases.size())];
    h.taps = ComplexVec{std::polar(two->amplitude, phase)};
    return h;
  }
  const auto& ray = std::get<RayleighBlock>(cls);
  if (ray.taps == 0) throw ConfigError("channel: Rayleigh tap count must be >= 1");
  h.taps = ComplexVec(ray.taps);
  const double sigma = std::sqrt(0.5 / static_cast<double>(ray.taps));
  for (double& v : h.taps.reals()) v = sigma * rng.normal();
  return h;
}

ComplexVec convolve(const ChannelRealization& h, const ComplexVec& x) {
  if (x.size() == 0 || h.length() == 0) throw std::invalid_argument("convolve: empty operand");
  ComplexVec y(x.size() + h.length() - 1);
  for (std::size_t i = 0; i < h.length(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) y.set(i + j, y[i + j] + h.taps[i] * x[j]);
  }
  return y;
}

void draw_noise(std::span<double> out, const NoiseSpec& noise, Stream& rng) {
  const double sigma = std::sqrt(noise.n0 / 2.0);
  for (double& v : out) v = sigma * rng.normal();
}

ComplexVec add_noise(const ComplexVec& y, const NoiseSpec& noise, Stream& rng) {
  ComplexVec out = y;
  std::vector<double> w(y.reals().size());
  draw_noise(w, noise, rng);
  for (std::size_t i = 0; i < w.size(); ++i) out.reals()[i] += w[i];
  return out;
}

}  // namespace metacomm

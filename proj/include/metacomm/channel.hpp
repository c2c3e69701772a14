// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "metacomm/rng.hpp"

namespace metacomm {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Complex sequence stored as interleaved (re, im) reals.
class ComplexVec {
 public:
  ComplexVec() = default;
  explicit ComplexVec(std::size_t n) : data_(2 * n, 0.0) {}
  explicit ComplexVec(std::vector<double> interleaved);
  ComplexVec(std::initializer_list<std::complex<double>> values);

  std::size_t size() const { return data_.size() / 2; }
  std::complex<double> operator[](std::size_t i) const { return {data_[2 * i], data_[2 * i + 1]}; }
  void set(std::size_t i, std::complex<double> v) {
    data_[2 * i] = v.real();
    data_[2 * i + 1] = v.imag();
  }
  const std::vector<double>& reals() const { return data_; }
  std::vector<double>& reals() { return data_; }
  double energy() const;

  bool operator==(const ComplexVec&) const = default;

 private:
  std::vector<double> data_;
};

struct ChannelRealization {
  ComplexVec taps;
  std::size_t length() const { return taps.size(); }
};

/// Unit-amplitude single tap with a phase drawn uniformly from a finite set.
struct TwoPhase {
  std::vector<double> phases{std::numbers::pi / 4.0, 3.0 * std::numbers::pi / 4.0};
  double amplitude = 1.0;
};

/// Block fading with `taps` i.i.d. CN(0, 1/taps) coefficients.
struct RayleighBlock {
  std::size_t taps = 3;
};

using ChannelClass = std::variant<TwoPhase, RayleighBlock>;

std::size_t channel_length(const ChannelClass& cls);

enum class SnrMode { kEsN0, kEbN0 };

struct SnrConfig {
  SnrMode mode = SnrMode::kEsN0;
  double snr_db = 15.0;
  double es = 1.0;
  /// Information bits per complex symbol (k/n); only used for Eb/N0.
  double bits_per_symbol = 1.0;
};

struct NoiseSpec {
  double es = 1.0;
  double n0 = 1.0;
  double esn0_db = 0.0;
};

NoiseSpec snr_to_n0(const SnrConfig& cfg);

ChannelRealization sample_channel(const ChannelClass& cls, Stream& rng);

/// Full linear convolution; output length is x.size() + h.length() - 1.
ComplexVec convolve(const ChannelRealization& h, const ComplexVec& x);

/// Adds CN(0, N0) noise to every sample.
ComplexVec add_noise(const ComplexVec& y, const NoiseSpec& noise, Stream& rng);

/// Fills `out` with independent N(0, N0/2) reals, the real and
/// imaginary parts of CN(0, N0) samples.
void draw_noise(std::span<double> out, const NoiseSpec& noise, Stream& rng);

}  // namespace metacomm

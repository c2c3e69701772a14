// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metacomm/channel.hpp"
#include "metacomm/rng.hpp"
#include "metacomm/tape.hpp"

namespace metacomm {

/// Receiver-side pre-equalizer: a tanh MLP mapping the received block to
/// `taps` complex filter coefficients.
struct RtnSpec {
  std::size_t taps = 1;
  std::size_t hidden1 = 2;
  std::size_t hidden2 = 2;

  bool operator==(const RtnSpec&) const = default;
};

/// Architecture of the autoencoder. Encoder: one-hot(2^k) -> ReLU hidden ->
/// 2n linear -> power normalization. Decoder: 2*rx_len -> ReLU hidden ->
/// 2^k softmax, optionally preceded by the RTN filter.
struct ModelSpec {
  int k = 2;
  std::size_t n = 1;
  /// Channel impulse response length; sets the received block length.
  std::size_t channel_taps = 1;
  std::size_t encoder_hidden = 4;
  std::size_t decoder_hidden = 4;
  std::optional<RtnSpec> rtn;
  double es = 1.0;

  std::size_t messages() const { return std::size_t{1} << k; }
  std::size_t rx_len() const { return n + channel_taps - 1; }
  void validate() const;

  bool operator==(const ModelSpec&) const = default;
};

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

/// Ordered named segments of the flat parameter vector. Weight matrices are
/// (out x in) row-major, biases (1 x out).
class ParamLayout {
 public:
  static ParamLayout from(const ModelSpec& spec);

  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& at(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::size_t size() const { return size_; }

 private:
  void add(std::string name, std::size_t rows, std::size_t cols);

  std::vector<Segment> segments_;
  std::size_t size_ = 0;
};

class ParamVector {
 public:
  explicit ParamVector(const ModelSpec& spec);
  ParamVector(const ModelSpec& spec, std::vector<double> values);

  const ParamLayout& layout() const { return layout_; }
  std::span<double> segment(std::string_view name);
  std::span<const double> segment(std::string_view name) const;
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  ParamLayout layout_;
  std::vector<double> values_;
};

/// Glorot-uniform weights, zero biases.
ParamVector init_params(const ModelSpec& spec, Stream& rng);

/// Graph builders shared by training (double) and Hessian-vector products
/// (dual numbers). `theta` is the whole parameter vector as one tape input.
namespace graph {

template <class T>
ad::Var dense(ad::Tape<T>& tape, ad::Var theta, const ParamLayout& layout, const std::string& prefix,
              int index, ad::Var x) {
  const Segment& w = layout.at(prefix + ".W" + std::to_string(index));
  const Segment& b = layout.at(prefix + ".b" + std::to_string(index));
  tape.set_scope(prefix + "." + std::to_string(index));
  return tape.affine(x, tape.slice(theta, w.offset, w.rows, w.cols), tape.slice(theta, b.offset, b.rows, b.cols));
}

/// One normalized codeword per message: (rows x 2n).
template <class T>
ad::Var encoder(ad::Tape<T>& tape, ad::Var theta, const ModelSpec& spec, const ParamLayout& layout,
                std::span<const int> messages) {
  const std::size_t m = spec.messages();
  std::vector<double> onehot(messages.size() * m, 0.0);
  for (std::size_t r = 0; r < messages.size(); ++r) onehot[r * m + static_cast<std::size_t>(messages[r])] = 1.0;
  tape.set_scope("enc.input");
  ad::Var x = tape.constant(onehot, messages.size(), m);
  x = tape.relu(dense(tape, theta, layout, "enc", 1, x));
  x = dense(tape, theta, layout, "enc", 2, x);
  tape.set_scope("enc.normalize");
  return tape.power_normalize(x, static_cast<double>(spec.n) * spec.es);
}

/// RTN equalization: w = MLP(y), ybar = (w * y) restricted to the first rx_len samples.
template <class T>
ad::Var rtn(ad::Tape<T>& tape, ad::Var theta, const ModelSpec& spec, const ParamLayout& layout, ad::Var y) {
  ad::Var h = tape.tanh(dense(tape, theta, layout, "rtn", 1, y));
  h = tape.tanh(dense(tape, theta, layout, "rtn", 2, h));
  const ad::Var taps = dense(tape, theta, layout, "rtn", 3, h);
  tape.set_scope("rtn.filter");
  const ad::Var full = tape.complex_conv(taps, y);
  return tape.take_columns(full, 0, 2 * spec.rx_len());
}

/// Receiver logits (rows x 2^k) from received blocks (rows x 2*rx_len).
template <class T>
ad::Var receiver(ad::Tape<T>& tape, ad::Var theta, const ModelSpec& spec, const ParamLayout& layout, ad::Var y) {
  if (spec.rtn) y = rtn(tape, theta, spec, layout, y);
  ad::Var h = tape.relu(dense(tape, theta, layout, "dec", 1, y));
  return dense(tape, theta, layout, "dec", 2, h);
}

}  // namespace graph

/// Transmitted codeword for message index m in [0, 2^k).
ComplexVec encode(const ParamVector& params, const ModelSpec& spec, int m);

/// Encoder outputs for every message, in index order.
std::vector<ComplexVec> constellation(const ParamVector& params, const ModelSpec& spec);

/// Posterior over messages for one received block of rx_len samples. With
/// the RTN enabled the block is equalized before decoding.
std::vector<double> decode(const ParamVector& params, const ModelSpec& spec, const ComplexVec& y);

/// Batched receiver posteriors; `received` holds rows of 2*rx_len reals.
std::vector<double> decode_batch(const ParamVector& params, const ModelSpec& spec, std::span<const double> received,
                                 std::size_t rows);

/// Equalized block ybar for a received block y. Throws std::logic_error if
/// the RTN is disabled.
ComplexVec rtn_filter(const ParamVector& params, const ModelSpec& spec, const ComplexVec& y);

/// Index of the largest probability; ties resolve to the lowest index.
int map_decision(std::span<const double> probs);

}  // namespace metacomm

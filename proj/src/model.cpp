// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "metacomm/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace metacomm {

void ModelSpec::validate() const {
  if (k < 1 || k > 16) throw ConfigError("model.k must be in [1, 16]");
  if (n < 1) throw ConfigError("model.n must be >= 1");
  if (channel_taps < 1) throw ConfigError("channel taps must be >= 1");
  if (encoder_hidden < 1) throw ConfigError("model.encoder_hidden must be >= 1");
  if (decoder_hidden < 1) throw ConfigError("model.decoder_hidden must be >= 1");
  if (!(es > 0.0)) throw ConfigError("model.es must be positive");
  if (rtn && (rtn->taps < 1 || rtn->hidden1 < 1 || rtn->hidden2 < 1)) {
    throw ConfigError("model.rtn widths must be >= 1");
  }
}

void ParamLayout::add(std::string name, std::size_t rows, std::size_t cols) {
  segments_.push_back({std::move(name), size_, rows, cols});
  size_ += rows * cols;
}

ParamLayout ParamLayout::from(const ModelSpec& spec) {
  spec.validate();
  ParamLayout l;
  const std::size_t m = spec.messages();
  const std::size_t rx = 2 * spec.rx_len();
  l.add("enc.W1", spec.encoder_hidden, m);
  l.add("enc.b1", 1, spec.encoder_hidden);
  l.add("enc.W2", 2 * spec.n, spec.encoder_hidden);
  l.add("enc.b2", 1, 2 * spec.n);
  l.add("dec.W1", spec.decoder_hidden, rx);
  l.add("dec.b1", 1, spec.decoder_hidden);
  l.add("dec.W2", m, spec.decoder_hidden);
  l.add("dec.b2", 1, m);
  if (spec.rtn) {
    l.add("rtn.W1", spec.rtn->hidden1, rx);
    l.add("rtn.b1", 1, spec.rtn->hidden1);
    l.add("rtn.W2", spec.rtn->hidden2, spec.rtn->hidden1);
    l.add("rtn.b2", 1, spec.rtn->hidden2);
    l.add("rtn.W3", 2 * spec.rtn->taps, spec.rtn->hidden2);
    l.add("rtn.b3", 1, 2 * spec.rtn->taps);
  }
  return l;
}

const Segment& ParamLayout::at(std::string_view name) const {
  for (const auto& s : segments_) {
    if (s.name == name) return s;
  }
  throw std::out_of_range("unknown parameter segment '" + std::string(name) + "'");
}

bool ParamLayout::contains(std::string_view name) const {
  return std::any_of(segments_.begin(), segments_.end(), [&](const Segment& s) { return s.name == name; });
}

ParamVector::ParamVector(const ModelSpec& spec) : layout_(ParamLayout::from(spec)), values_(layout_.size(), 0.0) {}

ParamVector::ParamVector(const ModelSpec& spec, std::vector<double> values)
    : layout_(ParamLayout::from(spec)), values_(std::move(values)) {
  if (values_.size() != layout_.size()) {
    throw std::invalid_argument("parameter count " + std::to_string(values_.size()) + " does not match layout size " +
                                std::to_string(layout_.size()));
  }
}

std::span<double> ParamVector::segment(std::string_view name) {
  const Segment& s = layout_.at(name);
  return std::span<double>(values_).subspan(s.offset, s.size());
}

std::span<const double> ParamVector::segment(std::string_view name) const {
  const Segment& s = layout_.at(name);
  return std::span<const double>(values_).subspan(s.offset, s.size());
}

ParamVector init_params(const ModelSpec& spec, Stream& rng) {
  ParamVector p(spec);
  for (const auto& seg : p.layout().segments()) {
    if (seg.name.find(".W") == std::string::npos) continue;
    const double limit = std::sqrt(6.0 / static_cast<double>(seg.rows + seg.cols));
    for (double& w : p.segment(seg.name)) w = limit * (2.0 * rng.uniform() - 1.0);
  }
  return p;
}

namespace {

std::vector<double> softmax_rows(const std::vector<double>& logits, std::size_t rows, std::size_t cols) {
  std::vector<double> p(logits.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* z = logits.data() + r * cols;
    const double peak = *std::max_element(z, z + cols);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      p[r * cols + c] = std::exp(z[c] - peak);
      sum += p[r * cols + c];
    }
    for (std::size_t c = 0; c < cols; ++c) p[r * cols + c] /= sum;
  }
  return p;
}

}  // namespace

std::vector<ComplexVec> constellation(const ParamVector& params, const ModelSpec& spec) {
  std::vector<int> all(spec.messages());
  for (std::size_t m = 0; m < all.size(); ++m) all[m] = static_cast<int>(m);
  ad::Tape<double> tape;
  const auto theta = tape.input(params.values(), 1, params.size());
  const auto x = tape.value(graph::encoder(tape, theta, spec, params.layout(), all));
  std::vector<ComplexVec> out;
  const std::size_t w = 2 * spec.n;
  for (std::size_t m = 0; m < all.size(); ++m) {
    out.emplace_back(std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(m * w),
                                         x.begin() + static_cast<std::ptrdiff_t>((m + 1) * w)));
  }
  return out;
}

ComplexVec encode(const ParamVector& params, const ModelSpec& spec, int m) {
  if (m < 0 || static_cast<std::size_t>(m) >= spec.messages()) throw std::out_of_range("encode: message index");
  const int msg[1] = {m};
  ad::Tape<double> tape;
  const auto theta = tape.input(params.values(), 1, params.size());
  return ComplexVec(tape.value(graph::encoder(tape, theta, spec, params.layout(), msg)));
}

std::vector<double> decode_batch(const ParamVector& params, const ModelSpec& spec, std::span<const double> received,
                                 std::size_t rows) {
  const std::size_t width = 2 * spec.rx_len();
  if (received.size() != rows * width) {
    throw ad::ShapeError("decode: expected blocks of " + std::to_string(spec.rx_len()) + " complex samples");
  }
  ad::Tape<double> tape;
  const auto theta = tape.input(params.values(), 1, params.size());
  const auto y = tape.constant(received, rows, width);
  const auto logits = graph::receiver(tape, theta, spec, params.layout(), y);
  return softmax_rows(tape.value(logits), rows, spec.messages());
}

std::vector<double> decode(const ParamVector& params, const ModelSpec& spec, const ComplexVec& y) {
  return decode_batch(params, spec, y.reals(), 1);
}

ComplexVec rtn_filter(const ParamVector& params, const ModelSpec& spec, const ComplexVec& y) {
  if (!spec.rtn) throw std::logic_error("rtn_filter: RTN is disabled in this model");
  if (y.size() != spec.rx_len()) throw ad::ShapeError("rtn_filter: received block length mismatch");
  ad::Tape<double> tape;
  const auto theta = tape.input(params.values(), 1, params.size());
  const auto in = tape.constant(y.reals(), 1, y.reals().size());
  return ComplexVec(tape.value(graph::rtn(tape, theta, spec, params.layout(), in)));
}

int map_decision(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("map_decision: empty probability vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return static_cast<int>(best);
}

}  // namespace metacomm

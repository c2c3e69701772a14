// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

// Reference implementations used as test oracles. Nothing here calls into the
// tape: the network arithmetic is re-derived with std::complex and plain loops.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "metacomm/model.hpp"
#include "metacomm/rng.hpp"

namespace oracle {

using cplx = std::complex<double>;
using Fn = std::function<double(std::span<const double>)>;

inline std::vector<double> central_diff(const Fn& f, std::span<const double> x, double step = 1e-5) {
  std::vector<double> p(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = x[i] + step;
    const double a = f(p);
    p[i] = x[i] - step;
    const double b = f(p);
    p[i] = x[i];
    g[i] = (a - b) / (2 * step);
  }
  return g;
}

/// Elementwise relative error with a floor of 1e-3 * max|ref| for tiny entries.
inline double rel_err(std::span<const double> got, std::span<const double> ref) {
  double scale = 0;
  for (double v : ref) scale = std::max(scale, std::abs(v));
  double worst = 0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    worst = std::max(worst, std::abs(got[i] - ref[i]) / std::max({std::abs(ref[i]), 1e-3 * scale, 1e-12}));
  }
  return worst;
}

inline std::vector<double> layer(std::span<const double> p, const metacomm::ParamLayout& lay, const char* prefix,
                                 int idx, const std::vector<double>& x) {
  const auto& w = lay.at(std::string(prefix) + ".W" + std::to_string(idx));
  const auto& b = lay.at(std::string(prefix) + ".b" + std::to_string(idx));
  std::vector<double> y(w.rows);
  for (std::size_t o = 0; o < w.rows; ++o) {
    double s = p[b.offset + o];
    for (std::size_t i = 0; i < w.cols; ++i) s += p[w.offset + o * w.cols + i] * x[i];
    y[o] = s;
  }
  return y;
}

inline std::vector<cplx> to_complex(const std::vector<double>& r) {
  std::vector<cplx> c(r.size() / 2);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = {r[2 * i], r[2 * i + 1]};
  return c;
}

inline std::vector<double> to_reals(const std::vector<cplx>& c) {
  std::vector<double> r;
  for (auto v : c) {
    r.push_back(v.real());
    r.push_back(v.imag());
  }
  return r;
}

inline std::vector<cplx> conv(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  std::vector<cplx> out(a.size() + b.size() - 1);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

inline std::vector<cplx> encode(std::span<const double> p, const metacomm::ModelSpec& s, int m) {
  const auto lay = metacomm::ParamLayout::from(s);
  std::vector<double> x(s.messages(), 0.0);
  x[static_cast<std::size_t>(m)] = 1.0;
  auto h = layer(p, lay, "enc", 1, x);
  for (auto& v : h) v = std::max(v, 0.0);
  auto z = layer(p, lay, "enc", 2, h);
  double norm = 0;
  for (double v : z) norm += v * v;
  norm = std::sqrt(norm);
  const double f = std::sqrt(static_cast<double>(s.n) * s.es) / std::max(norm, 1e-12);
  for (auto& v : z) v *= f;
  return to_complex(z);
}

/// Receiver logits for one received block (complex, rx_len samples).
inline std::vector<double> logits(std::span<const double> p, const metacomm::ModelSpec& s,
                                  const std::vector<cplx>& y) {
  const auto lay = metacomm::ParamLayout::from(s);
  std::vector<double> in = to_reals(y);
  if (s.rtn) {
    auto a = layer(p, lay, "rtn", 1, in);
    for (auto& v : a) v = std::tanh(v);
    a = layer(p, lay, "rtn", 2, a);
    for (auto& v : a) v = std::tanh(v);
    const auto w = to_complex(layer(p, lay, "rtn", 3, a));
    auto full = conv(w, y);
    full.resize(y.size());
    in = to_reals(full);
  }
  auto h = layer(p, lay, "dec", 1, in);
  for (auto& v : h) v = std::max(v, 0.0);
  return layer(p, lay, "dec", 2, h);
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> e(z.size());
  double s = 0;
  for (std::size_t i = 0; i < z.size(); ++i) s += e[i] = std::exp(z[i] - mx);
  for (auto& v : e) v /= s;
  return e;
}

/// Mean cross-entropy over a batch: messages[r] sent through taps with noise row r.
inline double loss(std::span<const double> p, const metacomm::ModelSpec& s, const std::vector<cplx>& taps,
                   const std::vector<int>& messages, const std::vector<double>& noise) {
  const std::size_t width = 2 * s.rx_len();
  double total = 0;
  for (std::size_t r = 0; r < messages.size(); ++r) {
    auto y = conv(taps, encode(p, s, messages[r]));
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += cplx(noise[r * width + 2 * i], noise[r * width + 2 * i + 1]);
    const auto pr = softmax(logits(p, s, y));
    total -= std::log(pr[static_cast<std::size_t>(messages[r])]);
  }
  return total / static_cast<double>(messages.size());
}

/// Perturbed Glorot point so that hidden units are not all at their init.
inline metacomm::ParamVector random_params(const metacomm::ModelSpec& s, metacomm::Stream& rng, double jitter = 0.3) {
  auto p = metacomm::init_params(s, rng);
  for (auto& v : p.values()) v += jitter * rng.normal();
  return p;
}

inline metacomm::ModelSpec toy(bool rtn = false) {
  metacomm::ModelSpec s;
  if (rtn) s.rtn = metacomm::RtnSpec{};
  return s;
}

// QPSK encoder and a matched-filter decoder with very large logit gaps.
inline metacomm::ParamVector perfect_toy() {
  const auto spec = toy();
  metacomm::ParamVector p(spec);
  auto w1 = p.segment("enc.W1");
  for (std::size_t i = 0; i < 4; ++i) w1[i * 4 + i] = 1.0;
  auto w2 = p.segment("enc.W2");
  auto d1 = p.segment("dec.W1");
  auto d2 = p.segment("dec.W2");
  for (std::size_t m = 0; m < 4; ++m) {
    const cplx pt = std::polar(1.0, std::numbers::pi / 4 + std::numbers::pi / 2 * static_cast<double>(m));
    w2[0 * 4 + m] = pt.real();
    w2[1 * 4 + m] = pt.imag();
    d1[m * 2 + 0] = 1000 * pt.real();
    d1[m * 2 + 1] = 1000 * pt.imag();
    d2[m * 4 + m] = 1.0;
  }
  return p;
}

}  // namespace oracle

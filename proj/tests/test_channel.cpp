// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "metacomm/channel.hpp"
#include "oracles.hpp"

namespace {

using namespace metacomm;
using cplx = std::complex<double>;

TEST(Stream, SameSeedSameSequence) {
  Stream a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Stream, SplitsAreIndependentOfParentConsumption) {
  Stream a(5);
  const Stream child_before = a.split("x");
  for (int i = 0; i < 10; ++i) a();
  Stream c1 = child_before, c2 = a.split("x");
  for (int i = 0; i < 10; ++i) EXPECT_EQ(c1(), c2());
}

TEST(Stream, DistinctChildrenDiffer) {
  const Stream root(5);
  std::set<std::uint64_t> keys{root.key()};
  for (std::uint64_t i = 0; i < 1000; ++i) keys.insert(root.split(i).key());
  for (const char* name : {"meta", "joint", "curve", "adapt", "init"}) keys.insert(root.split(name).key());
  EXPECT_EQ(keys.size(), 1006u);
  EXPECT_EQ(root.split("meta").split(std::uint64_t{3}).label(), "seed:5/meta:3");
}

TEST(Stream, UniformAndNormalMoments) {
  Stream s(9);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = s.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sn / n, 0.0, 4 / std::sqrt(n));
  EXPECT_NEAR(sn2 / n, 1.0, 4 * std::sqrt(2.0 / n));
}

TEST(Stream, IndexIsUniform) {
  Stream s(10);
  std::vector<int> counts(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++counts[s.index(7)];
  for (int c : counts) EXPECT_NEAR(c / double(n), 1.0 / 7, 0.01);
}

TEST(Channel, TwoPhaseDrawsBothPhasesEqually) {
  Stream s(1);
  const TwoPhase tp;
  int first = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto h = sample_channel(tp, s);
    ASSERT_EQ(h.length(), 1u);
    const cplx v = h.taps[0];
    EXPECT_NEAR(std::abs(v), 1.0, 1e-15);
    const double phase = std::arg(v);
    if (std::abs(phase - std::numbers::pi / 4) < 1e-12) {
      ++first;
    } else {
      EXPECT_NEAR(phase, 3 * std::numbers::pi / 4, 1e-12);
    }
  }
  EXPECT_NEAR(first / double(n), 0.5, 0.01);
}

TEST(Channel, RayleighTotalPowerIsOne) {
  Stream s(2);
  const int n = 10000;
  double total = 0;
  for (int i = 0; i < n; ++i) {
    const auto h = sample_channel(RayleighBlock{3}, s);
    ASSERT_EQ(h.length(), 3u);
    total += h.taps.energy();
  }
  EXPECT_NEAR(total / n, 1.0, 0.05);
}

TEST(Channel, RayleighSingleTapPowerIsExponential) {
  Stream s(3);
  const int n = 10000;
  std::vector<double> p(n);
  for (auto& v : p) v = sample_channel(RayleighBlock{1}, s).taps.energy();
  std::sort(p.begin(), p.end());
  double d = 0;
  for (int i = 0; i < n; ++i) {
    const double cdf = 1 - std::exp(-p[i]);
    d = std::max({d, std::abs(cdf - double(i) / n), std::abs(cdf - double(i + 1) / n)});
  }
  // Kolmogorov-Smirnov: p > 0.01 iff D < 1.628 / sqrt(n) asymptotically.
  EXPECT_LT(d, 1.628 / std::sqrt(double(n)));
}

TEST(Channel, ConvolveExamples) {
  const ComplexVec x{cplx(0.3, -1), cplx(2, 0.5)};
  EXPECT_EQ(convolve({ComplexVec{cplx(1, 0)}}, x), x);

  const auto rot = convolve({ComplexVec{std::polar(1.0, std::numbers::pi / 4)}}, ComplexVec{cplx(1, 0)});
  EXPECT_NEAR(rot[0].real(), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(rot[0].imag(), std::sqrt(0.5), 1e-15);

  const auto y = convolve({ComplexVec{cplx(1, 0), cplx(0.5, 0)}}, ComplexVec{cplx(1, 0), cplx(0, 1)});
  ASSERT_EQ(y.size(), 3u);
  EXPECT_EQ(y[0], cplx(1, 0));
  EXPECT_EQ(y[1], cplx(0.5, 1));
  EXPECT_EQ(y[2], cplx(0, 0.5));
}

ComplexVec random_vec(Stream& s, std::size_t n) {
  ComplexVec v(n);
  for (std::size_t i = 0; i < n; ++i) v.set(i, {s.normal(), s.normal()});
  return v;
}

TEST(Channel, ConvolveIsLinearAndCommutative) {
  Stream s(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + s.index(6), l = 1 + s.index(4);
    const ChannelRealization h{random_vec(s, l)};
    const ComplexVec x1 = random_vec(s, n), x2 = random_vec(s, n);
    const cplx a(s.normal(), s.normal()), b(s.normal(), s.normal());
    ComplexVec mix(n);
    for (std::size_t i = 0; i < n; ++i) mix.set(i, a * x1[i] + b * x2[i]);
    const auto lhs = convolve(h, mix);
    const auto y1 = convolve(h, x1), y2 = convolve(h, x2);
    const auto swapped = convolve({x1}, h.taps);
    ASSERT_EQ(lhs.size(), n + l - 1);
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      EXPECT_LT(std::abs(lhs[i] - (a * y1[i] + b * y2[i])), 1e-12);
      EXPECT_LT(std::abs(y1[i] - swapped[i]), 1e-12);
    }
  }
}

TEST(Channel, ConvolveMatchesPolynomialProduct) {
  Stream s(5);
  const ComplexVec h = random_vec(s, 3), x = random_vec(s, 4);
  const auto want = oracle::conv(oracle::to_complex(h.reals()), oracle::to_complex(x.reals()));
  const auto got = convolve({h}, x);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_LT(std::abs(got[i] - want[i]), 1e-14);
}

TEST(Noise, SnrConversions) {
  EXPECT_NEAR(snr_to_n0({SnrMode::kEsN0, 15.0, 1.0, 1.0}).n0, 0.0316227766, 1e-9);
  const auto toy = snr_to_n0({SnrMode::kEbN0, 15.0, 1.0, 2.0});
  EXPECT_NEAR(toy.n0, 0.0158113883, 1e-9);
  EXPECT_NEAR(toy.esn0_db, 15.0 + 10 * std::log10(2.0), 1e-12);
  EXPECT_DOUBLE_EQ(snr_to_n0({SnrMode::kEsN0, 0.0, 2.5, 1.0}).n0, 2.5);
  EXPECT_THROW(snr_to_n0({SnrMode::kEsN0, 10.0, 0.0, 1.0}), ConfigError);
  EXPECT_THROW(snr_to_n0({SnrMode::kEsN0, 10.0, -1.0, 1.0}), ConfigError);
}

TEST(Noise, NoiselessLimitAndDeterminism) {
  Stream s(6);
  const ComplexVec y = random_vec(s, 5);
  NoiseSpec tiny{1.0, 1e-300, 3000.0};
  Stream a(7), b(7);
  const auto out = add_noise(y, tiny, a);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_LT(std::abs(out[i] - y[i]), 1e-10);
  NoiseSpec n{1.0, 0.3, 0.0};
  Stream c(8), d(8);
  EXPECT_EQ(add_noise(y, n, c), add_noise(y, n, d));
}

TEST(Noise, PowerAndMean) {
  const NoiseSpec n{1.0, 0.2, 0.0};
  Stream s(9);
  const std::size_t count = 1000000;
  const ComplexVec zero(count);
  const auto w = add_noise(zero, n, s);
  double power = 0, re = 0, im = 0, re2 = 0;
  for (std::size_t i = 0; i < count; ++i) {
    power += std::norm(w[i]);
    re += w[i].real();
    im += w[i].imag();
    re2 += w[i].real() * w[i].real();
  }
  EXPECT_NEAR(power / count, 0.2, 0.002);
  EXPECT_NEAR(re2 / count, 0.1, 0.001);
  const double sigma = std::sqrt(0.1);
  EXPECT_LT(std::abs(re / count), 4 * sigma / std::sqrt(double(count)));
  EXPECT_LT(std::abs(im / count), 4 * sigma / std::sqrt(double(count)));
}

TEST(Channel, ChannelLength) {
  EXPECT_EQ(channel_length(TwoPhase{}), 1u);
  EXPECT_EQ(channel_length(RayleighBlock{3}), 3u);
}

}  // namespace

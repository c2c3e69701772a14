// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "metacomm/maml.hpp"
#include "oracles.hpp"

namespace {

using namespace metacomm;
using ad::Tape;
using ad::Var;

const NoiseSpec kToyNoise = snr_to_n0({SnrMode::kEbN0, 15.0, 1.0, 2.0});

ChannelRealization phase(double deg) { return {ComplexVec{std::polar(1.0, deg * std::numbers::pi / 180)}}; }

struct HalfNorm {
  template <class T>
  Var operator()(Tape<T>& t, Var th) const {
    return t.scale(t.dot(th, th), 0.5);
  }
};

struct Linear {
  std::vector<double> c;
  template <class T>
  Var operator()(Tape<T>& t, Var th) const {
    return t.dot(t.constant(c, 1, c.size()), th);
  }
};

// 1/2 sum_i a_i theta_i^2 + sum_i theta_i^3 / 3, a non-trivial Hessian.
struct Cubic {
  std::vector<double> a;
  template <class T>
  Var operator()(Tape<T>& t, Var th) const {
    const std::vector<double> zero{0.0};
    Var total;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const Var x = t.slice(th, i, 1, 1);
      const Var x2 = t.affine(x, x, t.constant(zero, 1, 1));
      const Var term = t.add(t.scale(x2, 0.5 * a[i]), t.scale(t.dot(x2, x), 1.0 / 3));
      total = i == 0 ? term : t.add(total, term);
    }
    return total;
  }
};

TEST(MetaGradient, QuadraticIsSecondOrder) {
  const std::vector<double> theta{1.0, -0.5, 3.0};
  for (double eta : {0.1, 0.5, 1.3}) {
    const auto second = meta_gradient(HalfNorm{}, HalfNorm{}, theta, eta, MetaOrder::kSecond);
    const auto first = meta_gradient(HalfNorm{}, HalfNorm{}, theta, eta, MetaOrder::kFirst);
    for (std::size_t i = 0; i < theta.size(); ++i) {
      EXPECT_NEAR(second.grad[i], (1 - eta) * (1 - eta) * theta[i], 1e-12);
      EXPECT_NEAR(first.grad[i], (1 - eta) * theta[i], 1e-12);
      EXPECT_GT(std::abs(second.grad[i] - first.grad[i]), 1e-3);
    }
  }
}

TEST(MetaGradient, CubicMatchesClosedForm) {
  // L = sum a_i x^2/2 + x^3/3: grad = a x + x^2, Hessian diag a + 2x.
  const Cubic loss{{1.0, 2.0, -0.5}};
  const std::vector<double> theta{0.3, -0.7, 1.1};
  const double eta = 0.2;
  const auto mg = meta_gradient(loss, loss, theta, eta, MetaOrder::kSecond);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double a = loss.a[i], x = theta[i];
    const double u = x - eta * (a * x + x * x);
    const double want = (1 - eta * (a + 2 * x)) * (a * u + u * u);
    EXPECT_NEAR(mg.grad[i], want, 1e-13);
  }
}

TEST(MetaGradient, LinearInnerLossMakesOrdersAgree) {
  const Linear inner{{0.3, -1.0, 2.0}};
  const std::vector<double> theta{0.5, 0.1, -0.4};
  const auto a = meta_gradient(inner, HalfNorm{}, theta, 0.7, MetaOrder::kSecond);
  const auto b = meta_gradient(inner, HalfNorm{}, theta, 0.7, MetaOrder::kFirst);
  for (std::size_t i = 0; i < theta.size(); ++i) EXPECT_NEAR(a.grad[i], b.grad[i], 1e-10);
}

class ToyMeta : public ::testing::TestWithParam<bool> {
 protected:
  ModelSpec spec = oracle::toy(GetParam());
};

TEST_P(ToyMeta, MatchesFiniteDifferencesOfComposition) {
  Stream rng(31);
  const ChannelRealization h = phase(135);
  for (int point = 0; point < 5; ++point) {
    const ParamVector p = oracle::random_params(spec, rng);
    const Batch inner = sample_batch(spec, 4, kToyNoise, rng, false);
    const Batch outer = sample_batch(spec, 4, kToyNoise, rng, false);
    const double eta = 0.1;
    const auto mg = meta_gradient(p, spec, h, eta, inner, outer, MetaOrder::kSecond);
    const auto composed = [&](std::span<const double> x) {
      ParamVector theta(spec, std::vector<double>(x.begin(), x.end()));
      const auto g = loss_and_gradient(theta, spec, h, inner).grad;
      for (std::size_t i = 0; i < g.size(); ++i) theta.values()[i] -= eta * g[i];
      return oracle::loss(theta.values(), spec, {h.taps[0]}, outer.messages, outer.noise);
    };
    EXPECT_LT(oracle::rel_err(mg.grad, oracle::central_diff(composed, p.values())), 1e-4) << "point " << point;
    const auto fo = meta_gradient(p, spec, h, eta, inner, outer, MetaOrder::kFirst);
    EXPECT_GT(oracle::rel_err(fo.grad, mg.grad), 1e-6);
  }
}

TEST_P(ToyMeta, ZeroStepIsPlainOuterGradient) {
  Stream rng(32);
  const ParamVector p = oracle::random_params(spec, rng);
  const Batch inner = sample_batch(spec, 4, kToyNoise, rng, false);
  const Batch outer = sample_batch(spec, 4, kToyNoise, rng, false);
  const auto mg = meta_gradient(p, spec, phase(45), 0.0, inner, outer, MetaOrder::kSecond);
  const auto lg = loss_and_gradient(p, spec, phase(45), outer);
  EXPECT_EQ(mg.grad, lg.grad);
  EXPECT_EQ(mg.outer_loss, lg.loss);
}

TEST_P(ToyMeta, InnerUpdateEqualsOneSgdStepOfLocalTraining) {
  Stream rng(33);
  const ParamVector p = oracle::random_params(spec, rng);
  const Stream train_rng(8);
  const TrainConfig cfg{4, 1, {{OptimizerKind::kSgd, 0.1, 0}}, true};
  const auto traj = local_train(p, spec, phase(45), cfg, kToyNoise, train_rng);
  Stream b = train_rng.split(std::uint64_t{0}).split(std::uint64_t{0});
  const Batch batch = sample_batch(spec, 4, kToyNoise, b, true);
  EXPECT_EQ(inner_update(p, spec, phase(45), 0.1, batch), traj[1].values());
}

INSTANTIATE_TEST_SUITE_P(Architectures, ToyMeta, ::testing::Values(false, true),
                         [](const auto& info) { return info.param ? "rtn" : "vanilla"; });

TEST(InnerUpdate, PerfectModelIsFixedPoint) {
  const auto spec = oracle::toy();
  const ParamVector p = oracle::perfect_toy();
  Batch b;
  b.messages = {0, 1, 2, 3};
  b.noise.assign(8, 0.0);
  EXPECT_EQ(inner_update(p, spec, {ComplexVec{std::complex<double>(1, 0)}}, 0.5, b), p.values());
}

TEST(MetaTrain, DegenerateConfigurationIsJointTraining) {
  Stream rng(34);
  const auto spec = oracle::toy(true);
  const ParamVector p = init_params(spec, rng);
  const std::vector<ChannelRealization> one{phase(135)};
  MetaConfig mc;
  mc.iterations = 30;
  mc.inner_lr = 0.0;
  mc.order = MetaOrder::kFirst;
  mc.outer_lr = 0.01;
  mc.batch_size = 4;
  const auto meta = meta_train(p, spec, one, mc, kToyNoise, Stream(12));
  const TrainConfig tc{4, 30, {{OptimizerKind::kAdam, 0.01, 0}}, false};
  EXPECT_EQ(meta.init.values(), joint_train(p, spec, one, tc, kToyNoise, Stream(12)).values());
}

TEST(MetaTrain, UpdateUsesSumOfPerChannelMetaGradients) {
  Stream rng(35);
  const auto spec = oracle::toy(true);
  const ParamVector p = oracle::random_params(spec, rng);
  const std::vector<ChannelRealization> hs{phase(45), phase(135), phase(300)};
  MetaConfig mc;
  mc.iterations = 1;
  mc.outer = OptimizerKind::kSgd;
  mc.outer_lr = 0.05;
  const Stream meta_rng(77);
  const auto res = meta_train(p, spec, hs, mc, kToyNoise, meta_rng);
  std::vector<double> want = p.values();
  double loss = 0;
  for (std::size_t c = 0; c < hs.size(); ++c) {
    Stream outer_rng = meta_rng.split(std::uint64_t{0}).split(static_cast<std::uint64_t>(c));
    Stream inner_rng = outer_rng.split("inner");
    const Batch inner = sample_batch(spec, 4, kToyNoise, inner_rng, false);
    const Batch outer = sample_batch(spec, 4, kToyNoise, outer_rng, false);
    const auto mg = meta_gradient(p, spec, hs[c], mc.inner_lr, inner, outer, MetaOrder::kSecond);
    for (std::size_t i = 0; i < want.size(); ++i) want[i] -= mc.outer_lr * mg.grad[i];
    loss += mg.outer_loss;
  }
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(res.init.values()[i], want[i], 1e-12);
  ASSERT_EQ(res.meta_loss.size(), 1u);
  EXPECT_NEAR(res.meta_loss[0], loss, 1e-12);
}

TEST(MetaTrain, DeterministicAcrossThreadCounts) {
  Stream rng(36);
  const auto spec = oracle::toy();
  const ParamVector p = init_params(spec, rng);
  const std::vector<ChannelRealization> hs{phase(45), phase(135), phase(10), phase(250)};
  MetaConfig mc;
  mc.iterations = 40;
  mc.channels_per_iteration = 2;
  const auto a = meta_train(p, spec, hs, mc, kToyNoise, Stream(5), 1);
  const auto b = meta_train(p, spec, hs, mc, kToyNoise, Stream(5), 4);
  const auto c = meta_train(p, spec, hs, mc, kToyNoise, Stream(5), 1);
  EXPECT_EQ(a.init.values(), b.init.values());
  EXPECT_EQ(a.meta_loss, b.meta_loss);
  EXPECT_EQ(a.init.values(), c.init.values());
}

TEST(MetaTrain, Errors) {
  const auto spec = oracle::toy();
  const ParamVector p(spec);
  MetaConfig mc;
  EXPECT_THROW(meta_train(p, spec, {}, mc, kToyNoise, Stream(1)), ConfigError);
  const std::vector<ChannelRealization> hs{phase(45), {ComplexVec{std::complex<double>(1e300, 1e300)}}};
  Stream rng(2);
  const ParamVector q = oracle::random_params(spec, rng);
  mc.iterations = 1;
  try {
    meta_train(q, spec, hs, mc, kToyNoise, Stream(1));
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_NE(std::string(e.what()).find("channel 1"), std::string::npos) << e.what();
  }
}

class ToyMetaTraining : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const auto spec = oracle::toy();
    Stream rng(40);
    init_ = new ParamVector(init_params(spec, rng));
    channels_ = {phase(45), phase(135)};
    MetaConfig mc;
    mc.iterations = 20000;
    mc.exhaustive = true;
    meta_ = new MetaResult(meta_train(*init_, spec, channels_, mc, kToyNoise, Stream(41)));
    const TrainConfig tc{4, 20000, {{OptimizerKind::kAdam, 0.01, 0}}, true};
    joint_ = new ParamVector(joint_train(*init_, spec, channels_, tc, kToyNoise, Stream(42)));
  }
  static void TearDownTestSuite() {
    delete init_;
    delete meta_;
    delete joint_;
  }
  static inline ParamVector* init_ = nullptr;
  static inline MetaResult* meta_ = nullptr;
  static inline ParamVector* joint_ = nullptr;
  static inline std::vector<ChannelRealization> channels_;
};

TEST_F(ToyMetaTraining, MetaLossDecreases) {
  const auto& l = meta_->meta_loss;
  ASSERT_EQ(l.size(), 20000u);
  EXPECT_LT(l.back(), l.front());
  const double head = std::accumulate(l.begin(), l.begin() + 100, 0.0);
  const double tail = std::accumulate(l.end() - 100, l.end(), 0.0);
  EXPECT_LT(tail, 0.5 * head);
}

TEST_F(ToyMetaTraining, OneInnerStepBeatsJointPreAdaptation) {
  const auto spec = oracle::toy();
  Stream rng(43);
  for (const auto& h : channels_) {
    const Batch inner = sample_batch(spec, 4, kToyNoise, rng, true);
    const Batch eval = sample_batch(spec, 4000, kToyNoise, rng, true);
    const ParamVector adapted(spec, inner_update(meta_->init, spec, h, 0.1, inner));
    EXPECT_LT(empirical_loss(adapted, spec, h, eval), empirical_loss(*joint_, spec, h, eval));
  }
}

}  // namespace

// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numbers>

#include "metacomm/config.hpp"

namespace {

using namespace metacomm;

std::string error_of(const KeyValues& kv) {
  try {
    build_config(kv);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

TEST(KeyValues, ParsesCommentsAndWhitespace) {
  const auto kv = parse_key_values("# header\n\n  model.k = 3   # trailing\nseed=9\r\nempty =\n");
  EXPECT_EQ(kv.at("model.k"), "3");
  EXPECT_EQ(kv.at("seed"), "9");
  EXPECT_EQ(kv.at("empty"), "");
  EXPECT_EQ(kv.size(), 3u);
}

TEST(KeyValues, ReportsLineNumbers) {
  try {
    parse_key_values("a = 1\n\nnot a pair\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_key_values("= 4\n"), ConfigError);
  EXPECT_THROW(load_key_values("/nonexistent/metacomm.cfg"), ConfigError);
}

TEST(KeyValues, Overrides) {
  KeyValues kv{{"a", "1"}};
  apply_override(kv, "a=2");
  apply_override(kv, " b = x y ");
  EXPECT_EQ(kv.at("a"), "2");
  EXPECT_EQ(kv.at("b"), "x y");
  EXPECT_THROW(apply_override(kv, "novalue"), ConfigError);
  EXPECT_THROW(apply_override(kv, "=3"), ConfigError);
}

TEST(Config, Defaults) {
  const auto c = build_config({});
  EXPECT_EQ(c.model.k, 2);
  EXPECT_EQ(c.model.n, 1u);
  EXPECT_FALSE(c.model.rtn);
  EXPECT_TRUE(std::holds_alternative<TwoPhase>(c.channel));
  EXPECT_EQ(c.eval_channels, 20u);
  EXPECT_EQ(c.eval_messages, 10000u);
  EXPECT_EQ(c.grid_resolution, 201u);
  EXPECT_EQ(c.grid_bounds.re_min, -2.0);
}

TEST(Config, BundledToyMatchesTheTwoPhaseExperiment) {
  const auto c = build_config(load_key_values(METACOMM_CONFIG_DIR "/toy.cfg"));
  EXPECT_EQ(c.model.k, 2);
  EXPECT_EQ(c.model.n, 1u);
  EXPECT_EQ(c.model.encoder_hidden, 4u);
  EXPECT_EQ(c.model.decoder_hidden, 4u);
  EXPECT_EQ(c.batch_size, 4u);
  const auto& tp = std::get<TwoPhase>(c.channel);
  ASSERT_EQ(tp.phases.size(), 2u);
  EXPECT_NEAR(tp.phases[0], std::numbers::pi / 4, 1e-15);
  EXPECT_NEAR(tp.phases[1], 3 * std::numbers::pi / 4, 1e-15);
  EXPECT_EQ(tp.amplitude, 1.0);
  EXPECT_EQ(c.meta_channels, 2u);
  EXPECT_EQ(c.meta.inner_lr, 0.1);
  EXPECT_EQ(c.meta.outer_lr, 0.01);
  EXPECT_EQ(c.meta.outer, OptimizerKind::kAdam);
  EXPECT_EQ(c.meta.order, MetaOrder::kSecond);
  EXPECT_EQ(format_schedule(c.joint_schedule), "adam:0.01");
  EXPECT_EQ(format_schedule(c.adapt_meta), "sgd:0.1:1,adam:0.001");
  EXPECT_EQ(format_schedule(c.adapt_joint), "adam:0.001");
  EXPECT_NEAR(c.noise().esn0_db, 18.0103, 1e-4);
  EXPECT_NEAR(c.noise().n0, 0.0158114, 1e-7);
}

TEST(Config, BundledRayleighMatchesTheFadingExperiment) {
  const auto c = build_config(load_key_values(METACOMM_CONFIG_DIR "/rayleigh.cfg"));
  EXPECT_EQ(c.model.k, 4);
  EXPECT_EQ(c.model.n, 4u);
  EXPECT_EQ(std::get<RayleighBlock>(c.channel).taps, 3u);
  EXPECT_EQ(c.model.channel_taps, 3u);
  EXPECT_EQ(c.meta_channels, 100u);
  EXPECT_EQ(c.batch_size, 16u);
  EXPECT_TRUE(c.exhaustive);
  EXPECT_NEAR(c.noise().n0, 0.0316228, 1e-7);
  KeyValues kv = load_key_values(METACOMM_CONFIG_DIR "/rayleigh.cfg");
  apply_override(kv, "model.rtn=true");
  const auto r = build_config(kv);
  ASSERT_TRUE(r.model.rtn);
  EXPECT_EQ(r.model.rtn->taps, 3u);
}

TEST(Config, CollectsEveryFieldError) {
  const std::string msg = error_of({{"model.k", "zero"},
                                    {"meta.inner_lr", "-0.1"},
                                    {"channel.kind", "awgn"},
                                    {"train.exhaustive", "maybe"},
                                    {"mystery", "1"}});
  for (const char* key : {"model.k", "meta.inner_lr", "channel.kind", "train.exhaustive", "mystery: unknown key"}) {
    EXPECT_NE(msg.find(key), std::string::npos) << key << " missing from:\n" << msg;
  }
}

TEST(Config, CrossFieldChecks) {
  EXPECT_NE(error_of({{"train.exhaustive", "true"}, {"train.batch_size", "6"}}).find("train.batch_size"),
            std::string::npos);
  EXPECT_EQ(error_of({{"train.exhaustive", "true"}, {"train.batch_size", "8"}}), "");
  EXPECT_NE(error_of({{"grid.bounds", "1,0,-1,1"}}).find("grid.bounds"), std::string::npos);
  EXPECT_NE(error_of({{"adapt.meta_schedule", "sgd"}}).find("adapt.meta_schedule"), std::string::npos);
  EXPECT_NE(error_of({{"seed", "-3"}}).find("seed"), std::string::npos);
  EXPECT_NE(error_of({{"model.k", "17"}}).find("model.k"), std::string::npos);

  auto c = build_config({{"model.n", "2"}});
  EXPECT_THROW(validate_for_grid(c), ConfigError);
  c = build_config({{"channel.kind", "rayleigh"}, {"channel.taps", "2"}});
  EXPECT_EQ(c.model.channel_taps, 2u);
  EXPECT_THROW(validate_for_grid(c), ConfigError);
  EXPECT_NO_THROW(validate_for_grid(build_config({})));
}

TEST(Config, RoundTripsThroughKeyValues) {
  for (const char* file : {"toy.cfg", "rayleigh.cfg"}) {
    KeyValues kv = load_key_values(std::string(METACOMM_CONFIG_DIR) + "/" + file);
    apply_override(kv, "model.rtn=true");
    const auto c = build_config(kv);
    const auto again = build_config(c.to_key_values());
    EXPECT_EQ(again.to_key_values(), c.to_key_values()) << file;
    EXPECT_TRUE(again.model == c.model);
  }
}

TEST(Config, AdaptationSchedulesPerInit) {
  const auto c = build_config({{"adapt.iterations", "7"}, {"adapt.fixed_schedule", "sgd:0.2"}});
  EXPECT_EQ(c.adapt_config(InitKind::kMeta).iterations, 7u);
  EXPECT_EQ(c.adapt_config(InitKind::kMeta).schedule[0].kind, OptimizerKind::kSgd);
  EXPECT_EQ(c.adapt_config(InitKind::kFixed).schedule[0].lr, 0.2);
  EXPECT_EQ(c.adapt_config(InitKind::kJoint).schedule[0].kind, OptimizerKind::kAdam);
  EXPECT_STREQ(init_name(InitKind::kJoint), "joint");
}

}  // namespace

// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "metacomm/channel.hpp"
#include "metacomm/eval.hpp"
#include "metacomm/maml.hpp"
#include "metacomm/model.hpp"
#include "metacomm/train.hpp"

namespace metacomm {

/// Flat `section.key = value` pairs; `#` starts a comment.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text);
KeyValues load_key_values(const std::filesystem::path& path);
/// Applies one `key=value` override.
void apply_override(KeyValues& kv, std::string_view assignment);

enum class InitKind { kFixed, kJoint, kMeta };
const char* init_name(InitKind kind);

/// Fully resolved experiment description. Every field has a documented key;
/// see README.md for the table.
struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;

  ModelSpec model;
  ChannelClass channel = TwoPhase{};
  SnrConfig snr;

  std::size_t batch_size = 4;
  bool exhaustive = false;

  /// Size K of the meta-training / joint-training channel set.
  std::size_t meta_channels = 2;
  MetaConfig meta;

  std::size_t joint_iterations = 1000;
  std::vector<SchedulePhase> joint_schedule{{OptimizerKind::kAdam, 0.01, 0}};

  std::size_t adapt_iterations = 100;
  std::vector<SchedulePhase> adapt_meta{{OptimizerKind::kSgd, 0.1, 1}, {OptimizerKind::kAdam, 0.001, 0}};
  std::vector<SchedulePhase> adapt_joint{{OptimizerKind::kAdam, 0.001, 0}};
  std::vector<SchedulePhase> adapt_fixed{{OptimizerKind::kAdam, 0.001, 0}};

  std::size_t eval_channels = 20;
  std::size_t eval_messages = 10000;

  GridBounds grid_bounds;
  std::size_t grid_resolution = 201;

  NoiseSpec noise() const { return snr_to_n0(snr); }
  TrainConfig joint_config() const;
  TrainConfig adapt_config(InitKind kind) const;
  /// Resolved key/value view, suitable for manifests and round trips.
  KeyValues to_key_values() const;
};

/// Builds and validates a config. Unknown keys and every invalid field are
/// reported together in one ConfigError, one line per field.
ExperimentConfig build_config(const KeyValues& kv);

/// Cross-field checks that only apply to decision-grid export.
void validate_for_grid(const ExperimentConfig& cfg);

}  // namespace metacomm

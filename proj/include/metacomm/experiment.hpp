// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "metacomm/config.hpp"

namespace metacomm {

// Sub-streams of the master seed. Each subcommand reads only the streams it
// needs, so e.g. eval-curve from a saved checkpoint reproduces the curve that
// `compare` wrote.
//   init           random initialization (the fixed-init baseline)
//   meta-channels  the K training channels (Rayleigh only)
//   meta           meta-training batches
//   joint          joint-training batches
//   curve          adaptation curves: new channels, adaptation and eval noise
//   adapt          single-channel adaptation (adapt, export-grid)
Stream master_stream(const ExperimentConfig& cfg, std::string_view name);

/// The K training channels. For a two-phase class channel c has phase
/// phases[c % phases.size()]; otherwise channels are drawn from the class.
std::vector<ChannelRealization> training_channels(const ExperimentConfig& cfg);

ParamVector initial_params(const ExperimentConfig& cfg);
MetaResult run_meta_training(const ExperimentConfig& cfg, std::size_t threads);
ParamVector run_joint_training(const ExperimentConfig& cfg, std::size_t threads);
BlerCurve run_curve(const ExperimentConfig& cfg, const ParamVector& init, InitKind kind, std::size_t threads);

/// Single-tap channel with the configured amplitude and the given phase.
ChannelRealization phase_channel(const ExperimentConfig& cfg, double phase_deg);
/// Channel `index` of the "adapt" stream's channel draws.
ChannelRealization sampled_channel(const ExperimentConfig& cfg, std::size_t index);

/// Algorithm 1 from `init` on `h` using the adaptation schedule for `kind`.
std::vector<ParamVector> run_adaptation(const ExperimentConfig& cfg, const ParamVector& init, InitKind kind,
                                        const ChannelRealization& h, std::size_t iterations);

std::string sha256_file(const std::filesystem::path& path);

/// Collects the artifacts of one CLI run and writes `<command>.manifest.json`.
class Manifest {
 public:
  Manifest(std::string command, const ExperimentConfig& cfg, std::size_t threads);
  void add(const std::filesystem::path& path, std::string kind);
  void note(const std::string& key, nlohmann::json value);
  std::filesystem::path write(const std::filesystem::path& out_dir) const;

 private:
  nlohmann::json doc_;
};

nlohmann::json config_json(const ExperimentConfig& cfg);

}  // namespace metacomm

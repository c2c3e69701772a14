// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "metacomm/experiment.hpp"

#include <complex>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <openssl/evp.h>

namespace metacomm {

Stream master_stream(const ExperimentConfig& cfg, std::string_view name) { return Stream(cfg.seed).split(name); }

std::vector<ChannelRealization> training_channels(const ExperimentConfig& cfg) {
  std::vector<ChannelRealization> out;
  out.reserve(cfg.meta_channels);
  if (const auto* tp = std::get_if<TwoPhase>(&cfg.channel)) {
    for (std::size_t c = 0; c < cfg.meta_channels; ++c) {
      const double phase = tp->phases[c % tp->phases.size()];
      out.push_back({ComplexVec{std::polar(tp->amplitude, phase)}});
    }
    return out;
  }
  const Stream rng = master_stream(cfg, "meta-channels");
  for (std::size_t c = 0; c < cfg.meta_channels; ++c) {
    Stream draw = rng.split(static_cast<std::uint64_t>(c));
    out.push_back(sample_channel(cfg.channel, draw));
  }
  return out;
}

ParamVector initial_params(const ExperimentConfig& cfg) {
  Stream rng = master_stream(cfg, "init");
  return init_params(cfg.model, rng);
}

MetaResult run_meta_training(const ExperimentConfig& cfg, std::size_t threads) {
  const auto channels = training_channels(cfg);
  return meta_train(initial_params(cfg), cfg.model, channels, cfg.meta, cfg.noise(), master_stream(cfg, "meta"),
                    threads);
}

ParamVector run_joint_training(const ExperimentConfig& cfg, std::size_t threads) {
  const auto channels = training_channels(cfg);
  return joint_train(initial_params(cfg), cfg.model, channels, cfg.joint_config(), cfg.noise(),
                     master_stream(cfg, "joint"), threads);
}

BlerCurve run_curve(const ExperimentConfig& cfg, const ParamVector& init, InitKind kind, std::size_t threads) {
  BlerCurve curve = adaptation_curve(init, cfg.model, cfg.channel, cfg.adapt_config(kind), cfg.eval_channels,
                                     cfg.eval_messages, cfg.noise(), master_stream(cfg, "curve"), threads);
  curve.init_label = init_name(kind);
  return curve;
}

ChannelRealization phase_channel(const ExperimentConfig& cfg, double phase_deg) {
  const auto* tp = std::get_if<TwoPhase>(&cfg.channel);
  const double amplitude = tp ? tp->amplitude : 1.0;
  if (cfg.model.channel_taps != 1) throw ConfigError("a phase-only channel needs a single-tap channel class");
  return {ComplexVec{std::polar(amplitude, phase_deg * std::numbers::pi / 180.0)}};
}

ChannelRealization sampled_channel(const ExperimentConfig& cfg, std::size_t index) {
  Stream draw = master_stream(cfg, "adapt").split("channels").split(static_cast<std::uint64_t>(index));
  return sample_channel(cfg.channel, draw);
}

std::vector<ParamVector> run_adaptation(const ExperimentConfig& cfg, const ParamVector& init, InitKind kind,
                                        const ChannelRealization& h, std::size_t iterations) {
  TrainConfig tc = cfg.adapt_config(kind);
  tc.iterations = iterations;
  return local_train(init, cfg.model, h, tc, cfg.noise(), master_stream(cfg, "adapt").split("train"));
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read '" + path.string() + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 unavailable");
  }
  char buf[1 << 16];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : cfg.to_key_values()) j[k] = v;
  return j;
}

Manifest::Manifest(std::string command, const ExperimentConfig& cfg, std::size_t threads) {
  doc_ = {{"command", std::move(command)},
          {"version", version_string()},
          {"seed", cfg.seed},
          {"threads", threads},
          {"config", config_json(cfg)},
          {"artifacts", nlohmann::json::array()}};
}

void Manifest::add(const std::filesystem::path& path, std::string kind) {
  doc_["artifacts"].push_back(
      {{"path", path.filename().string()}, {"kind", std::move(kind)}, {"sha256", sha256_file(path)}});
}

void Manifest::note(const std::string& key, nlohmann::json value) { doc_[key] = std::move(value); }

std::filesystem::path Manifest::write(const std::filesystem::path& out_dir) const {
  const auto path = out_dir / (doc_["command"].get<std::string>() + ".manifest.json");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os << doc_.dump(2) << '\n';
  return path;
}

}  // namespace metacomm

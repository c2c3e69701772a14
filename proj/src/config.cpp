// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "metacomm/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace metacomm {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

/// Typed access to a KeyValues map that records every problem instead of
/// stopping at the first one.
class Reader {
 public:
  explicit Reader(const KeyValues& kv) : kv_(kv) {}

  template <class T, class Parse>
  T get(const std::string& key, T fallback, Parse&& parse) {
    used_.insert(key);
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      return parse(it->second);
    } catch (const ConfigError& e) {
      fail(key, e.what());
    } catch (const std::exception&) {
      fail(key, "cannot parse '" + it->second + "'");
    }
    return fallback;
  }

  std::size_t count(const std::string& key, std::size_t fallback, std::size_t min = 0) {
    const auto v = get<std::size_t>(key, fallback, [](const std::string& s) {
      if (!s.empty() && s[0] == '-') throw ConfigError("must be a non-negative integer");
      std::size_t pos = 0;
      const auto r = std::stoull(s, &pos);
      if (pos != s.size()) throw ConfigError("must be an integer");
      return static_cast<std::size_t>(r);
    });
    if (v < min) fail(key, "must be >= " + std::to_string(min));
    return v;
  }

  double real(const std::string& key, double fallback) {
    return get<double>(key, fallback, [](const std::string& s) {
      std::size_t pos = 0;
      const double r = std::stod(s, &pos);
      if (pos != s.size() || !std::isfinite(r)) throw ConfigError("must be a finite number");
      return r;
    });
  }

  double positive(const std::string& key, double fallback) {
    const double v = real(key, fallback);
    if (!(v > 0.0)) fail(key, "must be positive");
    return v;
  }

  bool flag(const std::string& key, bool fallback) {
    return get<bool>(key, fallback, [](const std::string& s) {
      if (s == "true" || s == "1" || s == "yes") return true;
      if (s == "false" || s == "0" || s == "no") return false;
      throw ConfigError("must be true or false");
    });
  }

  std::string text(const std::string& key, std::string fallback) {
    return get<std::string>(key, std::move(fallback), [](const std::string& s) { return s; });
  }

  std::string choice(const std::string& key, std::string fallback, std::initializer_list<const char*> allowed) {
    const std::string v = text(key, fallback);
    for (const char* a : allowed) {
      if (v == a) return v;
    }
    std::string msg = "must be one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    fail(key, msg);
    return fallback;
  }

  std::vector<double> reals(const std::string& key, std::vector<double> fallback) {
    return get<std::vector<double>>(key, std::move(fallback), [](const std::string& s) {
      std::vector<double> out;
      for (const auto& item : split_list(s)) out.push_back(std::stod(item));
      if (out.empty()) throw ConfigError("must list at least one value");
      return out;
    });
  }

  std::vector<SchedulePhase> schedule(const std::string& key, std::vector<SchedulePhase> fallback) {
    return get<std::vector<SchedulePhase>>(key, std::move(fallback),
                                           [](const std::string& s) { return parse_schedule(s); });
  }

  void fail(const std::string& key, const std::string& why) { errors_.push_back(key + ": " + why); }

  void finish() {
    for (const auto& [key, value] : kv_) {
      if (!used_.count(key)) errors_.push_back(key + ": unknown key");
    }
    if (errors_.empty()) return;
    std::string msg = "invalid configuration:";
    for (const auto& e : errors_) msg += "\n  " + e;
    throw ConfigError(msg);
  }

 private:
  const KeyValues& kv_;
  std::set<std::string> used_;
  std::vector<std::string> errors_;
};

std::string fmt(double v) { return format_double(v); }

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::istringstream is{std::string(text)};
  std::string line;
  for (int lineno = 1; std::getline(is, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_key_values(ss.str());
}

void apply_override(KeyValues& kv, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("override '" + std::string(assignment) + "' has an empty key");
  kv[key] = trim(assignment.substr(eq + 1));
}

const char* init_name(InitKind kind) {
  switch (kind) {
    case InitKind::kFixed:
      return "fixed";
    case InitKind::kJoint:
      return "joint";
    case InitKind::kMeta:
      return "meta";
  }
  return "?";
}

TrainConfig ExperimentConfig::joint_config() const {
  return {batch_size, joint_iterations, joint_schedule, exhaustive};
}

TrainConfig ExperimentConfig::adapt_config(InitKind kind) const {
  const auto& schedule = kind == InitKind::kMeta ? adapt_meta : kind == InitKind::kJoint ? adapt_joint : adapt_fixed;
  return {batch_size, adapt_iterations, schedule, exhaustive};
}

ExperimentConfig build_config(const KeyValues& kv) {
  Reader r(kv);
  ExperimentConfig c;
  c.name = r.text("experiment.name", c.name);
  c.seed = r.get<std::uint64_t>("seed", c.seed, [](const std::string& s) {
    std::size_t pos = 0;
    const auto v = std::stoull(s, &pos);
    if (pos != s.size() || (!s.empty() && s[0] == '-')) throw ConfigError("must be a non-negative integer");
    return static_cast<std::uint64_t>(v);
  });

  const std::string kind = r.choice("channel.kind", "two_phase", {"two_phase", "rayleigh"});
  if (kind == "two_phase") {
    TwoPhase tp;
    const auto deg = r.reals("channel.phases_deg", {45.0, 135.0});
    tp.phases.clear();
    for (double d : deg) tp.phases.push_back(d * std::numbers::pi / 180.0);
    tp.amplitude = r.positive("channel.amplitude", 1.0);
    c.channel = tp;
  } else {
    c.channel = RayleighBlock{r.count("channel.taps", 3, 1)};
  }

  ModelSpec& m = c.model;
  m.k = static_cast<int>(r.count("model.k", 2, 1));
  if (m.k > 16) r.fail("model.k", "must be <= 16");
  m.n = r.count("model.n", 1, 1);
  m.channel_taps = channel_length(c.channel);
  m.encoder_hidden = r.count("model.encoder_hidden", m.messages(), 1);
  m.decoder_hidden = r.count("model.decoder_hidden", m.messages(), 1);
  m.es = r.positive("model.es", 1.0);
  if (r.flag("model.rtn", false)) {
    RtnSpec rtn;
    rtn.taps = r.count("model.rtn_taps", m.channel_taps, 1);
    rtn.hidden1 = r.count("model.rtn_hidden1", 2, 1);
    rtn.hidden2 = r.count("model.rtn_hidden2", 2, 1);
    m.rtn = rtn;
  } else {
    // still consume the keys so a disabled RTN section is not reported as unknown
    r.count("model.rtn_taps", 1);
    r.count("model.rtn_hidden1", 1);
    r.count("model.rtn_hidden2", 1);
  }

  const std::string mode = r.choice("noise.snr_mode", "esn0", {"esn0", "ebn0"});
  c.snr.mode = mode == "ebn0" ? SnrMode::kEbN0 : SnrMode::kEsN0;
  c.snr.snr_db = r.real("noise.snr_db", 15.0);
  c.snr.es = m.es;
  c.snr.bits_per_symbol = static_cast<double>(m.k) / static_cast<double>(m.n);

  c.batch_size = r.count("train.batch_size", 4, 1);
  c.exhaustive = r.flag("train.exhaustive", false);
  if (c.exhaustive && m.k <= 16 && c.batch_size % m.messages() != 0) {
    r.fail("train.batch_size", "must be a multiple of 2^k = " + std::to_string(m.messages()) +
                                   " when train.exhaustive is true");
  }

  c.meta_channels = r.count("meta.channels", 2, 1);
  c.meta.iterations = r.count("meta.iterations", 1000);
  c.meta.inner_lr = r.positive("meta.inner_lr", 0.1);
  c.meta.outer_lr = r.positive("meta.outer_lr", 0.01);
  c.meta.outer = r.choice("meta.outer_optimizer", "adam", {"adam", "sgd"}) == "sgd" ? OptimizerKind::kSgd
                                                                                   : OptimizerKind::kAdam;
  c.meta.order = r.choice("meta.order", "second", {"second", "first"}) == "first" ? MetaOrder::kFirst
                                                                                  : MetaOrder::kSecond;
  c.meta.channels_per_iteration = r.count("meta.channels_per_iteration", 0);
  c.meta.batch_size = c.batch_size;
  c.meta.exhaustive = c.exhaustive;

  c.joint_iterations = r.count("joint.iterations", 1000);
  c.joint_schedule = r.schedule("joint.schedule", c.joint_schedule);

  c.adapt_iterations = r.count("adapt.iterations", 100);
  c.adapt_meta = r.schedule("adapt.meta_schedule", c.adapt_meta);
  c.adapt_joint = r.schedule("adapt.joint_schedule", c.adapt_joint);
  c.adapt_fixed = r.schedule("adapt.fixed_schedule", c.adapt_fixed);

  c.eval_channels = r.count("eval.new_channels", 20, 1);
  c.eval_messages = r.count("eval.messages", 10000, 1);

  const auto b = r.reals("grid.bounds", {-2.0, 2.0, -2.0, 2.0});
  if (b.size() != 4 || !(b[0] < b[1]) || !(b[2] < b[3])) {
    r.fail("grid.bounds", "must be re_min,re_max,im_min,im_max with min < max");
  } else {
    c.grid_bounds = {b[0], b[1], b[2], b[3]};
  }
  c.grid_resolution = r.count("grid.resolution", 201, 1);

  r.finish();
  m.validate();
  return c;
}

void validate_for_grid(const ExperimentConfig& cfg) {
  if (cfg.model.n != 1 || cfg.model.channel_taps != 1) {
    throw ConfigError("invalid configuration:\n  model.n: decision-grid export needs n = 1 and a single channel tap");
  }
}

KeyValues ExperimentConfig::to_key_values() const {
  KeyValues kv;
  kv["experiment.name"] = name;
  kv["seed"] = std::to_string(seed);
  if (const auto* tp = std::get_if<TwoPhase>(&channel)) {
    kv["channel.kind"] = "two_phase";
    std::string deg;
    for (std::size_t i = 0; i < tp->phases.size(); ++i) {
      if (i) deg += ',';
      deg += fmt(tp->phases[i] * 180.0 / std::numbers::pi);
    }
    kv["channel.phases_deg"] = deg;
    kv["channel.amplitude"] = fmt(tp->amplitude);
  } else {
    kv["channel.kind"] = "rayleigh";
    kv["channel.taps"] = std::to_string(std::get<RayleighBlock>(channel).taps);
  }
  kv["model.k"] = std::to_string(model.k);
  kv["model.n"] = std::to_string(model.n);
  kv["model.encoder_hidden"] = std::to_string(model.encoder_hidden);
  kv["model.decoder_hidden"] = std::to_string(model.decoder_hidden);
  kv["model.es"] = fmt(model.es);
  kv["model.rtn"] = model.rtn ? "true" : "false";
  if (model.rtn) {
    kv["model.rtn_taps"] = std::to_string(model.rtn->taps);
    kv["model.rtn_hidden1"] = std::to_string(model.rtn->hidden1);
    kv["model.rtn_hidden2"] = std::to_string(model.rtn->hidden2);
  }
  kv["noise.snr_mode"] = snr.mode == SnrMode::kEbN0 ? "ebn0" : "esn0";
  kv["noise.snr_db"] = fmt(snr.snr_db);
  kv["train.batch_size"] = std::to_string(batch_size);
  kv["train.exhaustive"] = exhaustive ? "true" : "false";
  kv["meta.channels"] = std::to_string(meta_channels);
  kv["meta.iterations"] = std::to_string(meta.iterations);
  kv["meta.inner_lr"] = fmt(meta.inner_lr);
  kv["meta.outer_lr"] = fmt(meta.outer_lr);
  kv["meta.outer_optimizer"] = meta.outer == OptimizerKind::kSgd ? "sgd" : "adam";
  kv["meta.order"] = meta.order == MetaOrder::kFirst ? "first" : "second";
  kv["meta.channels_per_iteration"] = std::to_string(meta.channels_per_iteration);
  kv["joint.iterations"] = std::to_string(joint_iterations);
  kv["joint.schedule"] = format_schedule(joint_schedule);
  kv["adapt.iterations"] = std::to_string(adapt_iterations);
  kv["adapt.meta_schedule"] = format_schedule(adapt_meta);
  kv["adapt.joint_schedule"] = format_schedule(adapt_joint);
  kv["adapt.fixed_schedule"] = format_schedule(adapt_fixed);
  kv["eval.new_channels"] = std::to_string(eval_channels);
  kv["eval.messages"] = std::to_string(eval_messages);
  kv["grid.bounds"] = fmt(grid_bounds.re_min) + "," + fmt(grid_bounds.re_max) + "," + fmt(grid_bounds.im_min) + "," +
                      fmt(grid_bounds.im_max);
  kv["grid.resolution"] = std::to_string(grid_resolution);
  return kv;
}

}  // namespace metacomm

// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

// metacomm: train, meta-train, adapt and evaluate communication autoencoders.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "metacomm/checkpoint.hpp"
#include "metacomm/experiment.hpp"
#include "metacomm/selftest.hpp"

namespace fs = std::filesystem;
using namespace metacomm;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string out = ".";
};

struct InitOptions {
  std::string checkpoint;
  std::string init;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "Config file (key = value lines)");
  cmd->add_option("--set", c.overrides, "Override one config key, KEY=VALUE (repeatable)");
  cmd->add_option("--seed", c.seed, "Master seed (overrides the config)");
  cmd->add_option("--threads", c.threads, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "Output directory");
}

void add_init(CLI::App* cmd, InitOptions& o) {
  cmd->add_option("--checkpoint", o.checkpoint, "Initialization checkpoint (omit for the random fixed init)");
  cmd->add_option("--init", o.init, "Adaptation schedule to use: fixed, joint or meta (default: meta with a "
                                    "checkpoint, fixed without)")
      ->check(CLI::IsMember({"fixed", "joint", "meta"}));
}

ExperimentConfig resolve(const Common& c) {
  KeyValues kv = c.config_path.empty() ? KeyValues{} : load_key_values(c.config_path);
  for (const auto& o : c.overrides) apply_override(kv, o);
  if (c.seed) kv["seed"] = std::to_string(*c.seed);
  return build_config(kv);
}

fs::path out_dir(const Common& c) {
  fs::path dir(c.out);
  fs::create_directories(dir);
  return dir;
}

InitKind parse_kind(const std::string& s) {
  if (s == "meta") return InitKind::kMeta;
  if (s == "joint") return InitKind::kJoint;
  return InitKind::kFixed;
}

struct LoadedInit {
  ParamVector params;
  InitKind kind;
};

LoadedInit load_init(const ExperimentConfig& cfg, const InitOptions& o) {
  if (o.checkpoint.empty()) {
    if (!o.init.empty() && o.init != "fixed") {
      throw ConfigError("--init " + o.init + " needs --checkpoint");
    }
    return {initial_params(cfg), InitKind::kFixed};
  }
  if (!fs::exists(o.checkpoint)) throw std::runtime_error("checkpoint not found: " + o.checkpoint);
  Checkpoint ck = load_checkpoint(o.checkpoint);
  if (!(ck.spec == cfg.model)) {
    throw ConfigError("checkpoint " + o.checkpoint + " was saved for a different model architecture (" +
                      spec_to_json(ck.spec).dump() + ")");
  }
  return {std::move(ck.params), parse_kind(o.init.empty() ? "meta" : o.init)};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os << text;
  if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void write_curve(const fs::path& dir, const BlerCurve& curve, const ExperimentConfig& cfg, Manifest& manifest) {
  const fs::path csv = dir / ("curve_" + curve.init_label + ".csv");
  std::ostringstream os;
  write_curve_csv(curve, os);
  write_text(csv, os.str());
  manifest.add(csv, "curve");
  auto side = curve_sidecar(curve, config_json(cfg));
  side["seed"] = cfg.seed;
  const fs::path json = dir / ("curve_" + curve.init_label + ".json");
  write_text(json, side.dump(2) + "\n");
  manifest.add(json, "curve-sidecar");
}

void finish(const Manifest& manifest, const fs::path& dir) {
  std::cout << "manifest: " << manifest.write(dir).string() << '\n';
}

void print_curve(const BlerCurve& curve) {
  std::cout << curve.init_label << " init, mean BLER:";
  for (std::size_t p = 0; p < curve.iterations.size() && curve.iterations[p] <= 10; ++p) {
    std::cout << " [" << curve.iterations[p] << "] " << curve.mean[p];
  }
  std::cout << '\n';
}

int cmd_meta_train(const Common& c) {
  const ExperimentConfig cfg = resolve(c);
  const fs::path dir = out_dir(c);
  Manifest manifest("meta-train", cfg, c.threads);
  const MetaResult res = run_meta_training(cfg, c.threads);
  const fs::path ckpt = dir / "meta.ckpt";
  save_checkpoint(ckpt, res.init, cfg.model, master_stream(cfg, "meta").label());
  manifest.add(ckpt, "checkpoint");
  std::ostringstream os;
  os << "iter,meta_loss\n";
  for (std::size_t i = 0; i < res.meta_loss.size(); ++i) os << i << ',' << format_double(res.meta_loss[i]) << '\n';
  const fs::path loss = dir / "meta_loss.csv";
  write_text(loss, os.str());
  manifest.add(loss, "meta-loss");
  if (!res.meta_loss.empty()) {
    std::cout << "meta-loss: first " << format_double(res.meta_loss.front()) << ", last "
              << format_double(res.meta_loss.back()) << '\n';
  }
  finish(manifest, dir);
  return 0;
}

int cmd_joint_train(const Common& c) {
  const ExperimentConfig cfg = resolve(c);
  const fs::path dir = out_dir(c);
  Manifest manifest("joint-train", cfg, c.threads);
  const ParamVector p = run_joint_training(cfg, c.threads);
  const fs::path ckpt = dir / "joint.ckpt";
  save_checkpoint(ckpt, p, cfg.model, master_stream(cfg, "joint").label());
  manifest.add(ckpt, "checkpoint");
  finish(manifest, dir);
  return 0;
}

ChannelRealization pick_channel(const ExperimentConfig& cfg, const std::optional<double>& phase,
                                std::size_t index) {
  return phase ? phase_channel(cfg, *phase) : sampled_channel(cfg, index);
}

int cmd_adapt(const Common& c, const InitOptions& io, const std::optional<double>& phase, std::size_t index,
              std::optional<std::size_t> iterations) {
  const ExperimentConfig cfg = resolve(c);
  const LoadedInit init = load_init(cfg, io);
  const fs::path dir = out_dir(c);
  Manifest manifest("adapt", cfg, c.threads);
  const ChannelRealization h = pick_channel(cfg, phase, index);
  const std::size_t budget = iterations.value_or(cfg.adapt_iterations);
  const auto traj = run_adaptation(cfg, init.params, init.kind, h, budget);

  const Stream eval = master_stream(cfg, "adapt").split("eval");
  std::ostringstream os;
  os << "iter,bler\n";
  for (std::size_t i : log_schedule(budget)) {
    const double bler = measure_bler(traj[i], cfg.model, h, cfg.noise(), cfg.eval_messages, eval.split(i));
    os << i << ',' << format_double(bler) << '\n';
  }
  const fs::path csv = dir / "adapt.csv";
  write_text(csv, os.str());
  manifest.add(csv, "adaptation-bler");
  const fs::path ckpt = dir / "adapted.ckpt";
  save_checkpoint(ckpt, traj.back(), cfg.model, master_stream(cfg, "adapt").label());
  manifest.add(ckpt, "checkpoint");
  nlohmann::json taps = nlohmann::json::array();
  for (std::size_t l = 0; l < h.taps.size(); ++l) taps.push_back({h.taps[l].real(), h.taps[l].imag()});
  manifest.note("channel", taps);
  manifest.note("init", init_name(init.kind));
  std::cout << os.str();
  finish(manifest, dir);
  return 0;
}

int cmd_eval_curve(const Common& c, const InitOptions& io) {
  const ExperimentConfig cfg = resolve(c);
  const LoadedInit init = load_init(cfg, io);
  const fs::path dir = out_dir(c);
  Manifest manifest("eval-curve", cfg, c.threads);
  const BlerCurve curve = run_curve(cfg, init.params, init.kind, c.threads);
  write_curve(dir, curve, cfg, manifest);
  print_curve(curve);
  finish(manifest, dir);
  return 0;
}

int cmd_export_grid(const Common& c, const InitOptions& io, const std::optional<double>& phase, std::size_t index,
                    std::size_t steps, const std::string& name) {
  const ExperimentConfig cfg = resolve(c);
  validate_for_grid(cfg);
  const LoadedInit init = load_init(cfg, io);
  const fs::path dir = out_dir(c);
  Manifest manifest("export-grid", cfg, c.threads);
  ParamVector p = init.params;
  if (steps > 0) {
    const ChannelRealization h = pick_channel(cfg, phase, index);
    p = run_adaptation(cfg, p, init.kind, h, steps).back();
    manifest.note("channel", {h.taps[0].real(), h.taps[0].imag()});
  }
  manifest.note("adapt_steps", steps);
  const DecisionGrid grid = export_decision_grid(p, cfg.model, cfg.grid_bounds, cfg.grid_resolution);
  std::ostringstream os;
  write_grid_csv(grid, os);
  const fs::path csv = dir / (name + ".csv");
  write_text(csv, os.str());
  manifest.add(csv, "decision-grid");
  const auto mpath = manifest.write(dir);
  // Several grids may share a directory; keep one manifest per grid.
  const fs::path renamed = dir / (name + ".manifest.json");
  fs::rename(mpath, renamed);
  std::cout << "manifest: " << renamed.string() << '\n';
  return 0;
}

int cmd_compare(const Common& c) {
  const ExperimentConfig cfg = resolve(c);
  const fs::path dir = out_dir(c);
  Manifest manifest("compare", cfg, c.threads);
  const ParamVector fixed = initial_params(cfg);
  const MetaResult meta = run_meta_training(cfg, c.threads);
  const ParamVector joint = run_joint_training(cfg, c.threads);
  const std::pair<const char*, const ParamVector*> ckpts[] = {{"fixed", &fixed}, {"joint", &joint}, {"meta", &meta.init}};
  for (const auto& [label, params] : ckpts) {
    const fs::path path = dir / (std::string(label) + ".ckpt");
    save_checkpoint(path, *params, cfg.model, master_stream(cfg, label == std::string("fixed") ? "init" : label).label());
    manifest.add(path, "checkpoint");
  }
  for (const auto& [kind, params] : {std::pair{InitKind::kFixed, &fixed}, std::pair{InitKind::kJoint, &joint},
                                     std::pair{InitKind::kMeta, &meta.init}}) {
    const BlerCurve curve = run_curve(cfg, *params, kind, c.threads);
    write_curve(dir, curve, cfg, manifest);
    print_curve(curve);
  }
  finish(manifest, dir);
  return 0;
}

int cmd_selftest() {
  bool ok = true;
  for (const auto& r : run_selftest()) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.error << " (tolerance " << r.tolerance
              << ")\n";
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-learned end-to-end training of communication autoencoders over fading channels."};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  Common common;
  InitOptions init;
  std::optional<double> phase;
  std::size_t channel_index = 0;
  std::optional<std::size_t> iterations;
  std::size_t grid_steps = 0;
  std::string grid_name = "grid";

  auto* meta = app.add_subcommand("meta-train", "Meta-train the initialization and save meta.ckpt");
  add_common(meta, common);
  auto* joint = app.add_subcommand("joint-train", "Train one model on all training channels; save joint.ckpt");
  add_common(joint, common);

  auto* adapt = app.add_subcommand("adapt", "Adapt an initialization to one channel; save adapted.ckpt");
  add_common(adapt, common);
  add_init(adapt, init);
  auto* adapt_phase = adapt->add_option("--phase", phase, "Single-tap channel phase in degrees");
  adapt->add_option("--channel", channel_index, "Index of a channel drawn from the configured class")
      ->excludes(adapt_phase);
  adapt->add_option("--iterations", iterations, "Adaptation iterations (default adapt.iterations)");

  auto* curve = app.add_subcommand("eval-curve", "BLER vs adaptation iterations on new channels");
  add_common(curve, common);
  add_init(curve, init);

  auto* grid = app.add_subcommand("export-grid", "Decision regions and constellation (n = 1)");
  add_common(grid, common);
  add_init(grid, init);
  auto* grid_phase = grid->add_option("--phase", phase, "Adapt to a single-tap channel with this phase (degrees)");
  grid->add_option("--channel", channel_index, "Adapt to this drawn channel index")->excludes(grid_phase);
  grid->add_option("--adapt-steps", grid_steps, "Adaptation iterations before export");
  grid->add_option("--name", grid_name, "Output file stem");

  auto* compare = app.add_subcommand("compare", "Fixed, joint and meta initializations end to end");
  add_common(compare, common);

  auto* selftest = app.add_subcommand("selftest", "Finite-difference and closed-form checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (meta->parsed()) return cmd_meta_train(common);
    if (joint->parsed()) return cmd_joint_train(common);
    if (adapt->parsed()) return cmd_adapt(common, init, phase, channel_index, iterations);
    if (curve->parsed()) return cmd_eval_curve(common, init);
    if (grid->parsed()) return cmd_export_grid(common, init, phase, channel_index, grid_steps, grid_name);
    if (compare->parsed()) return cmd_compare(common);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

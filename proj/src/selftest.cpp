// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "metacomm/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "metacomm/maml.hpp"

namespace metacomm {
namespace {

constexpr double kStep = 1e-5;

struct HalfSquaredNorm {
  template <class T>
  ad::Var operator()(ad::Tape<T>& tape, ad::Var theta) const {
    return tape.scale(tape.dot(theta, theta), 0.5);
  }
};

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + kStep;
    const double up = f(probe);
    probe[i] = x[i] - kStep;
    const double down = f(probe);
    probe[i] = x[i];
    out[i] = (up - down) / (2.0 * kStep);
  }
  return out;
}

ParamVector random_point(const ModelSpec& spec, Stream& rng) {
  ParamVector p = init_params(spec, rng);
  for (double& v : p.values()) v += 0.3 * rng.normal();
  return p;
}

ModelSpec toy(bool rtn) {
  ModelSpec s;
  if (rtn) s.rtn = RtnSpec{};
  return s;
}

NoiseSpec toy_noise() { return snr_to_n0({SnrMode::kEbN0, 15.0, 1.0, 2.0}); }

CheckResult check(std::string name, double error, double tol) { return {std::move(name), error, tol, error < tol}; }

}  // namespace

double max_relative_error(std::span<const double> a, std::span<const double> b) {
  double scale = 0.0;
  for (double v : b) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(b[i]), 1e-3 * scale, 1e-12});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

std::vector<CheckResult> run_selftest(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const Stream root(seed);
  const ChannelRealization h{ComplexVec{std::polar(1.0, 0.25 * 3.141592653589793)}};
  const NoiseSpec noise = toy_noise();

  for (bool rtn : {false, true}) {
    const ModelSpec spec = toy(rtn);
    const std::string arch = rtn ? "rtn" : "vanilla";
    Stream rng = root.split(arch);
    double grad_err = 0.0;
    double hvp_err = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      const ParamVector p = random_point(spec, rng);
      const Batch batch = sample_batch(spec, 4, noise, rng, true);
      const AutoencoderLoss loss{spec, p.layout(), h, batch};
      const auto f = [&](std::span<const double> x) { return ad::evaluate(loss, x); };
      grad_err = std::max(grad_err, max_relative_error(ad::gradient(loss, p.values()).grad,
                                                       central_difference(f, p.values())));

      std::vector<double> v(p.size());
      for (double& x : v) x = rng.normal();
      const auto hv = ad::hvp(loss, p.values(), v).hv;
      const auto directional = [&](std::span<const double> x) {
        const auto g = ad::gradient(loss, x).grad;
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * v[i];
        return s;
      };
      hvp_err = std::max(hvp_err, max_relative_error(hv, central_difference(directional, p.values())));
    }
    out.push_back(check("gradient vs finite differences (" + arch + ")", grad_err, 1e-5));
    out.push_back(check("Hessian-vector product vs finite differences (" + arch + ")", hvp_err, 1e-4));
  }

  {
    const ModelSpec spec = toy(true);
    Stream rng = root.split("meta");
    const ParamVector p = random_point(spec, rng);
    const Batch inner = sample_batch(spec, 4, noise, rng, true);
    const Batch outer = sample_batch(spec, 4, noise, rng, true);
    const double eta = 0.1;
    const auto mg = meta_gradient(p, spec, h, eta, inner, outer, MetaOrder::kSecond);
    const auto composed = [&](std::span<const double> x) {
      const ParamVector theta(spec, std::vector<double>(x.begin(), x.end()));
      return empirical_loss(ParamVector(spec, inner_update(theta, spec, h, eta, inner)), spec, h, outer);
    };
    out.push_back(check("meta-gradient vs finite differences of the composed map",
                        max_relative_error(mg.grad, central_difference(composed, p.values())), 1e-4));
  }

  {
    const std::vector<double> theta{0.7, -1.3, 2.5};
    const double eta = 0.1;
    const auto second = meta_gradient(HalfSquaredNorm{}, HalfSquaredNorm{}, theta, eta, MetaOrder::kSecond);
    const auto first = meta_gradient(HalfSquaredNorm{}, HalfSquaredNorm{}, theta, eta, MetaOrder::kFirst);
    double err2 = 0.0;
    double err1 = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      err2 = std::max(err2, std::abs(second.grad[i] - (1 - eta) * (1 - eta) * theta[i]));
      err1 = std::max(err1, std::abs(first.grad[i] - (1 - eta) * theta[i]));
    }
    out.push_back(check("quadratic meta-gradient equals (1-eta)^2 theta", err2, 1e-12));
    out.push_back(check("quadratic first-order meta-gradient equals (1-eta) theta", err1, 1e-12));
  }

  {
    Stream rng = root.split("power");
    double worst = 0.0;
    for (const ModelSpec& spec : {toy(false), ModelSpec{4, 4, 3, 16, 16, std::nullopt, 2.0}}) {
      for (int trial = 0; trial < 50; ++trial) {
        const ParamVector p = random_point(spec, rng);
        const int m = static_cast<int>(rng.index(spec.messages()));
        const double per_symbol = encode(p, spec, m).energy() / static_cast<double>(spec.n);
        worst = std::max(worst, std::abs(per_symbol - spec.es));
      }
    }
    out.push_back(check("encoder output meets the power constraint", worst, 1e-9));
  }
  return out;
}

}  // namespace metacomm

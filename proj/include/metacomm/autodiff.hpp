// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <concepts>
#include <span>
#include <stdexcept>
#include <vector>

#include "metacomm/dual.hpp"
#include "metacomm/tape.hpp"

namespace metacomm::ad {

/// A loss graph builder is any callable `Var(Tape<T>&, Var params)` that is
/// generic in the scalar type, so the same graph can be replayed on dual
/// numbers for Hessian-vector products.
template <class B>
concept LossBuilder = requires(const B& b, Tape<double>& td, Tape<Dual>& tx, Var v) {
  { b(td, v) } -> std::same_as<Var>;
  { b(tx, v) } -> std::same_as<Var>;
};

/// Forward record of a scalar loss over a bound flat parameter vector.
struct Recording {
  Tape<double> tape;
  Var params;
  Var loss;

  double value() const { return tape.value(loss)[0]; }
};

template <LossBuilder B>
Recording forward(const B& build, std::span<const double> params) {
  Recording rec;
  rec.params = rec.tape.input(std::vector<double>(params.begin(), params.end()), 1, params.size());
  rec.loss = build(rec.tape, rec.params);
  if (rec.tape.shape(rec.loss).size() != 1) throw ShapeError("forward: loss must be a scalar");
  return rec;
}

inline std::vector<double> grad(const Recording& rec) { return rec.tape.gradient(rec.loss, rec.params); }

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

template <LossBuilder B>
double evaluate(const B& build, std::span<const double> params) {
  return forward(build, params).value();
}

template <LossBuilder B>
LossGrad gradient(const B& build, std::span<const double> params) {
  const Recording rec = forward(build, params);
  return {rec.value(), grad(rec)};
}

struct HvpResult {
  double loss = 0.0;
  std::vector<double> grad;
  std::vector<double> hv;  // Hessian of the loss at params, applied to v
};

/// Exact Hessian-vector product by forward-over-reverse differentiation.
template <LossBuilder B>
HvpResult hvp(const B& build, std::span<const double> params, std::span<const double> v) {
  if (v.size() != params.size()) throw ShapeError("hvp: direction length must equal parameter count");
  Tape<Dual> tape;
  std::vector<Dual> seeded(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) seeded[i] = Dual(params[i], v[i]);
  const Var theta = tape.input(std::move(seeded), 1, params.size());
  const Var loss = build(tape, theta);
  if (tape.shape(loss).size() != 1) throw ShapeError("hvp: loss must be a scalar");
  const auto adj = tape.gradient(loss, theta);
  HvpResult out;
  out.loss = tape.value(loss)[0].val;
  out.grad.resize(adj.size());
  out.hv.resize(adj.size());
  for (std::size_t i = 0; i < adj.size(); ++i) {
    out.grad[i] = adj[i].val;
    out.hv[i] = adj[i].tan;
  }
  return out;
}

}  // namespace metacomm::ad

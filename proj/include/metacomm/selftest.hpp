// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace metacomm {

struct CheckResult {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// max_i |a_i - b_i| / max(|b_i|, 1e-3 * max_j |b_j|, 1e-12); b is the reference.
double max_relative_error(std::span<const double> a, std::span<const double> b);

/// Finite-difference and closed-form checks of the differentiation stack on
/// the toy architectures: gradients, Hessian-vector products, meta-gradients
/// and the power constraint.
std::vector<CheckResult> run_selftest(std::uint64_t seed = 7);

}  // namespace metacomm

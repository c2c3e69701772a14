// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace metacomm {

/// Counter-based random stream.
///
/// Output i of a stream is a pure function of (key, i), and children derived
/// with split() get keys that depend only on the parent key and the child's
/// name. Any work item can therefore own its stream independently of the
/// order in which other items run or how many threads execute them.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t seed);

  Stream split(std::string_view name) const;
  Stream split(std::uint64_t index) const;

  result_type operator()();
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller (one variate per two draws).
  double normal();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

  /// Human-readable derivation path, e.g. "seed:7/meta/iter:3".
  const std::string& label() const { return label_; }
  std::uint64_t key() const { return key_; }

 private:
  Stream(std::uint64_t key, std::string label) : key_(key), label_(std::move(label)) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::string label_;
};

}  // namespace metacomm

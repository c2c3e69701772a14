// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "metacomm/rng.hpp"

#include <cmath>
#include <numbers>

namespace metacomm {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Stream::Stream(std::uint64_t seed) : key_(mix(seed + kGolden)), label_("seed:" + std::to_string(seed)) {}

Stream Stream::split(std::string_view name) const {
  return Stream(mix(key_ ^ mix(fnv1a(name))), label_ + "/" + std::string(name));
}

Stream Stream::split(std::uint64_t index) const {
  return Stream(mix(mix(key_ + kGolden) ^ mix(index * kGolden + 0x632be59bd9b4e019ULL)),
                label_ + ":" + std::to_string(index));
}

Stream::result_type Stream::operator()() {
  ++counter_;
  return mix(key_ + counter_ * kGolden);
}

double Stream::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Stream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Stream::index(std::size_t n) {
  if (n <= 1) return 0;
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  // reject the short tail so every residue is equally likely
  const std::uint64_t limit = max() - max() % bound;
  std::uint64_t r;
  do {
    r = (*this)();
  } while (r >= limit);
  return static_cast<std::size_t>(r % bound);
}

}  // namespace metacomm

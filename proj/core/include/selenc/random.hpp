// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace selenc {

// Mixes a root seed with a path of integers (client id, round, purpose tag)
// into an independent stream seed. SplitMix64 finalizer per step.
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path);

// Stream tags used with derive_seed so that streams never collide.
namespace stream {
inline constexpr std::uint64_t keygen = 0x6b6579;
inline constexpr std::uint64_t init = 0x696e6974;
inline constexpr std::uint64_t encrypt = 0x656e63;
inline constexpr std::uint64_t dp_noise = 0x6470;
inline constexpr std::uint64_t data = 0x64617461;
inline constexpr std::uint64_t shares = 0x736861;
inline constexpr std::uint64_t attack = 0x61746b;
inline constexpr std::uint64_t mask = 0x6d61736b;
}  // namespace stream

// Seeded 64-bit generator with platform-independent derived distributions.
// std::uniform_real_distribution is not specified bit-for-bit across standard
// libraries, so real draws are built from raw 64-bit outputs here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  void fill(std::span<std::uint8_t> out);

 private:
  std::mt19937_64 engine_;
};

}  // namespace selenc

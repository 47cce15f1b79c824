// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "selenc/random.hpp"

#include <cstring>

namespace selenc {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = splitmix64(root);
  for (std::uint64_t step : path) state = splitmix64(state ^ splitmix64(step + 0x632be59bd9b4e019ULL));
  return state;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = bound * (UINT64_MAX / bound);
  std::uint64_t x = next();
  while (x >= limit) x = next();
  return x % bound;
}

void Rng::fill(std::span<std::uint8_t> out) {
  std::size_t i = 0;
  while (i < out.size()) {
    std::uint64_t word = next();
    const std::size_t take = std::min<std::size_t>(8, out.size() - i);
    for (std::size_t b = 0; b < take; ++b) out[i + b] = static_cast<std::uint8_t>(word >> (8 * b));
    i += take;
  }
}

}  // namespace selenc

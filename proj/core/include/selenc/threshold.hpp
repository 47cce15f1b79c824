// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

// k-of-n Shamir sharing of arbitrary secrets (the Paillier secret key in
// practice) over GF(2^64 - 59).
//
// The secret is laid out as field elements
//   [byte length, 8-byte big-endian data chunks..., checksum]
// where checksum is the SHA-256 prefix of the secret reduced into the field.
// Each element gets its own random degree-(k-1) polynomial. The checksum lets
// reconstruction notice shares that came from different split calls.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace selenc {

inline constexpr std::uint64_t kShamirPrime = 0xffffffffffffffc5ULL;  // 2^64 - 59

struct ShareConfig {
  unsigned n = 0;
  unsigned k = 0;

  void validate() const;
};

struct KeyShare {
  unsigned index = 0;  // x-coordinate in [1, n]
  std::vector<std::uint64_t> chunks;
  unsigned n = 0;
  unsigned k = 0;
  std::uint64_t set_id = 0;

  bool operator==(const KeyShare&) const = default;
};

std::vector<KeyShare> split_secret(std::span<const std::uint8_t> secret, const ShareConfig& cfg,
                                   std::uint64_t seed);

// Throws Errc::threshold on too few shares, duplicate indices, chunk-count
// mismatch, or a checksum failure.
std::vector<std::uint8_t> reconstruct_secret(std::span<const KeyShare> shares, const ShareConfig& cfg);

// {"index": i, "chunks": ["hex", ...], "n": n, "k": k, "set_id": "hex"}
std::string share_to_json(const KeyShare& share);
KeyShare share_from_json(const std::string& text);

namespace gf {

std::uint64_t add(std::uint64_t a, std::uint64_t b);
std::uint64_t sub(std::uint64_t a, std::uint64_t b);
std::uint64_t mul(std::uint64_t a, std::uint64_t b);
std::uint64_t inv(std::uint64_t a);

struct Point {
  std::uint64_t x;
  std::uint64_t y;
};

// Value at x = 0 of the unique polynomial through the points.
std::uint64_t interpolate_at_zero(std::span<const Point> points);

}  // namespace gf

}  // namespace selenc

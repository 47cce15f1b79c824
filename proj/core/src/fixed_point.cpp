// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixed_point.hpp"

#include <cmath>

#include "selenc/error.hpp"

namespace selenc::fixed {

std::int64_t encode_slot(double v, const KeyConfig& cfg) {
  require(std::isfinite(v), Errc::overflow, "cannot encode a non-finite value");
  const double scaled = std::ldexp(v, static_cast<int>(cfg.frac_bits));
  const std::int64_t bias = std::int64_t{1} << (cfg.value_bits - 1 + cfg.frac_bits);
  const std::int64_t limit = std::int64_t{1} << (cfg.value_bits + cfg.frac_bits);
  // Reject before llround so huge values cannot wrap.
  if (!(std::fabs(scaled) <= static_cast<double>(bias))) {
    fail(Errc::overflow, "value " + std::to_string(v) + " exceeds the " +
                             std::to_string(cfg.value_bits) + "-bit fixed-point range");
  }
  const std::int64_t encoded = std::llround(scaled) + bias;
  if (encoded < 0 || encoded >= limit) {
    fail(Errc::overflow, "value " + std::to_string(v) + " exceeds the " +
                             std::to_string(cfg.value_bits) + "-bit fixed-point range");
  }
  return encoded;
}

mpz_class pack(std::span<const std::int64_t> slots, unsigned slot_width) {
  mpz_class packed = 0;
  for (std::size_t j = slots.size(); j-- > 0;) {
    packed <<= slot_width;
    packed += mpz_class(static_cast<unsigned long>(slots[j]));
  }
  return packed;
}

std::vector<mpz_class> unpack(const mpz_class& packed, std::size_t count, unsigned slot_width) {
  std::vector<mpz_class> slots(count);
  mpz_class rest = packed;
  for (std::size_t j = 0; j < count; ++j) {
    mpz_fdiv_r_2exp(slots[j].get_mpz_t(), rest.get_mpz_t(), slot_width);
    mpz_fdiv_q_2exp(rest.get_mpz_t(), rest.get_mpz_t(), slot_width);
  }
  if (rest != 0) fail(Errc::key_mismatch, "decoded plaintext exceeds the packed slot range");
  return slots;
}

double decode_slot(const mpz_class& slot, const Ciphertext& c, const KeyConfig& cfg) {
  if (c.bias_weight == 0) {
    // Every summand was weighted by zero.
    require(slot == 0, Errc::key_mismatch, "zero-weight slot decoded to a nonzero value");
    return 0.0;
  }
  mpz_class half_range = c.bias_weight;
  mpz_mul_2exp(half_range.get_mpz_t(), half_range.get_mpz_t(), cfg.value_bits - 1 + cfg.frac_bits);
  const mpz_class centered = slot - half_range;
  if (centered >= half_range || centered < -half_range) {
    fail(Errc::key_mismatch, "decoded slot outside the reachable range (wrong key or corrupted block)");
  }
  const double v = centered.get_d();
  return std::ldexp(v, -static_cast<int>(cfg.frac_bits)) / static_cast<double>(c.scale_den);
}

}  // namespace selenc::fixed

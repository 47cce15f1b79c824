// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "selenc/error.hpp"
#include "selenc/he.hpp"

namespace selenc {

std::string_view to_string(BackendId id) noexcept {
  return id == BackendId::paillier ? "paillier" : "mock";
}

BackendId parse_backend(std::string_view name) {
  if (name == "paillier") return BackendId::paillier;
  if (name == "mock") return BackendId::mock;
  fail(Errc::config, "unknown backend '" + std::string(name) + "'");
}

std::size_t KeyConfig::paillier_slots() const {
  return std::min<std::size_t>(pack_batch, (security_bits - 1) / slot_width());
}

void KeyConfig::validate() const {
  require(security_bits == 1024 || security_bits == 2048 || security_bits == 3072, Errc::config,
          "security_bits must be 1024 (tests only), 2048 or 3072; got " +
              std::to_string(security_bits));
  require(pack_batch >= 1, Errc::config, "pack_batch must be >= 1");
  require(value_bits >= 2, Errc::config, "value_bits must be >= 2");
  require(value_bits + frac_bits <= 62, Errc::config, "value_bits + frac_bits must be <= 62");
  require(weight_frac_bits >= 1 && weight_frac_bits <= guard_bits, Errc::config,
          "weight_frac_bits must be in [1, guard_bits]");
  require(guard_bits <= 62, Errc::config, "guard_bits must be <= 62");
  require(slot_width() < security_bits, Errc::config, "slot_width exceeds the plaintext space");
}

std::size_t Ciphertext::block_count() const {
  if (slots_per_block == 0) return 0;
  return (slot_count + slots_per_block - 1) / slots_per_block;
}

bool Ciphertext::operator==(const Ciphertext& o) const {
  if (backend != o.backend || key_id != o.key_id || slot_count != o.slot_count ||
      scale_den != o.scale_den || bias_weight != o.bias_weight || depth != o.depth ||
      slots_per_block != o.slots_per_block || block_bytes != o.block_bytes ||
      blocks.size() != o.blocks.size() || plain.size() != o.plain.size()) {
    return false;
  }
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i] != o.blocks[i]) return false;
  }
  // Bitwise comparison so that -0.0 and NaN payloads round-trip faithfully.
  return std::equal(plain.begin(), plain.end(), o.plain.begin(), [](double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
  });
}

std::uint64_t quantize_weight(double alpha, unsigned weight_frac_bits) {
  require(alpha >= 0.0 && alpha <= 1.0, Errc::config,
          "aggregation weight must lie in [0, 1]; got " + std::to_string(alpha));
  return static_cast<std::uint64_t>(std::llround(std::ldexp(alpha, static_cast<int>(weight_frac_bits))));
}

std::vector<std::uint64_t> quantize_weights(std::span<const double> alphas, unsigned weight_frac_bits) {
  std::vector<std::uint64_t> q(alphas.size());
  std::vector<double> remainder(alphas.size());
  double exact_total = 0.0;
  std::uint64_t floor_total = 0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    require(alphas[i] >= 0.0 && alphas[i] <= 1.0, Errc::config,
            "aggregation weight must lie in [0, 1]; got " + std::to_string(alphas[i]));
    const double scaled = std::ldexp(alphas[i], static_cast<int>(weight_frac_bits));
    q[i] = static_cast<std::uint64_t>(std::floor(scaled));
    remainder[i] = scaled - std::floor(scaled);
    exact_total += scaled;
    floor_total += q[i];
  }
  const auto target = static_cast<std::uint64_t>(std::llround(exact_total));
  std::vector<std::size_t> order(alphas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; floor_total < target && i < order.size(); ++i, ++floor_total) ++q[order[i]];
  return q;
}

Evaluator::Evaluator(KeyConfig cfg) : cfg_(cfg) { cfg_.validate(); }

void Evaluator::check_own(const Ciphertext& c) const {
  require(c.backend == backend(), Errc::backend_mismatch,
          "ciphertext from backend '" + std::string(to_string(c.backend)) + "' used with '" +
              std::string(to_string(backend())) + "'");
  require(c.key_id == key_id(), Errc::key_mismatch, "ciphertext was produced under a different key");
  require(c.slots_per_block == slots_per_block(), Errc::backend_mismatch,
          "ciphertext packing layout differs from this key configuration");
}

Ciphertext Evaluator::add(const Ciphertext& a, const Ciphertext& b) const {
  check_own(a);
  check_own(b);
  require(a.slot_count == b.slot_count, Errc::backend_mismatch, "slot counts differ");
  require(a.scale_den == b.scale_den && a.depth == b.depth, Errc::backend_mismatch,
          "cannot add ciphertexts with different weight scales");
  const std::uint64_t budget = std::uint64_t{1} << cfg_.guard_bits;
  require(a.bias_weight <= budget - std::min(budget, b.bias_weight), Errc::guard_overflow,
          "guard-bit budget of 2^" + std::to_string(cfg_.guard_bits) + " exhausted by addition");
  Ciphertext out = a;
  out.bias_weight = a.bias_weight + b.bias_weight;
  add_payload(out, b);
  return out;
}

Ciphertext Evaluator::scale_impl(const Ciphertext& c, std::uint64_t weight, double alpha) const {
  check_own(c);
  require(c.depth == 0, Errc::depth, "only one plaintext-weight multiplication is supported");
  const std::uint64_t budget = std::uint64_t{1} << cfg_.guard_bits;
  require(weight == 0 || c.bias_weight <= budget / weight, Errc::guard_overflow,
          "weight scaling exceeds the guard-bit budget");
  Ciphertext out = c;
  out.bias_weight = c.bias_weight * weight;
  out.scale_den = std::uint64_t{1} << cfg_.weight_frac_bits;
  out.depth = 1;
  scale_payload(out, weight, alpha);
  return out;
}

Ciphertext Evaluator::scale(const Ciphertext& c, double alpha) const {
  return scale_impl(c, quantize_weight(alpha, cfg_.weight_frac_bits), alpha);
}

Ciphertext Evaluator::scale_fixed(const Ciphertext& c, std::uint64_t weight) const {
  require(weight <= (std::uint64_t{1} << cfg_.weight_frac_bits), Errc::config,
          "fixed-point weight exceeds 1.0");
  return scale_impl(c, weight, std::ldexp(static_cast<double>(weight), -static_cast<int>(cfg_.weight_frac_bits)));
}

Ciphertext Evaluator::weighted_sum(std::span<const Ciphertext> cts, std::span<const double> alphas) const {
  require(!cts.empty(), Errc::protocol, "weighted sum over zero ciphertexts");
  require(cts.size() == alphas.size(), Errc::shape, "ciphertext and weight counts differ");
  const std::vector<std::uint64_t> q = quantize_weights(alphas, cfg_.weight_frac_bits);
  Ciphertext acc = scale_impl(cts[0], q[0], alphas[0]);
  for (std::size_t i = 1; i < cts.size(); ++i) acc = add(acc, scale_impl(cts[i], q[i], alphas[i]));
  return acc;
}

Ciphertext Evaluator::deserialize(std::span<const std::uint8_t> bytes) const {
  Ciphertext c = selenc::deserialize(bytes, cfg_);
  check_own(c);
  return c;
}

std::vector<double> Decryptor::decrypt(const Ciphertext& c) const {
  calls_.fetch_add(1);
  require(c.backend == backend(), Errc::backend_mismatch, "ciphertext backend does not match decryptor");
  require(c.key_id == key_id(), Errc::key_mismatch, "ciphertext key id does not match the secret key");
  return do_decrypt(c);
}

}  // namespace selenc

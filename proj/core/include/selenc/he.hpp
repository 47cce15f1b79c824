// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

// Additively homomorphic encryption over packed fixed-point vectors.
//
// Every real value is encoded as round(v * 2^frac_bits) + B * 2^frac_bits with
// B = 2^(value_bits - 1), which keeps slots nonnegative. Several slots of
// slot_width = value_bits + frac_bits + guard_bits bits are packed into one
// plaintext integer. A ciphertext remembers:
//
//   bias_weight  sum of the integer weights applied to its summands; the slot
//                bias to remove at decryption is bias_weight * B * 2^frac_bits
//   scale_den    1 before plaintext-weight scaling, 2^weight_frac_bits after
//   depth        number of scalings applied (at most one)
//
// bias_weight also bounds the slot magnitude, so it doubles as the guard-bit
// budget: it may never exceed 2^guard_bits.
//
// Public operations (encrypt/add/scale) live on Evaluator, decryption on
// Decryptor. The aggregation server only ever gets an Evaluator.

#pragma once

#include <gmpxx.h>

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "selenc/random.hpp"

namespace selenc {

enum class BackendId : std::uint8_t { paillier = 1, mock = 2 };

std::string_view to_string(BackendId id) noexcept;
BackendId parse_backend(std::string_view name);

struct KeyConfig {
  unsigned security_bits = 2048;
  std::size_t pack_batch = 4096;
  unsigned frac_bits = 40;
  unsigned value_bits = 16;
  unsigned guard_bits = 24;
  unsigned weight_frac_bits = 20;

  unsigned slot_width() const { return value_bits + frac_bits + guard_bits; }
  // Slots per Paillier plaintext: floor((security_bits - 1) / slot_width), capped.
  std::size_t paillier_slots() const;
  bool insecure() const { return security_bits < 2048; }

  void validate() const;
  bool operator==(const KeyConfig&) const = default;
};

struct Ciphertext {
  BackendId backend = BackendId::mock;
  std::uint64_t key_id = 0;
  std::uint32_t slot_count = 0;
  std::uint64_t scale_den = 1;
  std::uint64_t bias_weight = 1;
  std::uint8_t depth = 0;
  std::uint32_t slots_per_block = 0;
  // Paillier: one residue mod n^2 per block, serialized at block_bytes width.
  std::vector<mpz_class> blocks;
  std::uint32_t block_bytes = 0;
  // Mock: the plaintext values themselves.
  std::vector<double> plain;

  std::size_t block_count() const;
  bool operator==(const Ciphertext& other) const;
};

// Wire format (all integers big-endian):
//   "SEFL" | version u8 | backend u8 | slot_count u32 | key_id u64 |
//   scale_den u64 | bias_weight u64 | depth u8 | slots_per_block u32 |
//   block_count u32 | block_count x (length u32 | magnitude bytes)
inline constexpr std::uint8_t kCiphertextVersion = 1;
inline constexpr std::size_t kCiphertextHeaderBytes = 4 + 1 + 1 + 4 + 8 + 8 + 8 + 1 + 4 + 4;

std::vector<std::uint8_t> serialize(const Ciphertext& ct);
Ciphertext deserialize(std::span<const std::uint8_t> bytes, const KeyConfig& cfg);

// Serialized size of a Paillier ciphertext holding slot_count values.
std::size_t paillier_serialized_size(const KeyConfig& cfg, std::size_t slot_count);

// Quantizes weights in [0, 1] to multiples of 2^-weight_frac_bits so that the
// integers sum exactly to round(sum(alpha) * 2^weight_frac_bits) (largest
// remainder, ties to the lower index).
std::vector<std::uint64_t> quantize_weights(std::span<const double> alphas, unsigned weight_frac_bits);
std::uint64_t quantize_weight(double alpha, unsigned weight_frac_bits);

class Evaluator {
 public:
  virtual ~Evaluator() = default;

  virtual BackendId backend() const = 0;
  virtual std::uint64_t key_id() const = 0;
  virtual std::size_t slots_per_block() const = 0;
  const KeyConfig& config() const { return cfg_; }

  virtual Ciphertext encrypt(std::span<const double> values, Rng& rng) const = 0;

  Ciphertext add(const Ciphertext& a, const Ciphertext& b) const;
  Ciphertext scale(const Ciphertext& c, double alpha) const;
  Ciphertext scale_fixed(const Ciphertext& c, std::uint64_t weight) const;

  // sum_i alpha_i * c_i with jointly quantized weights; accumulates left to right.
  Ciphertext weighted_sum(std::span<const Ciphertext> cts, std::span<const double> alphas) const;

  // Bytes this ciphertext costs on the wire. Paillier: serialize(c).size().
  // Mock: plaintext bytes times the configured expansion ratio.
  virtual std::size_t wire_size(const Ciphertext& c) const = 0;

  Ciphertext deserialize(std::span<const std::uint8_t> bytes) const;

 protected:
  explicit Evaluator(KeyConfig cfg);

  void check_own(const Ciphertext& c) const;
  virtual void add_payload(Ciphertext& acc, const Ciphertext& other) const = 0;
  virtual void scale_payload(Ciphertext& c, std::uint64_t weight, double alpha) const = 0;

 private:
  Ciphertext scale_impl(const Ciphertext& c, std::uint64_t weight, double alpha) const;

  KeyConfig cfg_;
};

class Decryptor {
 public:
  virtual ~Decryptor() = default;

  virtual BackendId backend() const = 0;
  virtual std::uint64_t key_id() const = 0;

  std::vector<double> decrypt(const Ciphertext& c) const;

  // Number of decrypt() calls served; used by capability audits in tests.
  std::uint64_t calls() const { return calls_.load(); }

 protected:
  virtual std::vector<double> do_decrypt(const Ciphertext& c) const = 0;

 private:
  mutable std::atomic<std::uint64_t> calls_{0};
};

// ---- Paillier -------------------------------------------------------------

struct PaillierPublicKey {
  mpz_class n;
  mpz_class g;  // n + 1
  mpz_class n_squared;
  unsigned bits = 0;

  std::uint64_t id() const;
};

struct PaillierSecretKey {
  mpz_class p;
  mpz_class q;
};

struct PaillierKeyPair {
  PaillierPublicKey pk;
  PaillierSecretKey sk;
};

// Deterministic under seed. Throws Errc::config for unsupported sizes and
// Errc::numeric when prime generation exhausts its retries.
PaillierKeyPair paillier_keygen(const KeyConfig& cfg, std::uint64_t seed);
PaillierPublicKey make_public_key(const mpz_class& n);
// Rebuilds the public key from the secret primes.
PaillierPublicKey public_key_from_secret(const PaillierSecretKey& sk);

std::shared_ptr<const Evaluator> make_paillier_evaluator(const PaillierPublicKey& pk,
                                                         const KeyConfig& cfg);
std::shared_ptr<const Decryptor> make_paillier_decryptor(const PaillierKeyPair& keys,
                                                         const KeyConfig& cfg);

// Secret key <-> bytes (length-prefixed big-endian p and q) for secret sharing.
std::vector<std::uint8_t> encode_secret_key(const PaillierSecretKey& sk);
PaillierSecretKey decode_secret_key(std::span<const std::uint8_t> bytes);

// Key files: {"n": b64, "g": b64, "bits": ...} and {"p": b64, "q": b64}.
std::string public_key_to_json(const PaillierPublicKey& pk);
PaillierPublicKey public_key_from_json(const std::string& text);
std::string secret_key_to_json(const PaillierSecretKey& sk);
PaillierSecretKey secret_key_from_json(const std::string& text);

// ---- Mock -------------------------------------------------------------------

// Exact plaintext arithmetic with Paillier-identical bookkeeping (range
// checks, guard budget, depth) and modelled ciphertext expansion.
inline constexpr double kDefaultMockExpansion = 16.66;

struct MockBackend {
  std::shared_ptr<const Evaluator> evaluator;
  std::shared_ptr<const Decryptor> decryptor;
};

MockBackend make_mock_backend(const KeyConfig& cfg, double expansion_ratio = kDefaultMockExpansion);

// Plaintext bytes per value as reported on the wire (IEEE-754 double).
inline constexpr std::size_t kPlainValueBytes = 8;

}  // namespace selenc

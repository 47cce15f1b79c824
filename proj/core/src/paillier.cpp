// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

// Paillier with g = n + 1, so Enc(m) = (1 + m n) r^n mod n^2.
// Decryption uses the CRT split over p^2 and q^2.

#include <algorithm>

#include "bigint_bytes.hpp"
#include "fixed_point.hpp"
#include "selenc/digest.hpp"
#include "selenc/error.hpp"
#include "selenc/he.hpp"

namespace selenc {

namespace {

constexpr int kKeygenAttempts = 64;

mpz_class random_below(const mpz_class& bound, Rng& rng) {
  std::vector<std::uint8_t> buf((mpz_sizeinbase(bound.get_mpz_t(), 2) + 7) / 8 + 8);
  rng.fill(buf);
  mpz_class v = detail::from_bytes(buf);
  v %= bound;
  return v;
}

mpz_class random_prime(unsigned bits, Rng& rng) {
  for (int attempt = 0; attempt < kKeygenAttempts; ++attempt) {
    std::vector<std::uint8_t> buf(bits / 8);
    rng.fill(buf);
    mpz_class c = detail::from_bytes(buf);
    mpz_setbit(c.get_mpz_t(), bits - 1);
    mpz_setbit(c.get_mpz_t(), bits - 2);
    mpz_setbit(c.get_mpz_t(), 0);
    mpz_nextprime(c.get_mpz_t(), c.get_mpz_t());
    if (mpz_sizeinbase(c.get_mpz_t(), 2) == bits) return c;
  }
  fail(Errc::numeric, "prime generation failed after bounded retries");
}

// L_x(u) = (u - 1) / x
mpz_class ell(const mpz_class& u, const mpz_class& x) {
  mpz_class r = u - 1;
  mpz_divexact(r.get_mpz_t(), r.get_mpz_t(), x.get_mpz_t());
  return r;
}

mpz_class powm(const mpz_class& base, const mpz_class& exp, const mpz_class& mod) {
  mpz_class r;
  mpz_powm(r.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(), mod.get_mpz_t());
  return r;
}

mpz_class invert(const mpz_class& a, const mpz_class& mod) {
  mpz_class r;
  if (mpz_invert(r.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) == 0) {
    fail(Errc::numeric, "modular inverse does not exist");
  }
  return r;
}

class PaillierEvaluator final : public Evaluator {
 public:
  PaillierEvaluator(PaillierPublicKey pk, const KeyConfig& cfg)
      : Evaluator(cfg), pk_(std::move(pk)), id_(pk_.id()), slots_(cfg.paillier_slots()) {
    require(pk_.bits == cfg.security_bits, Errc::config, "public key size does not match security_bits");
  }

  BackendId backend() const override { return BackendId::paillier; }
  std::uint64_t key_id() const override { return id_; }
  std::size_t slots_per_block() const override { return slots_; }

  Ciphertext encrypt(std::span<const double> values, Rng& rng) const override {
    require(!values.empty(), Errc::shape, "cannot encrypt an empty vector");
    const KeyConfig& cfg = config();
    Ciphertext c;
    c.backend = BackendId::paillier;
    c.key_id = id_;
    c.slot_count = static_cast<std::uint32_t>(values.size());
    c.slots_per_block = static_cast<std::uint32_t>(slots_);
    c.block_bytes = static_cast<std::uint32_t>(2 * pk_.bits / 8);
    std::vector<std::int64_t> slots;
    slots.reserve(slots_);
    for (std::size_t start = 0; start < values.size(); start += slots_) {
      const std::size_t end = std::min(values.size(), start + slots_);
      slots.clear();
      for (std::size_t i = start; i < end; ++i) slots.push_back(fixed::encode_slot(values[i], cfg));
      const mpz_class m = fixed::pack(slots, cfg.slot_width());
      c.blocks.push_back(encrypt_block(m, rng));
    }
    return c;
  }

  std::size_t wire_size(const Ciphertext& c) const override {
    return kCiphertextHeaderBytes + c.blocks.size() * (4 + c.block_bytes);
  }

 protected:
  void add_payload(Ciphertext& acc, const Ciphertext& other) const override {
    for (std::size_t i = 0; i < acc.blocks.size(); ++i) {
      acc.blocks[i] *= other.blocks[i];
      acc.blocks[i] %= pk_.n_squared;
    }
  }

  void scale_payload(Ciphertext& c, std::uint64_t weight, double) const override {
    const mpz_class e(static_cast<unsigned long>(weight));
    for (mpz_class& b : c.blocks) b = powm(b, e, pk_.n_squared);
  }

 private:
  mpz_class encrypt_block(const mpz_class& m, Rng& rng) const {
    mpz_class r;
    do {
      r = random_below(pk_.n, rng);
    } while (r == 0 || gcd(r, pk_.n) != 1);
    mpz_class gm = m * pk_.n + 1;  // g^m for g = n + 1
    gm %= pk_.n_squared;
    mpz_class c = gm * powm(r, pk_.n, pk_.n_squared);
    c %= pk_.n_squared;
    return c;
  }

  PaillierPublicKey pk_;
  std::uint64_t id_;
  std::size_t slots_;
};

class PaillierDecryptor final : public Decryptor {
 public:
  PaillierDecryptor(const PaillierKeyPair& keys, const KeyConfig& cfg)
      : pk_(keys.pk), cfg_(cfg), id_(keys.pk.id()), p_(keys.sk.p), q_(keys.sk.q) {
    cfg_.validate();
    require(p_ * q_ == pk_.n, Errc::key_mismatch, "secret key does not factor the public modulus");
    p2_ = p_ * p_;
    q2_ = q_ * q_;
    hp_ = invert(ell(powm(pk_.g, p_ - 1, p2_), p_), p_);
    hq_ = invert(ell(powm(pk_.g, q_ - 1, q2_), q_), q_);
    q_inv_p_ = invert(q_, p_);
  }

  BackendId backend() const override { return BackendId::paillier; }
  std::uint64_t key_id() const override { return id_; }

 protected:
  std::vector<double> do_decrypt(const Ciphertext& c) const override {
    require(c.block_count() == c.blocks.size(), Errc::format, "ciphertext block count is inconsistent");
    std::vector<double> out;
    out.reserve(c.slot_count);
    for (std::size_t b = 0; b < c.blocks.size(); ++b) {
      const mpz_class& block = c.blocks[b];
      require(block > 0 && block < pk_.n_squared, Errc::format, "ciphertext block out of range");
      const std::size_t count =
          std::min<std::size_t>(c.slots_per_block, c.slot_count - b * c.slots_per_block);
      const mpz_class m = decrypt_block(block);
      for (const mpz_class& slot : fixed::unpack(m, count, cfg_.slot_width())) {
        out.push_back(fixed::decode_slot(slot, c, cfg_));
      }
    }
    return out;
  }

 private:
  mpz_class decrypt_block(const mpz_class& c) const {
    mpz_class mp = ell(powm(c, p_ - 1, p2_), p_) * hp_;
    mp %= p_;
    mpz_class mq = ell(powm(c, q_ - 1, q2_), q_) * hq_;
    mq %= q_;
    mpz_class h = (mp - mq) * q_inv_p_;
    mpz_mod(h.get_mpz_t(), h.get_mpz_t(), p_.get_mpz_t());
    return mq + q_ * h;
  }

  PaillierPublicKey pk_;
  KeyConfig cfg_;
  std::uint64_t id_;
  mpz_class p_, q_, p2_, q2_, hp_, hq_, q_inv_p_;
};

}  // namespace

std::uint64_t PaillierPublicKey::id() const { return digest_prefix64(sha256(detail::to_bytes(n))); }

PaillierPublicKey make_public_key(const mpz_class& n) {
  PaillierPublicKey pk;
  pk.n = n;
  pk.g = n + 1;
  pk.n_squared = n * n;
  pk.bits = static_cast<unsigned>(mpz_sizeinbase(n.get_mpz_t(), 2));
  return pk;
}

PaillierPublicKey public_key_from_secret(const PaillierSecretKey& sk) { return make_public_key(sk.p * sk.q); }

PaillierKeyPair paillier_keygen(const KeyConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, {stream::keygen, cfg.security_bits}));
  const unsigned half = cfg.security_bits / 2;
  for (int attempt = 0; attempt < kKeygenAttempts; ++attempt) {
    mpz_class p = random_prime(half, rng);
    mpz_class q = random_prime(half, rng);
    if (p == q) continue;
    if (p < q) std::swap(p, q);
    const mpz_class n = p * q;
    if (mpz_sizeinbase(n.get_mpz_t(), 2) != cfg.security_bits) continue;
    return PaillierKeyPair{make_public_key(n), PaillierSecretKey{p, q}};
  }
  fail(Errc::numeric, "key generation failed after bounded retries");
}

std::shared_ptr<const Evaluator> make_paillier_evaluator(const PaillierPublicKey& pk, const KeyConfig& cfg) {
  return std::make_shared<PaillierEvaluator>(pk, cfg);
}

std::shared_ptr<const Decryptor> make_paillier_decryptor(const PaillierKeyPair& keys, const KeyConfig& cfg) {
  return std::make_shared<PaillierDecryptor>(keys, cfg);
}

std::vector<std::uint8_t> encode_secret_key(const PaillierSecretKey& sk) {
  std::vector<std::uint8_t> out;
  for (const mpz_class* v : {&sk.p, &sk.q}) {
    const auto bytes = detail::to_bytes(*v);
    detail::put_be(out, bytes.size(), 4);
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  return out;
}

PaillierSecretKey decode_secret_key(std::span<const std::uint8_t> bytes) {
  detail::Reader in(bytes);
  PaillierSecretKey sk;
  for (mpz_class* v : {&sk.p, &sk.q}) {
    const auto len = in.be(4);
    *v = detail::from_bytes(in.take(len));
  }
  require(in.remaining() == 0, Errc::format, "trailing bytes after secret key");
  require(sk.p > 1 && sk.q > 1, Errc::format, "secret key primes are missing");
  return sk;
}

}  // namespace selenc

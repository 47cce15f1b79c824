// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "selenc/error.hpp"
#include "selenc/he.hpp"
#include "support/generators.hpp"

namespace selenc {
namespace {

using testing::uniform_vector;

KeyConfig test_config(unsigned bits = 1024) {
  KeyConfig cfg;
  cfg.security_bits = bits;
  return cfg;
}

const PaillierKeyPair& keys1024() {
  static const PaillierKeyPair k = paillier_keygen(test_config(), 7);
  return k;
}

struct Backends {
  std::shared_ptr<const Evaluator> ev;
  std::shared_ptr<const Decryptor> dec;
};

Backends paillier() {
  return {make_paillier_evaluator(keys1024().pk, test_config()), make_paillier_decryptor(keys1024(), test_config())};
}

Backends mock(double ratio = kDefaultMockExpansion, KeyConfig cfg = test_config()) {
  MockBackend m = make_mock_backend(cfg, ratio);
  return {m.evaluator, m.decryptor};
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return Errc::io;
}

class BothBackends : public ::testing::TestWithParam<BackendId> {
 protected:
  Backends b() const { return GetParam() == BackendId::paillier ? paillier() : mock(); }
};

INSTANTIATE_TEST_SUITE_P(He, BothBackends, ::testing::Values(BackendId::paillier, BackendId::mock),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Keygen, RoundTripAndDeterminism) {
  const Backends p = paillier();
  Rng rng(1);
  EXPECT_EQ(p.dec->decrypt(p.ev->encrypt(std::vector<double>{42.0}, rng)), std::vector<double>{42.0});
  const PaillierKeyPair again = paillier_keygen(test_config(), 7);
  EXPECT_EQ(again.pk.n, keys1024().pk.n);
  EXPECT_NE(paillier_keygen(test_config(), 8).pk.n, keys1024().pk.n);
  EXPECT_EQ(mpz_sizeinbase(keys1024().pk.n.get_mpz_t(), 2), 1024u);
  EXPECT_EQ(keys1024().pk.g, keys1024().pk.n + 1);
  EXPECT_EQ(keys1024().sk.p * keys1024().sk.q, keys1024().pk.n);
}

TEST(Keygen, UnsupportedSizesRejected) {
  EXPECT_EQ(code_of([] { paillier_keygen(test_config(512), 1); }), Errc::config);
  EXPECT_EQ(code_of([] { paillier_keygen(test_config(1500), 1); }), Errc::config);
  EXPECT_TRUE(test_config(1024).insecure());
  EXPECT_FALSE(test_config(2048).insecure());
}

TEST(KeyConfig, SlotsPerCiphertext) {
  EXPECT_EQ(test_config(2048).slot_width(), 80u);
  EXPECT_EQ(test_config(2048).paillier_slots(), 25u);
  EXPECT_EQ(test_config(1024).paillier_slots(), 12u);
  KeyConfig small = test_config(2048);
  small.pack_batch = 4;
  EXPECT_EQ(small.paillier_slots(), 4u);
  small.pack_batch = 0;
  EXPECT_THROW(small.validate(), Error);
}

TEST_P(BothBackends, DyadicValuesAreExact) {
  const Backends be = b();
  Rng rng(2);
  EXPECT_EQ(be.dec->decrypt(be.ev->encrypt(std::vector<double>{0.5, -0.25}, rng)), (std::vector<double>{0.5, -0.25}));
  EXPECT_EQ(be.dec->decrypt(be.ev->encrypt(std::vector<double>{0, 0, 0}, rng)), (std::vector<double>{0, 0, 0}));
}

TEST_P(BothBackends, OverflowAndEmptyRejected) {
  const Backends be = b();
  Rng rng(3);
  EXPECT_EQ(code_of([&] { be.ev->encrypt(std::vector<double>{std::ldexp(1.0, 20)}, rng); }), Errc::overflow);
  EXPECT_EQ(code_of([&] { be.ev->encrypt(std::vector<double>{-40000.0}, rng); }), Errc::overflow);
  EXPECT_EQ(code_of([&] { be.ev->encrypt(std::vector<double>{}, rng); }), Errc::shape);
  EXPECT_EQ(code_of([&] { be.ev->encrypt(std::vector<double>{std::nan("")}, rng); }), Errc::overflow);
}

TEST(Packing, BlockCounts) {
  Rng rng(4);
  const std::vector<double> v(10000, 0.125);
  const Backends m = mock();
  EXPECT_EQ(m.ev->encrypt(v, rng).block_count(), 3u);  // ceil(10000 / 4096)
  const Backends p = paillier();
  const Ciphertext c = p.ev->encrypt(std::vector<double>(100, 0.125), rng);
  EXPECT_EQ(c.block_count(), 9u);  // ceil(100 / 12)
  EXPECT_LE(c.slot_count, c.block_count() * c.slots_per_block);
}

TEST_P(BothBackends, AdditiveHomomorphism) {
  const Backends be = b();
  Rng rng(5);
  const Ciphertext three = be.ev->encrypt(std::vector<double>{3.0}, rng);
  const Ciphertext four = be.ev->encrypt(std::vector<double>{4.0}, rng);
  EXPECT_EQ(be.dec->decrypt(be.ev->add(three, four)), std::vector<double>{7.0});
  const std::vector<double> v = uniform_vector(rng, 30, -100.0, 100.0);
  const Ciphertext sum = be.ev->add(be.ev->encrypt(v, rng), be.ev->encrypt(std::vector<double>(30, 0.0), rng));
  const std::vector<double> got = be.dec->decrypt(sum);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(got[i], v[i], std::ldexp(1.0, -40));
}

TEST(Guard, BudgetExhaustedAfterTwoToTheGuardBitsSummands) {
  const Backends be = mock();
  Rng rng(6);
  const Ciphertext one = be.ev->encrypt(std::vector<double>{1.0}, rng);
  // Doubling 24 times sums 2^24 copies.
  Ciphertext acc = one;
  const std::uint64_t budget = std::uint64_t{1} << 24;
  for (int i = 0; i < 24; ++i) acc = be.ev->add(acc, acc);
  EXPECT_EQ(acc.bias_weight, budget);
  EXPECT_EQ(be.dec->decrypt(acc), std::vector<double>{static_cast<double>(budget)});
  EXPECT_EQ(code_of([&] { be.ev->add(acc, one); }), Errc::guard_overflow);
}

TEST(Guard, OneByOneSummationHitsTheBudget) {
  KeyConfig cfg = test_config();
  cfg.guard_bits = 8;
  cfg.weight_frac_bits = 8;
  const Backends be = mock(kDefaultMockExpansion, cfg);
  Rng rng(6);
  const Ciphertext one = be.ev->encrypt(std::vector<double>{1.0}, rng);
  Ciphertext acc = one;
  for (int i = 1; i < 256; ++i) acc = be.ev->add(acc, one);
  EXPECT_EQ(be.dec->decrypt(acc), std::vector<double>{256.0});
  EXPECT_EQ(code_of([&] { be.ev->add(acc, one); }), Errc::guard_overflow);
}

TEST(Guard, PaillierSumAtFullBudgetDecodes) {
  // Sixteen summands of the extreme values, then scaled to the full budget:
  // the worst-case slot must still decode.
  KeyConfig cfg = test_config();
  cfg.guard_bits = 4;
  cfg.weight_frac_bits = 4;
  const PaillierKeyPair keys = paillier_keygen(cfg, 7);
  const auto ev = make_paillier_evaluator(keys.pk, cfg);
  const auto dec = make_paillier_decryptor(keys, cfg);
  Rng rng(7);
  const double hi = std::ldexp(1.0, 15) - std::ldexp(1.0, -37);
  const Ciphertext c = ev->encrypt(std::vector<double>{hi, -std::ldexp(1.0, 15), 0.0}, rng);
  Ciphertext acc = c;
  for (int i = 1; i < 16; ++i) acc = ev->add(acc, c);
  const std::vector<double> got = dec->decrypt(acc);
  EXPECT_EQ(got[0], 16 * hi);
  EXPECT_EQ(got[1], -16 * std::ldexp(1.0, 15));
  EXPECT_EQ(got[2], 0.0);
  EXPECT_EQ(code_of([&] { ev->add(acc, c); }), Errc::guard_overflow);
}

TEST_P(BothBackends, ScaleAndDepth) {
  const Backends be = b();
  Rng rng(8);
  const Ciphertext two = be.ev->encrypt(std::vector<double>{2.0}, rng);
  EXPECT_NEAR(be.dec->decrypt(be.ev->scale(two, 0.5))[0], 1.0, std::ldexp(1.0, -20));
  EXPECT_NEAR(be.dec->decrypt(be.ev->scale(two, 1.0))[0], 2.0, 2 * std::ldexp(1.0, -20));
  const Ciphertext once = be.ev->scale(two, 0.5);
  EXPECT_EQ(code_of([&] { be.ev->scale(once, 0.5); }), Errc::depth);
  EXPECT_EQ(code_of([&] { be.ev->scale(two, 1.5); }), Errc::config);
  EXPECT_EQ(code_of([&] { be.ev->scale(two, -0.1); }), Errc::config);
  EXPECT_EQ(code_of([&] { be.ev->add(once, two); }), Errc::backend_mismatch);
}

TEST_P(BothBackends, MeanOfThree) {
  const Backends be = b();
  Rng rng(9);
  std::vector<std::vector<double>> vs;
  std::vector<Ciphertext> cts;
  for (int i = 0; i < 3; ++i) {
    vs.push_back(uniform_vector(rng, 20, -1.0, 1.0));
    cts.push_back(be.ev->encrypt(vs.back(), rng));
  }
  Ciphertext acc = be.ev->scale(cts[0], 1.0 / 3);
  for (int i = 1; i < 3; ++i) acc = be.ev->add(acc, be.ev->scale(cts[i], 1.0 / 3));
  const std::vector<double> got = be.dec->decrypt(acc);
  for (std::size_t m = 0; m < 20; ++m) {
    const double mean = (vs[0][m] + vs[1][m] + vs[2][m]) / 3;
    EXPECT_NEAR(got[m], mean, 3 * std::ldexp(1.0, -20) + std::ldexp(1.0, -40));
  }
}

TEST(Decrypt, WrongKeyDetected) {
  const Backends p = paillier();
  const PaillierKeyPair other = paillier_keygen(test_config(), 99);
  const auto other_dec = make_paillier_decryptor(other, test_config());
  Rng rng(10);
  Ciphertext c = p.ev->encrypt(std::vector<double>{1.0, 2.0, 3.0}, rng);
  EXPECT_EQ(code_of([&] { other_dec->decrypt(c); }), Errc::key_mismatch);
  // Relabelled to the other key id, the decode range check still catches it.
  c.key_id = other.pk.id();
  EXPECT_EQ(code_of([&] { other_dec->decrypt(c); }), Errc::key_mismatch);
}

TEST(Combine, MixedBackendsAndConfigsRejected) {
  const Backends p = paillier();
  const Backends m = mock();
  KeyConfig other_cfg = test_config();
  other_cfg.frac_bits = 30;
  const Backends m2 = mock(kDefaultMockExpansion, other_cfg);
  Rng rng(11);
  const Ciphertext cp = p.ev->encrypt(std::vector<double>{1.0}, rng);
  const Ciphertext cm = m.ev->encrypt(std::vector<double>{1.0}, rng);
  const Ciphertext cm2 = m2.ev->encrypt(std::vector<double>{1.0}, rng);
  EXPECT_EQ(code_of([&] { p.ev->add(cp, cm); }), Errc::backend_mismatch);
  EXPECT_EQ(code_of([&] { m.ev->add(cm, cp); }), Errc::backend_mismatch);
  EXPECT_EQ(code_of([&] { m.ev->add(cm, cm2); }), Errc::key_mismatch);
  EXPECT_EQ(code_of([&] { m.dec->decrypt(cp); }), Errc::backend_mismatch);
  const Ciphertext two = m.ev->encrypt(std::vector<double>{1.0, 2.0}, rng);
  EXPECT_EQ(code_of([&] { m.ev->add(cm, two); }), Errc::backend_mismatch);
}

TEST_P(BothBackends, HomomorphismProperty) {
  const Backends be = b();
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    const std::vector<double> u = uniform_vector(rng, n, -1000.0, 1000.0);
    const std::vector<double> v = uniform_vector(rng, n, -1000.0, 1000.0);
    const std::vector<double> got = be.dec->decrypt(be.ev->add(be.ev->encrypt(u, rng), be.ev->encrypt(v, rng)));
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(got[i], u[i] + v[i], 2 * std::ldexp(1.0, -40));
  }
}

TEST_P(BothBackends, WeightedSumProperty) {
  const Backends be = b();
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t clients = 1 + rng.below(16);
    const std::size_t n = 1 + rng.below(30);
    const std::vector<double> w = testing::random_weights(rng, clients);
    std::vector<std::vector<double>> vs;
    std::vector<Ciphertext> cts;
    double max_abs = 0.0;
    for (std::size_t c = 0; c < clients; ++c) {
      vs.push_back(uniform_vector(rng, n, -50.0, 50.0));
      for (double x : vs.back()) max_abs = std::max(max_abs, std::abs(x));
      cts.push_back(be.ev->encrypt(vs.back(), rng));
    }
    const std::vector<double> got = be.dec->decrypt(be.ev->weighted_sum(cts, w));
    const double tol = static_cast<double>(clients) * std::ldexp(1.0, -20) * max_abs + std::ldexp(1.0, -40);
    for (std::size_t i = 0; i < n; ++i) {
      double want = 0.0;
      for (std::size_t c = 0; c < clients; ++c) want += w[c] * vs[c][i];
      EXPECT_NEAR(got[i], want, tol);
    }
  }
}

TEST(Differential, PaillierAgreesWithMock) {
  const Backends p = paillier();
  const Backends m = mock();
  Rng rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<double> a = uniform_vector(rng, 25, -5.0, 5.0);
    const std::vector<double> c = uniform_vector(rng, 25, -5.0, 5.0);
    const std::vector<double> w{0.3, 0.7};
    const std::vector<Ciphertext> pc{p.ev->encrypt(a, rng), p.ev->encrypt(c, rng)};
    const std::vector<Ciphertext> mc{m.ev->encrypt(a, rng), m.ev->encrypt(c, rng)};
    const std::vector<double> gp = p.dec->decrypt(p.ev->weighted_sum(pc, w));
    const std::vector<double> gm = m.dec->decrypt(m.ev->weighted_sum(mc, w));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(gp[i], gm[i], 2 * 5.0 * std::ldexp(1.0, -20));
  }
}

TEST(Mock, ReproducesPlaintextWeightedAverageExactly) {
  const Backends m = mock();
  Rng rng(15);
  const std::vector<double> w = testing::random_weights(rng, 5);
  std::vector<std::vector<double>> vs;
  std::vector<Ciphertext> cts;
  for (int c = 0; c < 5; ++c) {
    vs.push_back(uniform_vector(rng, 17, -3.0, 3.0));
    cts.push_back(m.ev->encrypt(vs.back(), rng));
  }
  const std::vector<double> got = m.dec->decrypt(m.ev->weighted_sum(cts, w));
  for (std::size_t i = 0; i < 17; ++i) {
    double want = 0.0;
    for (int c = 0; c < 5; ++c) want += w[c] * vs[c][i];
    EXPECT_EQ(got[i], want);
  }
}

TEST(Mock, ReportedSizes) {
  Rng rng(16);
  const std::vector<double> megabyte(125000, 0.0);  // 10^6 plaintext bytes
  EXPECT_EQ(mock(16.66).ev->wire_size(mock(16.66).ev->encrypt(megabyte, rng)), 16660000u);
  EXPECT_EQ(mock(1.0).ev->wire_size(mock(1.0).ev->encrypt(megabyte, rng)), 1000000u);
  EXPECT_THROW(make_mock_backend(test_config(), 0.5), Error);
}

TEST_P(BothBackends, SerializationRoundTrip) {
  const Backends be = b();
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Ciphertext c = be.ev->encrypt(uniform_vector(rng, 1 + rng.below(60), -9.0, 9.0), rng);
    if (trial % 2 == 1) c = be.ev->scale(c, rng.uniform());
    const std::vector<std::uint8_t> bytes = serialize(c);
    EXPECT_EQ(deserialize(bytes, test_config()), c);
    EXPECT_EQ(be.ev->deserialize(bytes), c);
  }
}

TEST_P(BothBackends, MalformedBytesRejected) {
  const Backends be = b();
  Rng rng(18);
  const std::vector<std::uint8_t> bytes = serialize(be.ev->encrypt(std::vector<double>{1.0, 2.0}, rng));
  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, kCiphertextHeaderBytes - 1, bytes.size() - 1}) {
    const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
    EXPECT_EQ(code_of([&] { deserialize(truncated, test_config()); }), Errc::format) << cut;
  }
  std::vector<std::uint8_t> bad = bytes;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { deserialize(bad, test_config()); }), Errc::format);
  bad = bytes;
  bad[4] = kCiphertextVersion + 1;
  EXPECT_EQ(code_of([&] { deserialize(bad, test_config()); }), Errc::format);
  bad = bytes;
  bad.push_back(0);
  EXPECT_EQ(code_of([&] { deserialize(bad, test_config()); }), Errc::format);
}

TEST(Serialization, PaillierSizeIsPureFunctionOfConfigAndSlots) {
  const Backends p = paillier();
  Rng rng(19);
  for (std::size_t n : {1u, 11u, 12u, 13u, 100u}) {
    const std::size_t a = serialize(p.ev->encrypt(uniform_vector(rng, n, -1.0, 1.0), rng)).size();
    const std::size_t b = serialize(p.ev->encrypt(std::vector<double>(n, 0.0), rng)).size();
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, paillier_serialized_size(test_config(), n));
    EXPECT_EQ(a, p.ev->wire_size(p.ev->encrypt(std::vector<double>(n, 0.0), rng)));
  }
}

TEST(Serialization, Paillier2048ByteFormula) {
  const KeyConfig cfg = test_config(2048);
  const PaillierKeyPair keys = paillier_keygen(cfg, 3);
  const auto ev = make_paillier_evaluator(keys.pk, cfg);
  Rng rng(20);
  const Ciphertext c = ev->encrypt(std::vector<double>(4096, 0.5), rng);
  const std::size_t blocks = (4096 + 24) / 25;
  EXPECT_EQ(c.block_count(), blocks);
  EXPECT_EQ(serialize(c).size(), kCiphertextHeaderBytes + blocks * (4 + 512));
}

TEST(KeyFiles, JsonRoundTripAndValidation) {
  const PaillierKeyPair& k = keys1024();
  const PaillierPublicKey pk = public_key_from_json(public_key_to_json(k.pk));
  EXPECT_EQ(pk.n, k.pk.n);
  EXPECT_EQ(pk.id(), k.pk.id());
  const PaillierSecretKey sk = secret_key_from_json(secret_key_to_json(k.sk));
  EXPECT_EQ(sk.p, k.sk.p);
  EXPECT_EQ(sk.q, k.sk.q);
  EXPECT_EQ(public_key_from_secret(sk).n, k.pk.n);
  const PaillierSecretKey decoded = decode_secret_key(encode_secret_key(k.sk));
  EXPECT_EQ(decoded.p, k.sk.p);
  EXPECT_EQ(decoded.q, k.sk.q);
  EXPECT_THROW(public_key_from_json("{\"n\": 5}"), Error);
  EXPECT_THROW(secret_key_from_json("not json"), Error);
}

TEST(Quantize, WeightsSumExactlyAndTieToLowerIndex) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> w = testing::random_weights(rng, 1 + rng.below(16));
    const std::vector<std::uint64_t> q = quantize_weights(w, 20);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      total += q[i];
      EXPECT_LE(std::abs(static_cast<double>(q[i]) - std::ldexp(w[i], 20)), 1.0);
    }
    EXPECT_EQ(total, std::uint64_t{1} << 20);
  }
  const std::vector<double> thirds(3, 1.0 / 3);
  const std::vector<std::uint64_t> q = quantize_weights(thirds, 20);
  EXPECT_EQ(q, (std::vector<std::uint64_t>{349526, 349525, 349525}));
}

TEST(Decryptor, CountsCalls) {
  const Backends m = mock();
  Rng rng(22);
  const Ciphertext c = m.ev->encrypt(std::vector<double>{1.0}, rng);
  const std::uint64_t before = m.dec->calls();
  m.dec->decrypt(c);
  m.dec->decrypt(c);
  EXPECT_EQ(m.dec->calls(), before + 2);
}

}  // namespace
}  // namespace selenc

// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "fixed_point.hpp"
#include "selenc/digest.hpp"
#include "selenc/error.hpp"
#include "selenc/he.hpp"

namespace selenc {

namespace {

std::uint64_t mock_key_id(const KeyConfig& cfg) {
  const std::string tag = "mock/" + std::to_string(cfg.pack_batch) + "/" + std::to_string(cfg.frac_bits) +
                          "/" + std::to_string(cfg.value_bits) + "/" + std::to_string(cfg.guard_bits) +
                          "/" + std::to_string(cfg.weight_frac_bits);
  return digest_prefix64(sha256(tag));
}

class MockEvaluator final : public Evaluator {
 public:
  MockEvaluator(const KeyConfig& cfg, double ratio) : Evaluator(cfg), ratio_(ratio), id_(mock_key_id(cfg)) {}

  BackendId backend() const override { return BackendId::mock; }
  std::uint64_t key_id() const override { return id_; }
  std::size_t slots_per_block() const override { return config().pack_batch; }

  Ciphertext encrypt(std::span<const double> values, Rng&) const override {
    require(!values.empty(), Errc::shape, "cannot encrypt an empty vector");
    for (double v : values) fixed::encode_slot(v, config());  // same range contract as Paillier
    Ciphertext c;
    c.backend = BackendId::mock;
    c.key_id = id_;
    c.slot_count = static_cast<std::uint32_t>(values.size());
    c.slots_per_block = static_cast<std::uint32_t>(config().pack_batch);
    c.plain.assign(values.begin(), values.end());
    return c;
  }

  std::size_t wire_size(const Ciphertext& c) const override {
    return static_cast<std::size_t>(std::llround(static_cast<double>(c.slot_count * kPlainValueBytes) * ratio_));
  }

 protected:
  void add_payload(Ciphertext& acc, const Ciphertext& other) const override {
    for (std::size_t i = 0; i < acc.plain.size(); ++i) acc.plain[i] += other.plain[i];
  }

  void scale_payload(Ciphertext& c, std::uint64_t, double alpha) const override {
    for (double& v : c.plain) v *= alpha;
  }

 private:
  double ratio_;
  std::uint64_t id_;
};

class MockDecryptor final : public Decryptor {
 public:
  explicit MockDecryptor(const KeyConfig& cfg) : id_(mock_key_id(cfg)) {}

  BackendId backend() const override { return BackendId::mock; }
  std::uint64_t key_id() const override { return id_; }

 protected:
  std::vector<double> do_decrypt(const Ciphertext& c) const override {
    require(c.plain.size() == c.slot_count, Errc::format, "mock ciphertext payload is inconsistent");
    return c.plain;
  }

 private:
  std::uint64_t id_;
};

}  // namespace

MockBackend make_mock_backend(const KeyConfig& cfg, double expansion_ratio) {
  require(expansion_ratio >= 1.0, Errc::config, "mock expansion ratio must be >= 1");
  return MockBackend{std::make_shared<MockEvaluator>(cfg, expansion_ratio), std::make_shared<MockDecryptor>(cfg)};
}

}  // namespace selenc

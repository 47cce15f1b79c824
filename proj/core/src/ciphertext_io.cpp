// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>

#include "bigint_bytes.hpp"
#include "selenc/error.hpp"
#include "selenc/he.hpp"

namespace selenc {

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'E', 'F', 'L'};

std::size_t slots_in_block(const Ciphertext& c, std::size_t block) {
  return std::min<std::size_t>(c.slots_per_block, c.slot_count - block * c.slots_per_block);
}

}  // namespace

std::size_t paillier_serialized_size(const KeyConfig& cfg, std::size_t slot_count) {
  const std::size_t slots = cfg.paillier_slots();
  const std::size_t blocks = (slot_count + slots - 1) / slots;
  return kCiphertextHeaderBytes + blocks * (4 + 2 * cfg.security_bits / 8);
}

std::vector<std::uint8_t> serialize(const Ciphertext& c) {
  using detail::put_be;
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  detail::put_u8(out, kCiphertextVersion);
  detail::put_u8(out, static_cast<std::uint8_t>(c.backend));
  put_be(out, c.slot_count, 4);
  put_be(out, c.key_id, 8);
  put_be(out, c.scale_den, 8);
  put_be(out, c.bias_weight, 8);
  detail::put_u8(out, c.depth);
  put_be(out, c.slots_per_block, 4);
  const std::size_t blocks = c.block_count();
  put_be(out, blocks, 4);
  for (std::size_t b = 0; b < blocks; ++b) {
    if (c.backend == BackendId::paillier) {
      const auto bytes = detail::to_bytes(c.blocks.at(b), c.block_bytes);
      require(bytes.size() == c.block_bytes, Errc::format, "ciphertext block wider than its modulus");
      put_be(out, bytes.size(), 4);
      out.insert(out.end(), bytes.begin(), bytes.end());
    } else {
      const std::size_t n = slots_in_block(c, b);
      put_be(out, n * kPlainValueBytes, 4);
      for (std::size_t i = 0; i < n; ++i) {
        put_be(out, std::bit_cast<std::uint64_t>(c.plain.at(b * c.slots_per_block + i)), 8);
      }
    }
  }
  return out;
}

Ciphertext deserialize(std::span<const std::uint8_t> bytes, const KeyConfig& cfg) {
  detail::Reader in(bytes);
  const auto magic = in.take(4);
  require(std::memcmp(magic.data(), kMagic, 4) == 0, Errc::format, "bad ciphertext magic");
  const auto version = in.be(1);
  require(version == kCiphertextVersion, Errc::format,
          "unsupported ciphertext version " + std::to_string(version));
  Ciphertext c;
  const auto backend = in.be(1);
  require(backend == 1 || backend == 2, Errc::format, "unknown backend tag");
  c.backend = static_cast<BackendId>(backend);
  c.slot_count = static_cast<std::uint32_t>(in.be(4));
  c.key_id = in.be(8);
  c.scale_den = in.be(8);
  c.bias_weight = in.be(8);
  c.depth = static_cast<std::uint8_t>(in.be(1));
  c.slots_per_block = static_cast<std::uint32_t>(in.be(4));
  const auto blocks = in.be(4);

  require(c.slot_count > 0, Errc::format, "ciphertext holds no slots");
  require(c.depth <= 1, Errc::format, "ciphertext depth exceeds 1");
  require(c.scale_den == (c.depth == 0 ? 1 : std::uint64_t{1} << cfg.weight_frac_bits), Errc::format,
          "weight scale inconsistent with depth");
  const std::size_t expected_slots =
      c.backend == BackendId::paillier ? cfg.paillier_slots() : cfg.pack_batch;
  require(c.slots_per_block == expected_slots, Errc::format, "packing layout does not match key config");
  require(blocks == c.block_count(), Errc::format, "block count inconsistent with slot count");

  for (std::size_t b = 0; b < blocks; ++b) {
    const auto len = in.be(4);
    const auto payload = in.take(len);
    if (c.backend == BackendId::paillier) {
      require(len == 2 * cfg.security_bits / 8, Errc::format, "ciphertext block has wrong width");
      c.block_bytes = static_cast<std::uint32_t>(len);
      c.blocks.push_back(detail::from_bytes(payload));
    } else {
      require(len == slots_in_block(c, b) * kPlainValueBytes, Errc::format, "mock block has wrong width");
      detail::Reader values(payload);
      for (std::size_t i = 0; i < len / kPlainValueBytes; ++i) {
        c.plain.push_back(std::bit_cast<double>(values.be(8)));
      }
    }
  }
  require(in.remaining() == 0, Errc::format, "trailing bytes after ciphertext");
  return c;
}

}  // namespace selenc

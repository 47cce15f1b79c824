// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>

#include "selenc/error.hpp"
#include "selenc/sensitivity.hpp"

namespace selenc {

namespace {

void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_le32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = v << 8 | b[at + static_cast<std::size_t>(i)];
  return v;
}

constexpr std::size_t kHeader = 4 + 1 + 4 + 4;

}  // namespace

std::vector<std::uint8_t> encode_mask(const EncryptionMask& mask) {
  std::vector<std::uint8_t> out{'M', 'A', 'S', 'K', kMaskVersion};
  put_le32(out, static_cast<std::uint32_t>(mask.size()));
  put_le32(out, static_cast<std::uint32_t>(std::llround(mask.ratio() * 1e6)));
  std::vector<std::uint8_t> bits((mask.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.test(i)) bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  out.insert(out.end(), bits.begin(), bits.end());
  return out;
}

EncryptionMask decode_mask(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= kHeader, Errc::format, "mask file truncated");
  require(std::memcmp(bytes.data(), "MASK", 4) == 0, Errc::format, "bad mask magic");
  require(bytes[4] == kMaskVersion, Errc::format, "unsupported mask version");
  const std::uint32_t n = get_le32(bytes, 5);
  const std::uint32_t micro = get_le32(bytes, 9);
  require(micro <= 1000000, Errc::format, "mask ratio out of range");
  require(bytes.size() == kHeader + (n + 7) / 8, Errc::format, "mask bitset length mismatch");
  EncryptionMask mask(n, micro / 1e6);
  for (std::size_t i = 0; i < n; ++i) {
    if (bytes[kHeader + i / 8] >> (i % 8) & 1u) mask.set(i);
  }
  return mask;
}

}  // namespace selenc

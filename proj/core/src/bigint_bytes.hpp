// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <vector>

#include "selenc/error.hpp"

namespace selenc::detail {

// Big-endian magnitude; left-padded with zeros to `width` bytes when nonzero.
inline std::vector<std::uint8_t> to_bytes(const mpz_class& v, std::size_t width = 0) {
  const std::size_t natural = (mpz_sizeinbase(v.get_mpz_t(), 2) + 7) / 8;
  const std::size_t len = std::max(natural, width);
  std::vector<std::uint8_t> out(len, 0);
  if (v != 0) {
    std::size_t written = 0;
    mpz_export(out.data() + (len - natural), &written, 1, 1, 1, 0, v.get_mpz_t());
  }
  return out;
}

inline mpz_class from_bytes(std::span<const std::uint8_t> bytes) {
  mpz_class v;
  if (!bytes.empty()) mpz_import(v.get_mpz_t(), bytes.size(), 1, 1, 1, 0, bytes.data());
  return v;
}

inline void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

inline void put_be(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

// Bounds-checked big-endian reader.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint64_t be(int bytes) {
    need(static_cast<std::size_t>(bytes));
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v = v << 8 | data_[pos_++];
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail(Errc::format, "truncated input");
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace selenc::detail

// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

// Slot encoding and bit packing shared by the Paillier and mock backends.

#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <vector>

#include "selenc/he.hpp"

namespace selenc::fixed {

// round(v * 2^frac) + 2^(value_bits - 1 + frac), range-checked.
std::int64_t encode_slot(double v, const KeyConfig& cfg);

// Packs slots little-end first: slot j occupies bits [j*w, (j+1)*w).
mpz_class pack(std::span<const std::int64_t> slots, unsigned slot_width);
std::vector<mpz_class> unpack(const mpz_class& packed, std::size_t count, unsigned slot_width);

// Removes the accumulated bias and rescales one slot to a real value.
// Throws Errc::key_mismatch when the slot lies outside the reachable range,
// which is what decrypting under the wrong key looks like.
double decode_slot(const mpz_class& slot, const Ciphertext& c, const KeyConfig& cfg);

}  // namespace selenc::fixed

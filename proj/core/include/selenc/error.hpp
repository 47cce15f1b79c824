// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace selenc {

enum class Errc {
  shape,             // dimension or length mismatch
  config,            // invalid configuration value
  overflow,          // value outside the fixed-point encoding range
  guard_overflow,    // too many homomorphic additions for the guard bits
  depth,             // more than one plaintext-weight multiplication
  backend_mismatch,  // ciphertexts from different backends or layouts
  key_mismatch,      // wrong key for this ciphertext
  format,            // malformed serialized data
  threshold,         // secret-sharing failure
  numeric,           // NaN/Inf or failed numeric routine
  protocol,          // protocol-level misuse (mask ids, dropout, ...)
  io,                // filesystem problems
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, Errc code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace selenc

// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "bigint_bytes.hpp"
#include "json.hpp"
#include "selenc/digest.hpp"
#include "selenc/error.hpp"
#include "selenc/he.hpp"

namespace selenc {

namespace {

nlohmann::json parse(const std::string& text, const char* what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format, std::string(what) + ": " + e.what());
  }
}

mpz_class field(const nlohmann::json& j, const char* name) {
  require(j.contains(name) && j[name].is_string(), Errc::format,
          std::string("key file is missing field '") + name + "'");
  return detail::from_bytes(base64_decode(j[name].get<std::string>()));
}

}  // namespace

std::string public_key_to_json(const PaillierPublicKey& pk) {
  nlohmann::json j{{"scheme", "paillier"},
                   {"bits", pk.bits},
                   {"n", base64_encode(detail::to_bytes(pk.n))},
                   {"g", base64_encode(detail::to_bytes(pk.g))}};
  return j.dump(2) + "\n";
}

PaillierPublicKey public_key_from_json(const std::string& text) {
  const auto j = parse(text, "public key");
  PaillierPublicKey pk = make_public_key(field(j, "n"));
  require(field(j, "g") == pk.g, Errc::format, "public key generator must be n + 1");
  return pk;
}

std::string secret_key_to_json(const PaillierSecretKey& sk) {
  nlohmann::json j{{"scheme", "paillier"},
                   {"p", base64_encode(detail::to_bytes(sk.p))},
                   {"q", base64_encode(detail::to_bytes(sk.q))}};
  return j.dump(2) + "\n";
}

PaillierSecretKey secret_key_from_json(const std::string& text) {
  const auto j = parse(text, "secret key");
  return PaillierSecretKey{field(j, "p"), field(j, "q")};
}

}  // namespace selenc

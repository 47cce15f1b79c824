// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "selenc/threshold.hpp"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "selenc/digest.hpp"
#include "selenc/error.hpp"
#include "selenc/random.hpp"

namespace selenc {

__extension__ using u128 = unsigned __int128;

namespace gf {

std::uint64_t add(std::uint64_t a, std::uint64_t b) {
  const std::uint64_t s = a + b;
  // Overflow past 2^64 or landing in [p, 2^64) both need one subtraction.
  return (s < a || s >= kShamirPrime) ? s - kShamirPrime : s;
}

std::uint64_t sub(std::uint64_t a, std::uint64_t b) { return a >= b ? a - b : a + (kShamirPrime - b); }

std::uint64_t mul(std::uint64_t a, std::uint64_t b) {
  return static_cast<std::uint64_t>(static_cast<u128>(a) * b % kShamirPrime);
}

std::uint64_t inv(std::uint64_t a) {
  require(a % kShamirPrime != 0, Errc::threshold, "zero has no inverse");
  std::uint64_t result = 1;
  std::uint64_t base = a % kShamirPrime;
  for (std::uint64_t e = kShamirPrime - 2; e; e >>= 1) {
    if (e & 1) result = mul(result, base);
    base = mul(base, base);
  }
  return result;
}

std::uint64_t interpolate_at_zero(std::span<const Point> points) {
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::uint64_t num = 1;
    std::uint64_t den = 1;
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (i == j) continue;
      num = mul(num, points[j].x);
      den = mul(den, sub(points[j].x, points[i].x));
    }
    acc = add(acc, mul(points[i].y, mul(num, inv(den))));
  }
  return acc;
}

}  // namespace gf

namespace {

std::uint64_t checksum_of(std::span<const std::uint8_t> secret) {
  return digest_prefix64(sha256(secret)) % kShamirPrime;
}

std::vector<std::uint64_t> secret_to_elements(std::span<const std::uint8_t> secret) {
  std::vector<std::uint64_t> out{static_cast<std::uint64_t>(secret.size())};
  for (std::size_t off = 0; off < secret.size(); off += 8) {
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < 8; ++b) {
      v = v << 8 | (off + b < secret.size() ? secret[off + b] : 0);
    }
    require(v < kShamirPrime, Errc::threshold,
            "secret chunk " + std::to_string(off / 8) + " is not below the field prime");
    out.push_back(v);
  }
  out.push_back(checksum_of(secret));
  return out;
}

}  // namespace

void ShareConfig::validate() const {
  require(k >= 1 && k <= n && n <= 64, Errc::config,
          "threshold needs 1 <= k <= n <= 64; got n=" + std::to_string(n) + " k=" + std::to_string(k));
}

std::vector<KeyShare> split_secret(std::span<const std::uint8_t> secret, const ShareConfig& cfg,
                                   std::uint64_t seed) {
  cfg.validate();
  require(!secret.empty(), Errc::threshold, "cannot share an empty secret");
  const std::vector<std::uint64_t> elements = secret_to_elements(secret);
  Rng rng(derive_seed(seed, {stream::shares, cfg.n, cfg.k}));
  const std::uint64_t set_id = rng.next();

  std::vector<KeyShare> shares(cfg.n);
  for (unsigned i = 0; i < cfg.n; ++i) {
    shares[i].index = i + 1;
    shares[i].n = cfg.n;
    shares[i].k = cfg.k;
    shares[i].set_id = set_id;
    shares[i].chunks.reserve(elements.size());
  }
  std::vector<std::uint64_t> coeffs(cfg.k);
  for (std::uint64_t secret_elem : elements) {
    coeffs[0] = secret_elem;
    for (unsigned c = 1; c < cfg.k; ++c) coeffs[c] = rng.below(kShamirPrime);
    for (KeyShare& share : shares) {
      // Horner evaluation at x = index.
      std::uint64_t y = 0;
      for (unsigned c = cfg.k; c-- > 0;) y = gf::add(gf::mul(y, share.index), coeffs[c]);
      share.chunks.push_back(y);
    }
  }
  return shares;
}

std::vector<std::uint8_t> reconstruct_secret(std::span<const KeyShare> shares, const ShareConfig& cfg) {
  cfg.validate();
  require(shares.size() >= cfg.k, Errc::threshold,
          "need at least " + std::to_string(cfg.k) + " shares, got " + std::to_string(shares.size()));
  std::set<unsigned> seen;
  for (const KeyShare& s : shares) {
    require(s.index >= 1 && s.index <= cfg.n, Errc::threshold, "share index out of range");
    require(seen.insert(s.index).second, Errc::threshold, "duplicate share index " + std::to_string(s.index));
    require(s.chunks.size() == shares[0].chunks.size(), Errc::threshold, "shares have different chunk counts");
  }
  const std::size_t n_elems = shares[0].chunks.size();
  require(n_elems >= 2, Errc::threshold, "share carries no secret");

  // Any k shares determine the polynomial; use the first k.
  std::vector<std::uint64_t> elements(n_elems);
  std::vector<gf::Point> pts(cfg.k);
  for (std::size_t e = 0; e < n_elems; ++e) {
    for (unsigned i = 0; i < cfg.k; ++i) pts[i] = {shares[i].index, shares[i].chunks[e]};
    elements[e] = gf::interpolate_at_zero(pts);
  }

  const std::uint64_t len = elements[0];
  require(n_elems == 2 + (len + 7) / 8, Errc::threshold,
          "reconstructed length disagrees with chunk count (shares from different sets?)");
  std::vector<std::uint8_t> secret(len);
  for (std::size_t i = 0; i < len; ++i) {
    secret[i] = static_cast<std::uint8_t>(elements[1 + i / 8] >> (8 * (7 - i % 8)));
  }
  require(checksum_of(secret) == elements.back(), Errc::threshold,
          "reconstruction checksum mismatch (shares from different sets?)");
  return secret;
}

std::string share_to_json(const KeyShare& share) {
  nlohmann::json chunks = nlohmann::json::array();
  for (std::uint64_t c : share.chunks) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(c >> (8 * (7 - i)));
    chunks.push_back(to_hex(b));
  }
  std::uint8_t id[8];
  for (int i = 0; i < 8; ++i) id[i] = static_cast<std::uint8_t>(share.set_id >> (8 * (7 - i)));
  nlohmann::json j{{"index", share.index}, {"chunks", chunks}, {"n", share.n}, {"k", share.k},
                   {"set_id", to_hex(id)}};
  return j.dump(2) + "\n";
}

KeyShare share_from_json(const std::string& text) {
  auto be64 = [](const std::string& hex) {
    const auto bytes = from_hex(hex);
    require(bytes.size() == 8, Errc::format, "share field must be 8 hex bytes");
    std::uint64_t v = 0;
    for (std::uint8_t b : bytes) v = v << 8 | b;
    return v;
  };
  try {
    const auto j = nlohmann::json::parse(text);
    KeyShare s;
    s.index = j.at("index").get<unsigned>();
    s.n = j.at("n").get<unsigned>();
    s.k = j.at("k").get<unsigned>();
    s.set_id = be64(j.at("set_id").get<std::string>());
    for (const auto& c : j.at("chunks")) s.chunks.push_back(be64(c.get<std::string>()));
    return s;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::format, std::string("share file: ") + e.what());
  }
}

}  // namespace selenc

// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

// Parameter sensitivity maps and top-p encryption masks.
//
// The sensitivity of parameter m is the mean, over samples k and target
// coordinates j, of |d/dy_kj (d loss_k / d w_m)|: how strongly that gradient
// coordinate reacts to the label. The mixed partial is a central difference
// in y over the analytic parameter gradient.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "selenc/he.hpp"
#include "selenc/model.hpp"

namespace selenc {

struct SensitivityMap {
  std::vector<double> scores;
  std::size_t dataset_size = 0;
};

struct SensitivityOptions {
  LossKind loss = LossKind::squared_error;
  // Step is rel_step * max(1, |y|).
  double rel_step = 1e-3;
};

SensitivityMap sensitivity(std::span<const double> params, const ModelShape& shape, const Dataset& data,
                           const SensitivityOptions& opts = {});

// Parameter gradient of one sample's loss as a function of that sample's target.
using TargetGradient = std::function<std::vector<double>(std::span<const double> y)>;

// Mean over target coordinates of |(g(y + h e_j) - g(y - h e_j)) / 2h|, with
// h = rel_step * max(1, |y_j|).
std::vector<double> mixed_partial_abs(const TargetGradient& grad, std::span<const double> y,
                                      double rel_step);

class EncryptionMask {
 public:
  EncryptionMask() = default;
  explicit EncryptionMask(std::size_t size, double ratio = 0.0) : bits_(size, false), ratio_(ratio) {}

  static EncryptionMask full(std::size_t size) {
    EncryptionMask m(size, 1.0);
    m.bits_.assign(size, true);
    return m;
  }

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool on = true) { bits_[i] = on; }
  double ratio() const { return ratio_; }
  void set_ratio(double r) { ratio_ = r; }

  std::size_t encrypted_count() const;
  std::vector<std::size_t> encrypted_indices() const;
  std::vector<std::size_t> clear_indices() const;
  bool subset_of(const EncryptionMask& other) const;

  // Content digest of the bits and ratio; names the mask in protocol messages.
  std::uint64_t id() const;

  bool operator==(const EncryptionMask& o) const { return bits_ == o.bits_ && ratio_ == o.ratio_; }

 private:
  std::vector<bool> bits_;
  double ratio_ = 0.0;
};

// Number of parameters a ratio p selects out of n: round-half-up(p * n).
std::size_t selection_count(double p, std::size_t n);

// Top selection_count(p, n) scores; ties go to the lower index.
EncryptionMask select_mask(std::span<const double> scores, double p);

// Mask with exactly `count` uniformly random encrypted indices.
EncryptionMask random_mask(std::size_t size, std::size_t count, Rng& rng);

struct MaskedSplit {
  std::vector<double> masked_values;
  std::vector<std::size_t> masked_indices;
  std::vector<double> clear_values;
  std::vector<std::size_t> clear_indices;
};

MaskedSplit apply_mask(std::span<const double> w, const EncryptionMask& mask);
std::vector<double> merge(const MaskedSplit& split, std::size_t size);

// Base mask plus every parameter of the first and last layers.
EncryptionMask layer_recipe_mask(const ModelShape& shape, const EncryptionMask& base);

// Homomorphic weighted sum of encrypted local maps; never decrypts.
Ciphertext aggregate_maps(std::span<const Ciphertext> maps, std::span<const double> weights,
                          const Evaluator& evaluator);

// Binary mask file: "MASK" | version u8 | N u32 LE | p in micro-units u32 LE |
// ceil(N/8) bytes, bit i at byte i/8, bit position i%8.
inline constexpr std::uint8_t kMaskVersion = 1;
std::vector<std::uint8_t> encode_mask(const EncryptionMask& mask);
EncryptionMask decode_mask(std::span<const std::uint8_t> bytes);

// "index,score" rows with a header line.
std::string sensitivity_csv(const SensitivityMap& map);

}  // namespace selenc

// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "selenc/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "selenc/digest.hpp"
#include "selenc/error.hpp"

namespace selenc {

std::vector<double> mixed_partial_abs(const TargetGradient& grad, std::span<const double> y,
                                      double rel_step) {
  require(rel_step > 0.0, Errc::config, "finite-difference step must be positive");
  std::vector<double> yp(y.begin(), y.end());
  std::vector<double> acc;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double h = rel_step * std::max(1.0, std::fabs(y[j]));
    yp[j] = y[j] + h;
    const std::vector<double> plus = grad(yp);
    yp[j] = y[j] - h;
    const std::vector<double> minus = grad(yp);
    yp[j] = y[j];
    if (acc.empty()) acc.assign(plus.size(), 0.0);
    for (std::size_t m = 0; m < plus.size(); ++m) acc[m] += std::fabs((plus[m] - minus[m]) / (2.0 * h));
  }
  for (double& a : acc) a /= static_cast<double>(y.size());
  return acc;
}

SensitivityMap sensitivity(std::span<const double> params, const ModelShape& shape, const Dataset& data,
                           const SensitivityOptions& opts) {
  require(opts.rel_step > 0.0, Errc::config, "finite-difference step must be positive");
  require(params.size() == shape.total_params(), Errc::shape, "parameter vector does not match model");
  data.validate(shape);
  SensitivityMap map;
  map.dataset_size = data.size();
  map.scores.assign(params.size(), 0.0);
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto& x = data.inputs[k];
    const TargetGradient grad = [&](std::span<const double> y) {
      return sample_loss_and_grad(params, shape, x, y, opts.loss).grad;
    };
    const std::vector<double> s = mixed_partial_abs(grad, data.targets[k], opts.rel_step);
    for (std::size_t m = 0; m < s.size(); ++m) map.scores[m] += s[m];
  }
  for (std::size_t m = 0; m < map.scores.size(); ++m) {
    map.scores[m] /= static_cast<double>(data.size());
    if (!std::isfinite(map.scores[m])) {
      fail(Errc::numeric, "sensitivity is not finite at parameter " + std::to_string(m));
    }
  }
  return map;
}

std::size_t EncryptionMask::encrypted_count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

std::vector<std::size_t> EncryptionMask::encrypted_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> EncryptionMask::clear_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (!bits_[i]) out.push_back(i);
  }
  return out;
}

bool EncryptionMask::subset_of(const EncryptionMask& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (bits_[i] && !other.bits_[i]) return false;
  }
  return true;
}

std::uint64_t EncryptionMask::id() const { return digest_prefix64(sha256(encode_mask(*this))); }

std::size_t selection_count(double p, std::size_t n) {
  require(p >= 0.0 && p <= 1.0, Errc::config, "mask ratio must lie in [0, 1]");
  return std::min(n, static_cast<std::size_t>(std::floor(p * static_cast<double>(n) + 0.5)));
}

EncryptionMask select_mask(std::span<const double> scores, double p) {
  const std::size_t count = selection_count(p, scores.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto by_score = [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count), order.end(), by_score);
  EncryptionMask mask(scores.size(), p);
  for (std::size_t i = 0; i < count; ++i) mask.set(order[i]);
  return mask;
}

EncryptionMask random_mask(std::size_t size, std::size_t count, Rng& rng) {
  require(count <= size, Errc::config, "cannot select more indices than exist");
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.below(size - i)]);
  EncryptionMask mask(size, size == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(size));
  for (std::size_t i = 0; i < count; ++i) mask.set(idx[i]);
  return mask;
}

MaskedSplit apply_mask(std::span<const double> w, const EncryptionMask& mask) {
  require(w.size() == mask.size(), Errc::shape, "mask length does not match the parameter vector");
  MaskedSplit split;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (mask.test(i)) {
      split.masked_values.push_back(w[i]);
      split.masked_indices.push_back(i);
    } else {
      split.clear_values.push_back(w[i]);
      split.clear_indices.push_back(i);
    }
  }
  return split;
}

std::vector<double> merge(const MaskedSplit& split, std::size_t size) {
  require(split.masked_values.size() == split.masked_indices.size() &&
              split.clear_values.size() == split.clear_indices.size(),
          Errc::shape, "split values and indices differ in length");
  require(split.masked_indices.size() + split.clear_indices.size() == size, Errc::shape,
          "split does not cover the parameter vector");
  std::vector<double> w(size, 0.0);
  std::vector<bool> hit(size, false);
  auto place = [&](const std::vector<double>& vals, const std::vector<std::size_t>& idx) {
    for (std::size_t i = 0; i < idx.size(); ++i) {
      require(idx[i] < size && !hit[idx[i]], Errc::shape, "split indices overlap or are out of range");
      hit[idx[i]] = true;
      w[idx[i]] = vals[i];
    }
  };
  place(split.masked_values, split.masked_indices);
  place(split.clear_values, split.clear_indices);
  return w;
}

EncryptionMask layer_recipe_mask(const ModelShape& shape, const EncryptionMask& base) {
  require(base.size() == shape.total_params(), Errc::shape, "mask does not match the model");
  EncryptionMask out = base;
  for (std::size_t layer : {std::size_t{0}, shape.layers().size() - 1}) {
    const auto [off, count] = shape.layer_range(layer);
    for (std::size_t i = off; i < off + count; ++i) out.set(i);
  }
  return out;
}

Ciphertext aggregate_maps(std::span<const Ciphertext> maps, std::span<const double> weights,
                          const Evaluator& evaluator) {
  require(!maps.empty(), Errc::protocol, "no sensitivity maps to aggregate");
  for (const Ciphertext& m : maps) {
    require(m.slot_count == maps[0].slot_count, Errc::shape, "sensitivity maps differ in length");
  }
  double total = 0.0;
  for (double w : weights) {
    require(w >= 0.0, Errc::config, "aggregation weights must be nonnegative");
    total += w;
  }
  require(std::fabs(total - 1.0) <= 1e-9, Errc::config, "aggregation weights must sum to 1");
  return evaluator.weighted_sum(maps, weights);
}

std::string sensitivity_csv(const SensitivityMap& map) {
  std::string out = "index,score\n";
  char buf[64];
  for (std::size_t i = 0; i < map.scores.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, map.scores[i]);
    out += buf;
  }
  return out;
}

}  // namespace selenc

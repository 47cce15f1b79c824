// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

// Pure epsilon-DP accounting for Laplace noise with selective encryption.
//
// A Laplace-noised coordinate with sensitivity df costs df / b; an encrypted
// coordinate costs nothing; releases compose by summation.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "selenc/model.hpp"
#include "selenc/sensitivity.hpp"

namespace selenc {

enum class MaskPolicy { all_noise, random_p, selective_p, full_encryption };

std::string_view to_string(MaskPolicy policy) noexcept;
MaskPolicy parse_policy(std::string_view name);

struct DpConfig {
  double b = 1.0;
  std::vector<double> per_param_delta_f;

  void validate() const;
};

struct BudgetTerm {
  std::size_t index = 0;
  double epsilon = 0.0;
};

struct PrivacyBudget {
  double epsilon = 0.0;
  std::vector<BudgetTerm> terms;
  MaskPolicy policy = MaskPolicy::all_noise;
};

// Inverse-CDF Laplace(0, b) samples: u ~ U(-1/2, 1/2), x = -b sgn(u) ln(1 - 2|u|).
std::vector<double> laplace_noise(double b, std::size_t n, std::uint64_t seed);
double laplace_sample(double b, Rng& rng);

double epsilon_of(double delta_f, double b);
double compose(std::span<const double> epsilons);

// Sum of df_i / b over coordinates the mask leaves in the clear.
PrivacyBudget budget_for_policy(const DpConfig& cfg, const EncryptionMask& mask, MaskPolicy policy);

struct ExpectedBudgets {
  double j_mean = 0.0;
  double random_mean = 0.0;
  double selective_mean = 0.0;
  // Per-trial ratios to J: mean and standard error.
  double random_ratio = 0.0;
  double random_ratio_se = 0.0;
  double selective_ratio = 0.0;
  double selective_ratio_se = 0.0;
  std::size_t trials = 0;
};

// Monte Carlo with df ~ U(0,1)^n: random policy encrypts each coordinate with
// probability p; selective policy encrypts the top selection_count(p, n).
ExpectedBudgets expected_budgets(std::size_t n, double b, double p, std::size_t trials, std::uint64_t seed);

// Per-parameter sensitivity estimate: min(clip, max_k |grad of sample k|).
std::vector<double> estimate_delta_f(std::span<const double> params, const ModelShape& shape,
                                     const Dataset& data, LossKind loss, double clip = 1.0);

// {"policy", "p", "b", "epsilon", "J", "ratio_to_J", "trials", "seed"}
std::string budget_report_json(MaskPolicy policy, double p, double b, double epsilon, double j,
                               std::size_t trials, std::uint64_t seed);

}  // namespace selenc

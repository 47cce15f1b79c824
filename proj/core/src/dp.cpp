// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "selenc/dp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "selenc/error.hpp"
#include "selenc/random.hpp"

namespace selenc {

std::string_view to_string(MaskPolicy policy) noexcept {
  switch (policy) {
    case MaskPolicy::all_noise: return "all_noise";
    case MaskPolicy::random_p: return "random";
    case MaskPolicy::selective_p: return "selective";
    case MaskPolicy::full_encryption: return "full_encryption";
  }
  return "unknown";
}

MaskPolicy parse_policy(std::string_view name) {
  if (name == "all_noise") return MaskPolicy::all_noise;
  if (name == "random" || name == "random_p") return MaskPolicy::random_p;
  if (name == "selective" || name == "selective_p") return MaskPolicy::selective_p;
  if (name == "full_encryption") return MaskPolicy::full_encryption;
  fail(Errc::config, "unknown policy '" + std::string(name) + "'");
}

void DpConfig::validate() const {
  require(b > 0.0 && std::isfinite(b), Errc::config, "Laplace scale b must be positive");
  for (double d : per_param_delta_f) {
    require(std::isfinite(d) && d >= 0.0, Errc::config, "per-parameter sensitivity must be finite and >= 0");
  }
}

double laplace_sample(double b, Rng& rng) {
  require(b > 0.0, Errc::config, "Laplace scale b must be positive");
  double u = 0.0;
  do {
    u = rng.uniform() - 0.5;
  } while (u == -0.5);  // ln(0) otherwise
  const double sign = u < 0.0 ? -1.0 : (u > 0.0 ? 1.0 : 0.0);
  return -b * sign * std::log1p(-2.0 * std::fabs(u));
}

std::vector<double> laplace_noise(double b, std::size_t n, std::uint64_t seed) {
  require(b > 0.0, Errc::config, "Laplace scale b must be positive");
  Rng rng(seed);
  std::vector<double> out(n);
  for (double& x : out) x = laplace_sample(b, rng);
  return out;
}

double epsilon_of(double delta_f, double b) {
  require(b > 0.0, Errc::config, "Laplace scale b must be positive");
  require(delta_f >= 0.0, Errc::config, "sensitivity must be nonnegative");
  return delta_f / b;
}

double compose(std::span<const double> epsilons) {
  double total = 0.0;
  for (double e : epsilons) {
    require(e >= 0.0, Errc::config, "epsilon must be nonnegative");
    total += e;
  }
  return total;
}

PrivacyBudget budget_for_policy(const DpConfig& cfg, const EncryptionMask& mask, MaskPolicy policy) {
  cfg.validate();
  require(mask.size() == cfg.per_param_delta_f.size(), Errc::shape,
          "mask length does not match the sensitivity vector");
  PrivacyBudget budget;
  budget.policy = policy;
  std::vector<double> eps;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask.test(i)) continue;
    const double e = epsilon_of(cfg.per_param_delta_f[i], cfg.b);
    budget.terms.push_back({i, e});
    eps.push_back(e);
  }
  budget.epsilon = compose(eps);
  return budget;
}

ExpectedBudgets expected_budgets(std::size_t n, double b, double p, std::size_t trials, std::uint64_t seed) {
  require(n >= 1, Errc::config, "parameter count must be >= 1");
  require(trials >= 1, Errc::config, "trial count must be >= 1");
  require(b > 0.0, Errc::config, "Laplace scale b must be positive");
  require(p >= 0.0 && p <= 1.0, Errc::config, "mask ratio must lie in [0, 1]");

  std::vector<double> j_s(trials), rnd_s(trials), sel_s(trials), rnd_r(trials), sel_r(trials);
  std::vector<double> df(n);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, {stream::mask, t}));
    for (double& d : df) d = rng.uniform();
    double j = 0.0;
    double rnd = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = df[i] / b;
      j += e;
      if (!(rng.uniform() < p)) rnd += e;
    }
    const EncryptionMask sel_mask = select_mask(df, p);
    double sel = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!sel_mask.test(i)) sel += df[i] / b;
    }
    j_s[t] = j;
    rnd_s[t] = rnd;
    sel_s[t] = sel;
    rnd_r[t] = j > 0.0 ? rnd / j : 0.0;
    sel_r[t] = j > 0.0 ? sel / j : 0.0;
  }
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  auto stderr_of = [&](const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  };
  ExpectedBudgets out;
  out.trials = trials;
  out.j_mean = mean(j_s);
  out.random_mean = mean(rnd_s);
  out.selective_mean = mean(sel_s);
  out.random_ratio = mean(rnd_r);
  out.random_ratio_se = stderr_of(rnd_r);
  out.selective_ratio = mean(sel_r);
  out.selective_ratio_se = stderr_of(sel_r);
  return out;
}

std::vector<double> estimate_delta_f(std::span<const double> params, const ModelShape& shape,
                                     const Dataset& data, LossKind loss, double clip) {
  require(clip > 0.0, Errc::config, "clip bound must be positive");
  data.validate(shape);
  std::vector<double> df(params.size(), 0.0);
  for (std::size_t k = 0; k < data.size(); ++k) {
    const LossGrad g = sample_loss_and_grad(params, shape, data.inputs[k], data.targets[k], loss);
    for (std::size_t m = 0; m < df.size(); ++m) df[m] = std::max(df[m], std::fabs(g.grad[m]));
  }
  for (double& d : df) d = std::min(d, clip);
  return df;
}

std::string budget_report_json(MaskPolicy policy, double p, double b, double epsilon, double j,
                               std::size_t trials, std::uint64_t seed) {
  nlohmann::json out{{"policy", std::string(to_string(policy))},
                     {"p", p},
                     {"b", b},
                     {"epsilon", epsilon},
                     {"J", j},
                     {"ratio_to_J", j > 0.0 ? epsilon / j : 0.0},
                     {"trials", trials},
                     {"seed", seed}};
  return out.dump();
}

}  // namespace selenc

// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

// Gradient-inversion (DLG-style) attack on the plaintext-visible part of a
// single-sample gradient, and the defense curves built from it.
//
// The attacker knows the model and the visible gradient coordinates. It
// searches for an input x and target y whose gradient matches the visible
// coordinates, minimizing sum_{m visible} (grad(x, y)_m - g_m)^2 with Adam on
// central finite differences and a cosine-decayed step. Each restart starts
// from x, y ~ U(-1, 1). As in the usual evaluation of such attacks, the
// reported result is the best-recovered restart (lowest MSE to the truth).

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "selenc/dp.hpp"
#include "selenc/model.hpp"
#include "selenc/sensitivity.hpp"

namespace selenc {

struct AttackConfig {
  std::size_t iters = 300;
  double lr = 0.1;
  std::size_t restarts = 10;
  double fd_step = 1e-4;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::squared_error;

  void validate() const;
};

struct AttackResult {
  double best_mse = 0.0;
  std::size_t best_restart = 0;
  std::vector<double> per_restart_mse;
  std::vector<double> per_restart_match_loss;
  std::vector<double> recovered_input;
  std::vector<double> recovered_target;
  // No gradient coordinate was visible; every candidate matches equally.
  bool unconstrained = false;
};

double mse(std::span<const double> a, std::span<const double> b);

// `hidden` marks encrypted gradient coordinates; the attacker sees the rest.
AttackResult invert(std::span<const double> params, const ModelShape& shape, std::span<const double> observed_grad,
                    const EncryptionMask& hidden, std::span<const double> true_input, const AttackConfig& cfg);

struct CurvePoint {
  double p = 0.0;
  double best_mse = 0.0;           // mean over mask draws
  std::vector<double> draw_mse;    // one entry per mask draw
  std::vector<double> match_loss;  // per draw
  std::size_t hidden_count = 0;
  std::vector<AttackResult> attacks;  // per draw
};

inline constexpr std::size_t kRandomMaskDraws = 5;

// For each p, hide the gradient coordinates chosen by `policy` (selective:
// top-p by `scores`; random: kRandomMaskDraws uniform masks of the same size)
// and attack the gradient of (x, y).
std::vector<CurvePoint> defense_curve(std::span<const double> params, const ModelShape& shape,
                                      std::span<const double> x, std::span<const double> y,
                                      std::span<const double> scores, std::span<const double> p_grid,
                                      MaskPolicy policy, const AttackConfig& cfg);

// Seeded regression task for inversion experiments: an initialised model,
// a client dataset for the sensitivity map, and the samples under attack.
// Feature m is drawn from U(-s_m, s_m) with heterogeneous scales s_m.
struct ToyTask {
  ModelShape shape;
  ParamVector params;
  Dataset client_data;
  std::vector<double> feature_scales;
  std::vector<std::vector<double>> xs;  // attacked inputs
  std::vector<std::vector<double>> ys;
};

struct ToyTaskOptions {
  std::size_t input_dim = 8;
  std::size_t hidden = 0;  // 0 -> linear model
  std::size_t samples = 32;
  std::size_t attack_samples = 1;
  double scale_min = 0.05;
  double scale_max = 1.0;
};

ToyTask make_toy_task(std::uint64_t seed, const ToyTaskOptions& opts = {});

// A random input from the task's feature distribution.
std::vector<double> sample_toy_input(const ToyTask& task, Rng& rng);

// 25th percentile of the MSE between a U(-1,1) guess and random task inputs.
double privacy_threshold(const ToyTask& task, std::size_t samples, std::uint64_t seed, double quantile = 0.25);

// Smallest p on the curve whose MSE exceeds tau; returns 1.0 + 1e-9 when none does.
double defeat_point(std::span<const CurvePoint> curve, double tau);

// "policy,p,seed,restart,iters,match_loss,mse" rows for one curve; restart
// numbers run across mask draws (offset + draw * restarts + r).
std::string attack_csv_rows(std::span<const CurvePoint> curve, MaskPolicy policy, std::uint64_t seed,
                            std::size_t iters, std::size_t restart_offset = 0);

}  // namespace selenc

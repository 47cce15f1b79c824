// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "selenc/attack.hpp"
#include "selenc/error.hpp"

namespace selenc {
namespace {

AttackConfig quick(std::uint64_t seed = 1) {
  AttackConfig c;
  c.iters = 200;
  c.restarts = 4;
  c.seed = seed;
  return c;
}

TEST(Invert, LinearFullVisibilityRecoversTheInput) {
  // g = 2 r [x, 1] with r = w x + b - y, so g_w / g_b = x whenever r != 0.
  const ModelShape s = ModelShape::linear(1);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const std::vector<double> w{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const std::vector<double> x{rng.uniform(-0.9, 0.9)};
    const std::vector<double> y{rng.uniform(-1.0, 1.0)};
    const std::vector<double> g = sample_loss_and_grad(w, s, x, y, LossKind::squared_error).grad;
    ASSERT_GT(std::abs(g[1]), 1e-3);
    const double analytic = g[0] / g[1];
    const AttackResult r = invert(w, s, g, EncryptionMask(2), x, quick(seed));
    EXPECT_LT(r.best_mse, 1e-3) << "seed " << seed;
    EXPECT_LT(std::pow(r.recovered_input[0] - analytic, 2), 1e-3);
    EXPECT_FALSE(r.unconstrained);
  }
}

TEST(Invert, EmptyVisibilityIsUnconstrained) {
  const ModelShape s = ModelShape::linear(4);
  Rng rng(2);
  std::vector<double> w(5), x(4), y{0.3};
  for (double& v : w) v = rng.uniform(-1.0, 1.0);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  const std::vector<double> g = sample_loss_and_grad(w, s, x, y, LossKind::squared_error).grad;
  AttackConfig cfg = quick();
  cfg.restarts = 200;
  const AttackResult r = invert(w, s, g, EncryptionMask::full(5), x, cfg);
  EXPECT_TRUE(r.unconstrained);
  for (double l : r.per_restart_match_loss) EXPECT_EQ(l, 0.0);
  // Each restart is a U(-1,1) guess: E[mse] = mean(x^2) + 1/3.
  double expect = 1.0 / 3.0;
  for (double v : x) expect += v * v / 4.0;
  double mean = 0.0;
  for (double m : r.per_restart_mse) mean += m / 200.0;
  EXPECT_NEAR(mean, expect, 0.06);
}

TEST(Invert, DeterministicUnderSeed) {
  const ToyTask t = make_toy_task(3);
  const std::vector<double> g = sample_loss_and_grad(t.params, t.shape, t.xs[0], t.ys[0], LossKind::squared_error).grad;
  Rng rng(4);
  const EncryptionMask m = random_mask(t.params.size(), 3, rng);
  const AttackResult a = invert(t.params, t.shape, g, m, t.xs[0], quick(9));
  const AttackResult b = invert(t.params, t.shape, g, m, t.xs[0], quick(9));
  EXPECT_EQ(a.per_restart_mse, b.per_restart_mse);
  EXPECT_EQ(a.recovered_input, b.recovered_input);
  EXPECT_EQ(a.recovered_target, b.recovered_target);
  EXPECT_NE(invert(t.params, t.shape, g, m, t.xs[0], quick(10)).per_restart_mse, a.per_restart_mse);
}

TEST(Invert, BestIsTheMinimumOverRestarts) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ToyTask t = make_toy_task(seed);
    const std::vector<double> g =
        sample_loss_and_grad(t.params, t.shape, t.xs[0], t.ys[0], LossKind::squared_error).grad;
    Rng rng(seed);
    const AttackResult r = invert(t.params, t.shape, g, random_mask(t.params.size(), 4, rng), t.xs[0], quick(seed));
    ASSERT_EQ(r.per_restart_mse.size(), 4u);
    EXPECT_EQ(r.best_mse, *std::min_element(r.per_restart_mse.begin(), r.per_restart_mse.end()));
    EXPECT_EQ(r.best_mse, r.per_restart_mse[r.best_restart]);
    EXPECT_EQ(r.best_mse, mse(r.recovered_input, t.xs[0]));
    for (double m : r.per_restart_mse) EXPECT_GE(m, 0.0);
  }
}

TEST(Invert, ErrorsOnBadInput) {
  const ModelShape s = ModelShape::linear(2);
  const std::vector<double> w(3, 0.1), g(3, 0.0), x(2, 0.0);
  EXPECT_THROW(invert(w, s, std::vector<double>(2, 0.0), EncryptionMask(3), x, quick()), Error);
  EXPECT_THROW(invert(w, s, g, EncryptionMask(4), x, quick()), Error);
  EXPECT_THROW(invert(w, s, g, EncryptionMask(3), std::vector<double>(3, 0.0), quick()), Error);
  AttackConfig bad = quick();
  bad.fd_step = 0.0;
  EXPECT_THROW(invert(w, s, g, EncryptionMask(3), x, bad), Error);
  bad = quick();
  bad.restarts = 0;
  EXPECT_THROW(invert(w, s, g, EncryptionMask(3), x, bad), Error);
}

TEST(DefenseCurve, BoundaryPoints) {
  const ToyTask t = make_toy_task(5);
  const std::vector<double> scores = sensitivity(t.params, t.shape, t.client_data).scores;
  const std::vector<double> grid{0.0, 1.0};
  const AttackConfig cfg = quick(5);
  const std::vector<double> g = sample_loss_and_grad(t.params, t.shape, t.xs[0], t.ys[0], cfg.loss).grad;
  const std::vector<CurvePoint> sel = defense_curve(t.params, t.shape, t.xs[0], t.ys[0], scores, grid,
                                                    MaskPolicy::selective_p, cfg);
  ASSERT_EQ(sel.size(), 2u);
  EXPECT_EQ(sel[0].best_mse, invert(t.params, t.shape, g, EncryptionMask(t.params.size()), t.xs[0], cfg).best_mse);
  EXPECT_EQ(sel[1].best_mse, invert(t.params, t.shape, g, EncryptionMask::full(t.params.size()), t.xs[0], cfg).best_mse);
  EXPECT_TRUE(sel[1].attacks[0].unconstrained);
  EXPECT_EQ(sel[1].hidden_count, t.params.size());

  const std::vector<CurvePoint> rnd = defense_curve(t.params, t.shape, t.xs[0], t.ys[0], scores, grid,
                                                    MaskPolicy::random_p, cfg);
  EXPECT_EQ(rnd[0].draw_mse.size(), kRandomMaskDraws);
  double mean = 0.0;
  for (double m : rnd[0].draw_mse) mean += m / kRandomMaskDraws;
  EXPECT_DOUBLE_EQ(rnd[0].best_mse, mean);
  EXPECT_EQ(rnd[1].best_mse, sel[1].best_mse);
  EXPECT_THROW(defense_curve(t.params, t.shape, t.xs[0], t.ys[0], scores, grid, MaskPolicy::all_noise, cfg), Error);
  EXPECT_THROW(defense_curve(t.params, t.shape, t.xs[0], t.ys[0], scores, std::vector<double>{1.5},
                             MaskPolicy::selective_p, cfg),
               Error);
}

TEST(ToyTask, SeededAndWithinLimits) {
  ToyTaskOptions o;
  o.attack_samples = 3;
  const ToyTask a = make_toy_task(11, o);
  const ToyTask b = make_toy_task(11, o);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.xs, b.xs);
  EXPECT_EQ(a.xs.size(), 3u);
  EXPECT_LE(a.shape.total_params(), 64u);
  for (std::size_t m = 0; m < a.feature_scales.size(); ++m) {
    for (const auto& x : a.xs) EXPECT_LE(std::abs(x[m]), a.feature_scales[m]);
  }
  o.input_dim = 17;
  EXPECT_THROW(make_toy_task(1, o), Error);
  o.input_dim = 8;
  o.hidden = 8;
  EXPECT_THROW(make_toy_task(1, o), Error);  // 81 parameters
}

TEST(Threshold, QuantileOfRandomGuessError) {
  const ToyTask t = make_toy_task(12);
  const double q25 = privacy_threshold(t, 1000, 1, 0.25);
  const double q75 = privacy_threshold(t, 1000, 1, 0.75);
  EXPECT_GT(q25, 0.0);
  EXPECT_LT(q25, q75);
  EXPECT_EQ(q25, privacy_threshold(t, 1000, 1, 0.25));
}

TEST(Threshold, DefeatPoint) {
  std::vector<CurvePoint> curve(3);
  curve[0].p = 0.0;
  curve[0].best_mse = 0.01;
  curve[1].p = 0.3;
  curve[1].best_mse = 0.2;
  curve[2].p = 0.6;
  curve[2].best_mse = 0.5;
  EXPECT_EQ(defeat_point(curve, 0.1), 0.3);
  EXPECT_EQ(defeat_point(curve, 0.001), 0.0);
  EXPECT_GT(defeat_point(curve, 1.0), 1.0);
}

TEST(Report, CsvRows) {
  CurvePoint pt;
  pt.p = 0.5;
  AttackResult r;
  r.per_restart_mse = {0.1, 0.2};
  r.per_restart_match_loss = {1.0, 2.0};
  pt.attacks = {r, r};
  const std::string rows = attack_csv_rows(std::vector<CurvePoint>{pt}, MaskPolicy::random_p, 7, 300);
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 4);
  EXPECT_EQ(rows.rfind("random,0.5,7,0,300,1,0.10000000000000001\n", 0), 0u);
  EXPECT_NE(rows.find("random,0.5,7,3,300,2,"), std::string::npos);
}

}  // namespace
}  // namespace selenc

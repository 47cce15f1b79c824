// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "selenc/attack.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "selenc/error.hpp"
#include "selenc/random.hpp"

namespace selenc {

void AttackConfig::validate() const {
  require(iters >= 1, Errc::config, "attack iters must be >= 1");
  require(restarts >= 1, Errc::config, "attack restarts must be >= 1");
  require(fd_step > 0.0, Errc::config, "attack fd_step must be positive");
  require(lr > 0.0, Errc::config, "attack lr must be positive");
}

double mse(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size() && !a.empty(), Errc::shape, "mse needs equal, nonempty vectors");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

namespace {

class MatchLoss {
 public:
  MatchLoss(std::span<const double> params, const ModelShape& shape, std::span<const double> observed,
            std::vector<std::size_t> visible, LossKind loss)
      : params_(params), shape_(shape), observed_(observed), visible_(std::move(visible)), loss_(loss) {}

  // z = [x, y]
  double operator()(std::span<const double> z) const {
    const std::size_t d = shape_.input_dim();
    const LossGrad g = sample_loss_and_grad(params_, shape_, z.first(d), z.subspan(d), loss_);
    double s = 0.0;
    for (std::size_t m : visible_) {
      const double r = g.grad[m] - observed_[m];
      s += r * r;
    }
    return s;
  }

 private:
  std::span<const double> params_;
  const ModelShape& shape_;
  std::span<const double> observed_;
  std::vector<std::size_t> visible_;
  LossKind loss_;
};

}  // namespace

AttackResult invert(std::span<const double> params, const ModelShape& shape, std::span<const double> observed_grad,
                    const EncryptionMask& hidden, std::span<const double> true_input, const AttackConfig& cfg) {
  cfg.validate();
  require(params.size() == shape.total_params(), Errc::shape, "parameter vector does not match model");
  require(observed_grad.size() == params.size(), Errc::shape, "observed gradient does not match model");
  require(hidden.size() == params.size(), Errc::shape, "visibility mask does not match model");
  require(true_input.size() == shape.input_dim(), Errc::shape, "true input does not match model input");

  const std::size_t d = shape.input_dim();
  const std::size_t dim = d + shape.output_dim();
  const MatchLoss match(params, shape, observed_grad, hidden.clear_indices(), cfg.loss);

  AttackResult result;
  result.unconstrained = hidden.encrypted_count() == hidden.size();
  std::vector<double> best_z;

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    Rng rng(derive_seed(cfg.seed, {stream::attack, r}));
    std::vector<double> z(dim);
    for (double& v : z) v = rng.uniform(-1.0, 1.0);

    double loss = match(z);
    if (!result.unconstrained) {
      std::vector<double> m(dim, 0.0), v(dim, 0.0), grad(dim), probe(z);
      double b1t = 1.0, b2t = 1.0;
      for (std::size_t it = 0; it < cfg.iters; ++it) {
        probe = z;
        for (std::size_t i = 0; i < dim; ++i) {
          probe[i] = z[i] + cfg.fd_step;
          const double up = match(probe);
          probe[i] = z[i] - cfg.fd_step;
          const double down = match(probe);
          probe[i] = z[i];
          grad[i] = (up - down) / (2.0 * cfg.fd_step);
        }
        b1t *= kBeta1;
        b2t *= kBeta2;
        const double step =
            cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(it) / static_cast<double>(cfg.iters)));
        for (std::size_t i = 0; i < dim; ++i) {
          m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
          v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
          z[i] -= step * (m[i] / (1.0 - b1t)) / (std::sqrt(v[i] / (1.0 - b2t)) + kEps);
        }
      }
      loss = match(z);
    }
    require(std::isfinite(loss), Errc::numeric, "attack match loss is not finite");

    const std::span<const double> x_hat(z.data(), d);
    result.per_restart_match_loss.push_back(loss);
    result.per_restart_mse.push_back(mse(x_hat, true_input));
    if (r == 0 || result.per_restart_mse.back() < result.per_restart_mse[result.best_restart]) {
      best_z = z;
      result.best_restart = r;
    }
  }
  result.best_mse = result.per_restart_mse[result.best_restart];
  result.recovered_input.assign(best_z.begin(), best_z.begin() + static_cast<std::ptrdiff_t>(d));
  result.recovered_target.assign(best_z.begin() + static_cast<std::ptrdiff_t>(d), best_z.end());
  return result;
}

std::vector<CurvePoint> defense_curve(std::span<const double> params, const ModelShape& shape,
                                      std::span<const double> x, std::span<const double> y,
                                      std::span<const double> scores, std::span<const double> p_grid,
                                      MaskPolicy policy, const AttackConfig& cfg) {
  require(policy == MaskPolicy::selective_p || policy == MaskPolicy::random_p, Errc::config,
          "defense curves support the selective and random policies");
  require(scores.size() == params.size(), Errc::shape, "sensitivity map does not match model");
  const std::vector<double> observed = sample_loss_and_grad(params, shape, x, y, cfg.loss).grad;

  std::vector<CurvePoint> curve;
  for (std::size_t pi = 0; pi < p_grid.size(); ++pi) {
    const double p = p_grid[pi];
    require(p >= 0.0 && p <= 1.0, Errc::config, "p grid values must lie in [0, 1]");
    std::vector<EncryptionMask> masks;
    if (policy == MaskPolicy::selective_p) {
      masks.push_back(select_mask(scores, p));
    } else {
      const std::size_t count = selection_count(p, params.size());
      for (std::size_t draw = 0; draw < kRandomMaskDraws; ++draw) {
        Rng rng(derive_seed(cfg.seed, {stream::mask, pi, draw}));
        masks.push_back(random_mask(params.size(), count, rng));
      }
    }
    CurvePoint pt;
    pt.p = p;
    pt.hidden_count = masks.front().encrypted_count();
    double total = 0.0;
    for (const EncryptionMask& mask : masks) {
      const AttackResult r = invert(params, shape, observed, mask, x, cfg);
      pt.draw_mse.push_back(r.best_mse);
      pt.match_loss.push_back(r.per_restart_match_loss[r.best_restart]);
      total += r.best_mse;
      pt.attacks.push_back(r);
    }
    pt.best_mse = total / static_cast<double>(masks.size());
    curve.push_back(std::move(pt));
  }
  return curve;
}

ToyTask make_toy_task(std::uint64_t seed, const ToyTaskOptions& opts) {
  require(opts.input_dim >= 1 && opts.input_dim <= 16, Errc::config, "toy input_dim must lie in [1, 16]");
  require(opts.samples >= 1 && opts.attack_samples >= 1, Errc::config, "toy task needs samples");
  ToyTask task{opts.hidden == 0 ? ModelShape::linear(opts.input_dim) : ModelShape::mlp(opts.input_dim, opts.hidden),
               {}, {}, {}, {}, {}};
  require(task.shape.total_params() <= 64, Errc::config, "toy model must have at most 64 parameters");
  task.params = init_params(task.shape, derive_seed(seed, {stream::data, 1}));
  Rng rng(derive_seed(seed, {stream::data, 2}));
  task.feature_scales.resize(opts.input_dim);
  require(opts.scale_min > 0.0 && opts.scale_min <= opts.scale_max, Errc::config, "bad toy feature scale range");
  for (double& s : task.feature_scales) s = rng.uniform(opts.scale_min, opts.scale_max);

  const ParamVector teacher = init_params(task.shape, derive_seed(seed, {stream::data, 3}));
  auto label = [&](const std::vector<double>& x) {
    std::vector<double> y = forward(teacher, task.shape, x);
    for (double& v : y) v += rng.uniform(-0.05, 0.05);
    return y;
  };
  for (std::size_t k = 0; k < opts.samples; ++k) {
    task.client_data.inputs.push_back(sample_toy_input(task, rng));
    task.client_data.targets.push_back(label(task.client_data.inputs.back()));
  }
  for (std::size_t k = 0; k < opts.attack_samples; ++k) {
    task.xs.push_back(sample_toy_input(task, rng));
    task.ys.push_back(label(task.xs.back()));
  }
  return task;
}

std::vector<double> sample_toy_input(const ToyTask& task, Rng& rng) {
  std::vector<double> x(task.feature_scales.size());
  for (std::size_t m = 0; m < x.size(); ++m) x[m] = task.feature_scales[m] * rng.uniform(-1.0, 1.0);
  return x;
}

double privacy_threshold(const ToyTask& task, std::size_t samples, std::uint64_t seed, double quantile) {
  require(samples >= 1, Errc::config, "threshold needs samples");
  require(quantile >= 0.0 && quantile <= 1.0, Errc::config, "quantile must lie in [0, 1]");
  Rng rng(derive_seed(seed, {stream::attack, 0x7461750ULL}));
  std::vector<double> errs(samples);
  std::vector<double> guess(task.feature_scales.size());
  for (double& e : errs) {
    const std::vector<double> x = sample_toy_input(task, rng);
    for (double& g : guess) g = rng.uniform(-1.0, 1.0);
    e = mse(guess, x);
  }
  std::sort(errs.begin(), errs.end());
  const auto idx = static_cast<std::size_t>(std::floor(quantile * static_cast<double>(samples - 1)));
  return errs[idx];
}

double defeat_point(std::span<const CurvePoint> curve, double tau) {
  for (const CurvePoint& pt : curve) {
    if (pt.best_mse > tau) return pt.p;
  }
  return 1.0 + 1e-9;
}

std::string attack_csv_rows(std::span<const CurvePoint> curve, MaskPolicy policy, std::uint64_t seed,
                            std::size_t iters, std::size_t restart_offset) {
  std::string out;
  char buf[256];
  const std::string name(to_string(policy));
  for (const CurvePoint& pt : curve) {
    for (std::size_t draw = 0; draw < pt.attacks.size(); ++draw) {
      const AttackResult& a = pt.attacks[draw];
      const std::size_t restarts = a.per_restart_mse.size();
      for (std::size_t r = 0; r < restarts; ++r) {
        std::snprintf(buf, sizeof buf, "%s,%.6g,%llu,%zu,%zu,%.17g,%.17g\n", name.c_str(), pt.p,
                      static_cast<unsigned long long>(seed), restart_offset + draw * restarts + r, iters, a.per_restart_match_loss[r],
                      a.per_restart_mse[r]);
        out += buf;
      }
    }
  }
  return out;
}

}  // namespace selenc

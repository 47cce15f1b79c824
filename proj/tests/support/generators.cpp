// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "support/generators.hpp"

namespace selenc::testing {

std::vector<double> uniform_vector(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

ModelShape random_shape(Rng& rng, std::size_t max_params, std::size_t max_out) {
  for (;;) {
    const std::size_t in = 1 + rng.below(8);
    const std::size_t out = 1 + rng.below(max_out);
    ModelShape s = rng.below(2) == 0 ? ModelShape::linear(in, out) : ModelShape::mlp(in, 1 + rng.below(8), out);
    if (s.total_params() <= max_params) return s;
  }
}

Dataset random_dataset(Rng& rng, const ModelShape& shape, std::size_t samples) {
  Dataset d;
  for (std::size_t k = 0; k < samples; ++k) {
    d.inputs.push_back(uniform_vector(rng, shape.input_dim(), -1.0, 1.0));
    d.targets.push_back(uniform_vector(rng, shape.output_dim(), -1.0, 1.0));
  }
  return d;
}

std::vector<Dataset> random_datasets(Rng& rng, const ModelShape& shape, std::size_t clients,
                                     std::size_t max_samples) {
  std::vector<Dataset> out;
  for (std::size_t c = 0; c < clients; ++c) out.push_back(random_dataset(rng, shape, 1 + rng.below(max_samples)));
  return out;
}

std::vector<double> random_weights(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  double total = 0.0;
  for (double& v : w) total += (v = rng.uniform(0.1, 1.0));
  for (double& v : w) v /= total;
  return w;
}

}  // namespace selenc::testing

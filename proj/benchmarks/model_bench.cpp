// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "selenc/model.hpp"
#include "selenc/random.hpp"
#include "selenc/sensitivity.hpp"

namespace selenc {
namespace {

Dataset make_data(const ModelShape& shape, std::size_t n) {
  Rng rng(5);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(shape.input_dim()), y(shape.output_dim());
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (double& v : y) v = rng.uniform(-1.0, 1.0);
    d.inputs.push_back(std::move(x));
    d.targets.push_back(std::move(y));
  }
  return d;
}

void BM_LossAndGrad(benchmark::State& state) {
  const ModelShape shape = ModelShape::mlp(32, static_cast<std::size_t>(state.range(0)), 4);
  const ParamVector w = init_params(shape, 1);
  const Dataset d = make_data(shape, 64);
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(w, shape, d, LossKind::squared_error));
  state.counters["params"] = static_cast<double>(shape.total_params());
}
BENCHMARK(BM_LossAndGrad)->Arg(16)->Arg(128);

void BM_Sensitivity(benchmark::State& state) {
  const ModelShape shape = ModelShape::mlp(16, static_cast<std::size_t>(state.range(0)), 2);
  const ParamVector w = init_params(shape, 1);
  const Dataset d = make_data(shape, 16);
  for (auto _ : state) benchmark::DoNotOptimize(sensitivity(w, shape, d));
}
BENCHMARK(BM_Sensitivity)->Arg(8)->Arg(32);

void BM_SelectMask(benchmark::State& state) {
  Rng rng(2);
  std::vector<double> s(static_cast<std::size_t>(state.range(0)));
  for (double& v : s) v = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(select_mask(s, 0.1));
}
BENCHMARK(BM_SelectMask)->Arg(100000)->Arg(1000000);

}  // namespace
}  // namespace selenc

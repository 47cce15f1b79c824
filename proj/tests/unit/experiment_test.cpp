// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "selenc/error.hpp"
#include "selenc/experiment.hpp"

namespace selenc {
namespace {

namespace fs = std::filesystem;

constexpr const char* kMinimal = R"({"model": {"layers": [{"in": 3, "out": 1}]}})";

std::string message_of(std::string_view text) {
  try {
    parse_experiment(text);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
    return e.what();
  }
  ADD_FAILURE() << "expected a config error";
  return {};
}

TEST(Parse, MinimalConfigUsesDefaults) {
  const ExperimentSpec s = parse_experiment(kMinimal);
  EXPECT_EQ(s.round.n_clients, 1u);
  EXPECT_EQ(s.round.rounds, 1u);
  EXPECT_EQ(s.round.mask_ratio, 0.0);
  EXPECT_EQ(s.round.train.local_steps, 5u);
  EXPECT_DOUBLE_EQ(s.round.train.lr, 0.05);
  EXPECT_EQ(s.backend, BackendId::mock);
  EXPECT_FALSE(s.round.timing);
  EXPECT_EQ(s.shape, ModelShape::linear(3));
  EXPECT_EQ(s.data.kind, DataSpec::Kind::synthetic);
  EXPECT_EQ(s.config_hash.size(), 64u);
}

TEST(Parse, FullConfig) {
  const ExperimentSpec s = parse_experiment(R"({
    "n_clients": 3, "rounds": 2, "weights": [0.5, 0.25, 0.25], "mask_ratio": 0.3,
    "layer_recipe": true, "seed": 9, "backend": "paillier", "pack_batch": 8, "frac_bits": 40,
    "mask_refresh": 1, "timing": false,
    "dp": {"enabled": true, "b": 2.0, "clip": 0.5},
    "key": {"security_bits": 1024, "guard_bits": 20, "weight_frac_bits": 16},
    "dropout": [{"round": 2, "clients": [1]}],
    "model": {"layers": [{"in": 2, "out": 4, "activation": "tanh"}, {"in": 4, "out": 2}]},
    "train": {"local_steps": 3, "lr": 0.1, "loss": "soft_cross_entropy"},
    "data": {"synthetic": {"samples_per_client": 7, "noise": 0.0, "heterogeneity": 0.5}}
  })");
  EXPECT_EQ(s.round.n_clients, 3u);
  EXPECT_EQ(s.round.weights, (std::vector<double>{0.5, 0.25, 0.25}));
  EXPECT_TRUE(s.round.layer_recipe);
  EXPECT_EQ(s.backend, BackendId::paillier);
  EXPECT_EQ(s.key.security_bits, 1024u);
  EXPECT_EQ(s.key.pack_batch, 8u);
  EXPECT_EQ(s.key.guard_bits, 20u);
  EXPECT_TRUE(s.round.dp.enabled);
  EXPECT_EQ(s.round.dp.b, 2.0);
  EXPECT_TRUE(s.round.dropout.at(2).contains(1));
  EXPECT_EQ(s.round.train.loss, LossKind::soft_cross_entropy);
  EXPECT_EQ(s.data.samples_per_client, 7u);
  EXPECT_EQ(s.shape.total_params(), 2u * 4 + 4 + 4 * 2 + 2);
}

TEST(Parse, UnknownKeysAreNamed) {
  EXPECT_NE(message_of(R"({"model": {"layers": [{"in": 1, "out": 1}]}, "epochs": 3})").find("'epochs'"),
            std::string::npos);
  EXPECT_NE(message_of(R"({"model": {"layers": [{"in": 1, "out": 1}]}, "dp": {"sigma": 1}})").find("'dp.sigma'"),
            std::string::npos);
  EXPECT_NE(message_of(R"({"model": {"layers": [{"in": 1, "out": 1}]}, "key": {"bits": 1}})").find("key.bits"),
            std::string::npos);
}

TEST(Parse, InvalidValuesRejected) {
  message_of(R"({"n_clients": 2})");
  message_of(R"({"model": {"layers": [{"in": 1, "out": 1}]}, "mask_ratio": 1.5})");
  message_of(R"({"model": {"layers": [{"in": 1, "out": 1}]}, "n_clients": 2, "weights": [0.9, 0.2]})");
  message_of(R"({"model": {"layers": [{"in": 1, "out": 1}]}, "n_clients": "two"})");
  message_of(R"({"model": {"layers": [{"in": 1, "out": 1}]}, "rounds": 0})");
  message_of(R"({"model": {"layers": [{"in": 1, "out": 1}]}, "backend": "ckks"})");
  message_of(R"({"model": {"layers": [{"in": 1, "out": 1}]}, "dropout": [{"round": 1, "clients": [0]}]})");
  message_of(R"({"model": {"layers": [{"in": 1, "out": 1}]}, "data": {"synthetic": {}, "csv": {"path": "x"}}})");
  EXPECT_THROW(parse_experiment("{not json"), Error);
}

TEST(Parse, HashFollowsTheText) {
  const ExperimentSpec a = parse_experiment(kMinimal);
  const ExperimentSpec b = parse_experiment(std::string(kMinimal) + " ");
  EXPECT_EQ(a.config_hash, parse_experiment(kMinimal).config_hash);
  EXPECT_NE(a.config_hash, b.config_hash);
}

TEST(SyntheticData, SeededShapesAndTargets) {
  const ExperimentSpec s = parse_experiment(R"({"n_clients": 3, "seed": 4,
    "model": {"layers": [{"in": 2, "out": 3}]}, "train": {"loss": "soft_cross_entropy"},
    "data": {"synthetic": {"samples_per_client": 5}}})");
  const std::vector<Dataset> d = make_client_datasets(s);
  ASSERT_EQ(d.size(), 3u);
  for (const Dataset& c : d) {
    ASSERT_EQ(c.inputs.size(), 5u);
    EXPECT_NO_THROW(c.validate(s.shape));
    for (const auto& y : c.targets) {
      double total = 0.0;
      for (double v : y) {
        EXPECT_GT(v, 0.0);
        total += v;
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
  EXPECT_EQ(make_client_datasets(s)[1].inputs, d[1].inputs);
  EXPECT_NE(d[0].inputs, d[1].inputs);
}

TEST(CsvData, RoundRobinRowsAndErrors) {
  const fs::path dir = fs::temp_directory_path() / "selenc_experiment_test";
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "data.csv");
    f << "# comment\nx0,x1,y\n1,2,3\n4,5,6\n7,8,9\n";
  }
  const ExperimentSpec s = parse_experiment(
      R"({"n_clients": 2, "model": {"layers": [{"in": 2, "out": 1}]}, "data": {"csv": {"path": "data.csv"}}})", dir);
  EXPECT_EQ(s.data.csv_path, dir / "data.csv");
  const std::vector<Dataset> d = make_client_datasets(s);
  ASSERT_EQ(d[0].inputs.size(), 2u);
  ASSERT_EQ(d[1].inputs.size(), 1u);
  EXPECT_EQ(d[0].inputs[1], (std::vector<double>{7, 8}));
  EXPECT_EQ(d[1].targets[0], (std::vector<double>{6}));

  {
    std::ofstream f(dir / "ragged.csv");
    f << "1,2,3\n4,5\n";
  }
  const ExperimentSpec r = parse_experiment(
      R"({"model": {"layers": [{"in": 2, "out": 1}]}, "data": {"csv": {"path": "ragged.csv"}}})", dir);
  EXPECT_THROW(make_client_datasets(r), Error);
  const ExperimentSpec missing = parse_experiment(
      R"({"model": {"layers": [{"in": 2, "out": 1}]}, "data": {"csv": {"path": "nope.csv"}}})", dir);
  try {
    make_client_datasets(missing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::io);
  }
  fs::remove_all(dir);
}

}  // namespace
}  // namespace selenc

// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment configuration files (JSON) and the client datasets they describe.
//
// Recognised keys:
//   n_clients, rounds, weights, mask_ratio, layer_recipe, seed, backend,
//   pack_batch, frac_bits, mask_refresh, timing,
//   dp {enabled, b, clip}, key {security_bits, dir, value_bits, guard_bits,
//   weight_frac_bits}, mock {expansion_ratio}, dropout [{round, clients}],
//   model {layers}, train {local_steps, lr, loss},
//   data {synthetic {samples_per_client, noise, heterogeneity}} or
//   data {csv {path, target_columns}}
// Anything else is rejected with the offending key named.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "selenc/he.hpp"
#include "selenc/model.hpp"
#include "selenc/protocol.hpp"

namespace selenc {

struct DataSpec {
  enum class Kind { synthetic, csv };
  Kind kind = Kind::synthetic;
  std::size_t samples_per_client = 16;
  double noise = 0.05;
  double heterogeneity = 0.0;
  std::filesystem::path csv_path;
  std::size_t target_columns = 1;
};

struct ExperimentSpec {
  RoundConfig round;
  ModelShape shape = ModelShape::linear(1);
  BackendId backend = BackendId::mock;
  KeyConfig key;
  double expansion_ratio = kDefaultMockExpansion;
  std::filesystem::path key_dir;  // empty: generate keys from the seed
  DataSpec data;
  std::string config_hash;  // hex SHA-256 of the config text
};

// Relative paths (key dir, CSV data) resolve against base_dir.
ExperimentSpec parse_experiment(std::string_view text, const std::filesystem::path& base_dir = {});

std::vector<Dataset> make_client_datasets(const ExperimentSpec& spec);

}  // namespace selenc

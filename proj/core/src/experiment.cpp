// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "selenc/experiment.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "selenc/digest.hpp"
#include "selenc/error.hpp"
#include "selenc/random.hpp"

namespace selenc {

namespace {

using nlohmann::json;

void allow_only(const json& obj, const std::string& where, std::initializer_list<std::string_view> keys) {
  require(obj.is_object(), Errc::config, (where.empty() ? std::string("config") : where) + " must be an object");
  const std::set<std::string_view> allowed(keys);
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) fail(Errc::config, "unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <class T>
T get(const json& obj, const char* key, const std::string& path, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(Errc::config, "config key '" + path + "' has the wrong type");
  }
}

std::vector<double> parse_csv_row(const std::string& line) {
  std::vector<double> row;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      return {};
    }
    row.push_back(v);
  }
  return row;
}

}  // namespace

ExperimentSpec parse_experiment(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::config, std::string("config is not valid JSON: ") + e.what());
  }
  allow_only(j, "", {"n_clients", "rounds", "weights", "mask_ratio", "layer_recipe", "seed", "backend", "pack_batch",
                     "frac_bits", "mask_refresh", "timing", "dp", "key", "mock", "dropout", "model", "train", "data"});

  ExperimentSpec spec;
  spec.config_hash = to_hex(sha256(text));
  RoundConfig& rc = spec.round;
  rc.n_clients = get<std::size_t>(j, "n_clients", "n_clients", 1);
  rc.rounds = get<std::size_t>(j, "rounds", "rounds", 1);
  rc.weights = get<std::vector<double>>(j, "weights", "weights", {});
  rc.mask_ratio = get<double>(j, "mask_ratio", "mask_ratio", 0.0);
  rc.layer_recipe = get<bool>(j, "layer_recipe", "layer_recipe", false);
  rc.seed = get<std::uint64_t>(j, "seed", "seed", 0);
  rc.mask_refresh = get<std::size_t>(j, "mask_refresh", "mask_refresh", 0);
  spec.backend = parse_backend(get<std::string>(j, "backend", "backend", "mock"));
  rc.timing = get<bool>(j, "timing", "timing", spec.backend == BackendId::paillier);
  spec.key.pack_batch = get<std::size_t>(j, "pack_batch", "pack_batch", spec.key.pack_batch);
  spec.key.frac_bits = get<unsigned>(j, "frac_bits", "frac_bits", spec.key.frac_bits);

  if (j.contains("dp")) {
    const json& dp = j["dp"];
    allow_only(dp, "dp", {"enabled", "b", "clip"});
    rc.dp.enabled = get<bool>(dp, "enabled", "dp.enabled", false);
    rc.dp.b = get<double>(dp, "b", "dp.b", 1.0);
    rc.dp.clip = get<double>(dp, "clip", "dp.clip", 1.0);
  }
  if (j.contains("key")) {
    const json& k = j["key"];
    allow_only(k, "key", {"security_bits", "dir", "value_bits", "guard_bits", "weight_frac_bits"});
    spec.key.security_bits = get<unsigned>(k, "security_bits", "key.security_bits", spec.key.security_bits);
    spec.key.value_bits = get<unsigned>(k, "value_bits", "key.value_bits", spec.key.value_bits);
    spec.key.guard_bits = get<unsigned>(k, "guard_bits", "key.guard_bits", spec.key.guard_bits);
    spec.key.weight_frac_bits = get<unsigned>(k, "weight_frac_bits", "key.weight_frac_bits", spec.key.weight_frac_bits);
    const std::string dir = get<std::string>(k, "dir", "key.dir", "");
    if (!dir.empty()) spec.key_dir = std::filesystem::path(dir).is_absolute() ? std::filesystem::path(dir) : base_dir / dir;
  }
  if (j.contains("mock")) {
    allow_only(j["mock"], "mock", {"expansion_ratio"});
    spec.expansion_ratio = get<double>(j["mock"], "expansion_ratio", "mock.expansion_ratio", kDefaultMockExpansion);
    require(spec.expansion_ratio >= 1.0, Errc::config, "mock.expansion_ratio must be >= 1");
  }
  if (j.contains("dropout")) {
    require(j["dropout"].is_array(), Errc::config, "dropout must be a list");
    for (const json& d : j["dropout"]) {
      allow_only(d, "dropout[]", {"round", "clients"});
      const auto round = get<std::size_t>(d, "round", "dropout[].round", 0);
      for (std::size_t c : get<std::vector<std::size_t>>(d, "clients", "dropout[].clients", {})) rc.dropout[round].insert(c);
    }
  }
  require(j.contains("model"), Errc::config, "config key 'model' is required");
  allow_only(j["model"], "model", {"layers"});
  spec.shape = ModelShape::from_json(j["model"].dump());
  if (j.contains("train")) {
    const json& t = j["train"];
    allow_only(t, "train", {"local_steps", "lr", "loss"});
    rc.train.local_steps = get<std::size_t>(t, "local_steps", "train.local_steps", rc.train.local_steps);
    rc.train.lr = get<double>(t, "lr", "train.lr", rc.train.lr);
    rc.train.loss = parse_loss_kind(get<std::string>(t, "loss", "train.loss", "squared_error"));
  }
  if (j.contains("data")) {
    const json& d = j["data"];
    allow_only(d, "data", {"synthetic", "csv"});
    require(d.size() == 1, Errc::config, "data needs exactly one of 'synthetic' or 'csv'");
    if (d.contains("synthetic")) {
      const json& s = d["synthetic"];
      allow_only(s, "data.synthetic", {"samples_per_client", "noise", "heterogeneity"});
      spec.data.samples_per_client = get<std::size_t>(s, "samples_per_client", "data.synthetic.samples_per_client", 16);
      spec.data.noise = get<double>(s, "noise", "data.synthetic.noise", 0.05);
      spec.data.heterogeneity = get<double>(s, "heterogeneity", "data.synthetic.heterogeneity", 0.0);
      require(spec.data.samples_per_client >= 1, Errc::config, "data.synthetic.samples_per_client must be >= 1");
    } else {
      const json& c = d["csv"];
      allow_only(c, "data.csv", {"path", "target_columns"});
      spec.data.kind = DataSpec::Kind::csv;
      const std::string path = get<std::string>(c, "path", "data.csv.path", "");
      require(!path.empty(), Errc::config, "data.csv.path is required");
      spec.data.csv_path = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : base_dir / path;
      spec.data.target_columns = get<std::size_t>(c, "target_columns", "data.csv.target_columns", 1);
    }
  }

  if (spec.backend == BackendId::mock && !j.contains("key")) spec.key.security_bits = 2048;
  spec.key.validate();
  require(spec.data.kind == DataSpec::Kind::csv || spec.data.target_columns == 1 ||
              spec.data.target_columns == spec.shape.output_dim(),
          Errc::config, "target column count mismatch");
  rc.validate(rc.n_clients);
  return spec;
}

std::vector<Dataset> make_client_datasets(const ExperimentSpec& spec) {
  const ModelShape& shape = spec.shape;
  const std::size_t n = spec.round.n_clients;
  std::vector<Dataset> out(n);

  if (spec.data.kind == DataSpec::Kind::csv) {
    std::ifstream in(spec.data.csv_path);
    require(in.good(), Errc::io, "cannot open data file " + spec.data.csv_path.string());
    require(spec.data.target_columns == shape.output_dim(), Errc::config,
            "data.csv.target_columns must equal the model output dimension");
    std::string line;
    std::size_t row_index = 0;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::vector<double> row = parse_csv_row(line);
      if (row.empty()) continue;  // header
      require(row.size() == shape.input_dim() + shape.output_dim(), Errc::shape,
              "CSV row " + std::to_string(row_index) + " has " + std::to_string(row.size()) + " columns");
      Dataset& d = out[row_index++ % n];
      d.inputs.emplace_back(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(shape.input_dim()));
      d.targets.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(shape.input_dim()), row.end());
    }
    for (const Dataset& d : out) d.validate(shape);
    return out;
  }

  const ParamVector teacher = init_params(shape, derive_seed(spec.round.seed, {stream::data, 0xfeed}));
  for (std::size_t c = 0; c < n; ++c) {
    Rng rng(derive_seed(spec.round.seed, {stream::data, c}));
    std::vector<double> shift(shape.input_dim());
    for (double& s : shift) s = spec.data.heterogeneity * rng.uniform(-1.0, 1.0);
    for (std::size_t k = 0; k < spec.data.samples_per_client; ++k) {
      std::vector<double> x(shape.input_dim());
      for (std::size_t m = 0; m < x.size(); ++m) x[m] = rng.uniform(-1.0, 1.0) + shift[m];
      std::vector<double> y = forward(teacher, shape, x);
      if (spec.round.train.loss == LossKind::soft_cross_entropy) {
        double mx = y[0];
        for (double v : y) mx = std::max(mx, v);
        double z = 0.0;
        for (double& v : y) z += (v = std::exp(v - mx));
        for (double& v : y) v /= z;
      } else {
        for (double& v : y) v += spec.data.noise * rng.uniform(-1.0, 1.0);
      }
      out[c].inputs.push_back(std::move(x));
      out[c].targets.push_back(std::move(y));
    }
  }
  return out;
}

}  // namespace selenc

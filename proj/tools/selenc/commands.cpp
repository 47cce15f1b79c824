// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "selenc/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "selenc/attack.hpp"
#include "selenc/digest.hpp"
#include "selenc/dp.hpp"
#include "selenc/error.hpp"
#include "selenc/experiment.hpp"
#include "selenc/he.hpp"
#include "selenc/protocol.hpp"
#include "selenc/sensitivity.hpp"
#include "selenc/threshold.hpp"

#ifndef SELENC_VERSION
#define SELENC_VERSION "0.0.0"
#endif

namespace selenc::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr const char* kKeyStem = "selenc";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), Errc::io, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  require(out.good(), Errc::io, "write failed: " + path.string());
}

fs::path pub_path(const fs::path& dir, const std::string& stem) { return dir / (stem + ".pub.json"); }
fs::path sec_path(const fs::path& dir, const std::string& stem) { return dir / (stem + ".sec.json"); }
fs::path share_path(const fs::path& dir, const std::string& stem, unsigned i) {
  return dir / (stem + ".share-" + std::to_string(i) + ".json");
}

json meta_json(const std::string& hash, std::uint64_t seed) {
  return {{"tool", "selenc"}, {"version", SELENC_VERSION}, {"config_hash", hash}, {"seed", seed}};
}

// Adds the meta record to a JSON document produced elsewhere.
std::string with_meta(const std::string& doc, const std::string& hash, std::uint64_t seed) {
  json j = json::parse(doc);
  j["meta"] = meta_json(hash, seed);
  return j.dump(2) + "\n";
}

// Writes `csv` (which already starts with the header comment) in the selected
// format and returns the path written.
fs::path write_table(const GlobalOptions& g, const std::string& stem, const std::string& csv) {
  if (g.format == Format::csv) {
    const fs::path p = g.out_dir / (stem + ".csv");
    write_file(p, csv);
    return p;
  }
  const fs::path p = g.out_dir / (stem + ".jsonl");
  write_file(p, csv_to_json_lines(csv));
  return p;
}

std::string hash_args(std::string_view canonical) { return to_hex(sha256(canonical)); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

PaillierKeyPair load_keys(const fs::path& dir) {
  PaillierKeyPair keys;
  keys.pk = public_key_from_json(read_file(pub_path(dir, kKeyStem)));
  if (fs::exists(sec_path(dir, kKeyStem))) {
    keys.sk = secret_key_from_json(read_file(sec_path(dir, kKeyStem)));
  } else {
    std::vector<KeyShare> shares;
    for (unsigned i = 1; i <= 64; ++i) {
      const fs::path p = share_path(dir, kKeyStem, i);
      if (fs::exists(p)) shares.push_back(share_from_json(read_file(p)));
    }
    require(!shares.empty(), Errc::io, "no secret key or key shares in " + dir.string());
    const ShareConfig cfg{shares.front().n, shares.front().k};
    keys.sk = decode_secret_key(reconstruct_secret(shares, cfg));
  }
  require(public_key_from_secret(keys.sk).n == keys.pk.n, Errc::key_mismatch,
          "secret key does not match the public key in " + dir.string());
  return keys;
}

HeContext make_he(const ExperimentSpec& spec) {
  if (spec.backend == BackendId::mock) {
    MockBackend m = make_mock_backend(spec.key, spec.expansion_ratio);
    return {m.evaluator, m.decryptor};
  }
  const PaillierKeyPair keys = spec.key_dir.empty() ? paillier_keygen(spec.key, spec.round.seed) : load_keys(spec.key_dir);
  require(keys.pk.bits == spec.key.security_bits, Errc::key_mismatch,
          "key size " + std::to_string(keys.pk.bits) + " does not match key.security_bits");
  return {make_paillier_evaluator(keys.pk, spec.key), make_paillier_decryptor(keys, spec.key)};
}

struct Loaded {
  ExperimentSpec spec;
  std::vector<Dataset> datasets;
};

// Parses and validates a config and its data before any key or compute work.
Loaded load_experiment(const fs::path& config, const GlobalOptions& g, bool seed_given) {
  Loaded l;
  l.spec = parse_experiment(read_file(config), config.parent_path());
  if (seed_given) l.spec.round.seed = g.seed;
  l.spec.round.threads = g.threads;
  l.datasets = make_client_datasets(l.spec);
  l.spec.round.validate(l.datasets.size());
  for (const Dataset& d : l.datasets) d.validate(l.spec.shape);
  return l;
}

std::vector<double> global_scores(const Loaded& l) {
  const ParamVector params = init_params(l.spec.shape, l.spec.round.seed);
  const std::vector<double> w = l.spec.round.resolved_weights();
  std::vector<double> scores(l.spec.shape.total_params(), 0.0);
  SensitivityOptions opts;
  opts.loss = l.spec.round.train.loss;
  for (std::size_t c = 0; c < l.datasets.size(); ++c) {
    const SensitivityMap m = sensitivity(params, l.spec.shape, l.datasets[c], opts);
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] += w[c] * m.scores[i];
  }
  return scores;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    require(ec == std::errc() && ptr == cell.data() + cell.size(), Errc::config,
            std::string("bad number '") + cell + "' in " + what);
    out.push_back(v);
  }
  require(!out.empty(), Errc::config, std::string(what) + " is empty");
  return out;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// ---- subcommands -------------------------------------------------------------

struct KeygenArgs {
  unsigned bits = 2048;
  std::string out = kKeyStem;
  std::string threshold;
};

void cmd_keygen(const GlobalOptions& g, const KeygenArgs& a, std::ostream& out) {
  KeyConfig cfg;
  cfg.security_bits = a.bits;
  cfg.validate();
  std::optional<ShareConfig> share_cfg;
  if (!a.threshold.empty()) {
    unsigned n = 0, k = 0;
    char colon = 0;
    std::istringstream ss(a.threshold);
    require(static_cast<bool>(ss >> n >> colon >> k) && colon == ':' && ss.peek() == EOF, Errc::config,
            "--threshold expects n:k");
    share_cfg = ShareConfig{n, k};
    share_cfg->validate();
  }
  const PaillierKeyPair keys = paillier_keygen(cfg, g.seed);
  const std::string hash = hash_args("keygen bits=" + std::to_string(a.bits) + " threshold=" + a.threshold);
  std::vector<std::string> written;
  auto emit = [&](const fs::path& p, const std::string& doc) {
    write_file(p, with_meta(doc, hash, g.seed));
    written.push_back(p.string());
  };
  emit(pub_path(g.out_dir, a.out), public_key_to_json(keys.pk));
  if (share_cfg) {
    const std::vector<KeyShare> shares = split_secret(encode_secret_key(keys.sk), *share_cfg, g.seed);
    for (const KeyShare& s : shares) emit(share_path(g.out_dir, a.out, s.index), share_to_json(s));
  } else {
    emit(sec_path(g.out_dir, a.out), secret_key_to_json(keys.sk));
  }
  out << json{{"keygen", {{"bits", a.bits}, {"key_id", keys.pk.id()}, {"files", written}}}}.dump() << "\n";
}

void cmd_sensitivity(const GlobalOptions& g, const fs::path& config, bool seed_given, std::ostream& out) {
  const Loaded l = load_experiment(config, g, seed_given);
  SensitivityMap map;
  map.scores = global_scores(l);
  const std::string csv = header_line(l.spec.config_hash, l.spec.round.seed) + "\n" + sensitivity_csv(map);
  const fs::path p = write_table(g, "sensitivity", csv);
  out << json{{"sensitivity", {{"params", map.scores.size()}, {"file", p.string()}}}}.dump() << "\n";
}

void cmd_mask(const GlobalOptions& g, const fs::path& config, bool seed_given, std::optional<double> p_override,
              std::ostream& out) {
  const Loaded l = load_experiment(config, g, seed_given);
  const double p = p_override.value_or(l.spec.round.mask_ratio);
  require(p >= 0.0 && p <= 1.0, Errc::config, "mask ratio must lie in [0, 1]");
  EncryptionMask mask = select_mask(global_scores(l), p);
  if (l.spec.round.layer_recipe) mask = layer_recipe_mask(l.spec.shape, mask);
  const std::vector<std::uint8_t> bytes = encode_mask(mask);
  const fs::path path = g.out_dir / "mask.bin";
  write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  out << json{{"mask",
               {{"size", mask.size()},
                {"encrypted", mask.encrypted_count()},
                {"p", p},
                {"mask_id", mask.id()},
                {"file", path.string()},
                {"meta", meta_json(l.spec.config_hash, l.spec.round.seed)}}}}
             .dump()
      << "\n";
}

void cmd_train(const GlobalOptions& g, const fs::path& config, bool seed_given, std::ostream& out) {
  const auto t0 = Clock::now();
  const Loaded l = load_experiment(config, g, seed_given);
  const HeContext he = make_he(l.spec);
  const ProtocolResult result = run_protocol(l.spec.round, l.spec.shape, l.datasets, he);
  const std::string& hash = l.spec.config_hash;
  const std::uint64_t seed = l.spec.round.seed;

  const fs::path metrics = write_table(g, "metrics", metrics_csv(result.metrics, header_line(hash, seed).substr(2)));

  json model{{"meta", meta_json(hash, seed)},
             {"model", json::parse(l.spec.shape.to_json())},
             {"params", result.final_model}};
  const fs::path model_path = g.out_dir / "model.json";
  write_file(model_path, model.dump(2) + "\n");

  const double eps_max = result.epsilon_per_client.empty()
                             ? 0.0
                             : *std::max_element(result.epsilon_per_client.begin(), result.epsilon_per_client.end());
  json budget{{"meta", meta_json(hash, seed)},
              {"dp_enabled", l.spec.round.dp.enabled},
              {"b", l.spec.round.dp.b},
              {"p", l.spec.round.mask_ratio},
              {"encrypted_params", result.mask.encrypted_count()},
              {"epsilon_per_client", result.epsilon_per_client},
              {"epsilon_max", eps_max}};
  const fs::path budget_path = g.out_dir / "budget.json";
  write_file(budget_path, budget.dump(2) + "\n");

  // Ciphertext expansion for the masked coordinates: wire bytes over the
  // plaintext bytes of the same values.
  double ratio = 0.0;
  if (const std::size_t enc = result.mask.encrypted_count(); enc > 0) {
    Rng rng(derive_seed(seed, {stream::encrypt, 0xbeef}));
    const std::vector<double> zeros(enc, 0.0);
    ratio = static_cast<double>(he.evaluator->wire_size(he.evaluator->encrypt(zeros, rng))) /
            static_cast<double>(enc * kPlainValueBytes);
  }
  std::size_t bytes_down = 0;
  for (const RoundMetrics& m : result.metrics) bytes_down += m.bytes_down;
  out << json{{"summary",
               {{"backend", std::string(to_string(l.spec.backend))},
                {"params", result.final_model.size()},
                {"encrypted_params", result.mask.encrypted_count()},
                {"bytes_up", result.encrypted_bytes_up + result.clear_bytes_up},
                {"encrypted_bytes_up", result.encrypted_bytes_up},
                {"clear_bytes_up", result.clear_bytes_up},
                {"bytes_down", bytes_down},
                {"ciphertext_plaintext_ratio", ratio},
                {"epsilon_max", eps_max},
                {"wall_ms", ms_since(t0)},
                {"files", {metrics.string(), model_path.string(), budget_path.string()}}}}}
             .dump()
      << "\n";
}

struct BudgetArgs {
  std::size_t n = 10000;
  double b = 1.0;
  double p = 0.5;
  std::string policy = "selective";
  std::size_t trials = 200;
};

void cmd_budget(const GlobalOptions& g, const BudgetArgs& a, std::ostream& out) {
  const MaskPolicy policy = parse_policy(a.policy);
  require(a.n >= 1 && a.trials >= 1, Errc::config, "--n and --trials must be >= 1");
  require(a.p >= 0.0 && a.p <= 1.0, Errc::config, "--p must lie in [0, 1]");
  const ExpectedBudgets e = expected_budgets(a.n, a.b, a.p, a.trials, g.seed);
  double eps = 0.0;
  switch (policy) {
    case MaskPolicy::all_noise: eps = e.j_mean; break;
    case MaskPolicy::random_p: eps = e.random_mean; break;
    case MaskPolicy::selective_p: eps = e.selective_mean; break;
    case MaskPolicy::full_encryption: eps = 0.0; break;
  }
  const std::string report = budget_report_json(policy, a.p, a.b, eps, e.j_mean, a.trials, g.seed);
  const json r = json::parse(report);
  const std::string hash = hash_args("budget n=" + std::to_string(a.n) + " b=" + fmt(a.b) + " p=" + fmt(a.p) +
                                     " policy=" + a.policy + " trials=" + std::to_string(a.trials));
  std::string csv = header_line(hash, g.seed) + "\npolicy,p,b,epsilon,J,ratio_to_J,trials,seed\n";
  csv += r["policy"].get<std::string>() + "," + fmt(a.p) + "," + fmt(a.b) + "," + fmt(eps) + "," + fmt(e.j_mean) +
         "," + fmt(r["ratio_to_J"].get<double>()) + "," + std::to_string(a.trials) + "," + std::to_string(g.seed) + "\n";
  write_table(g, "budget", csv);
  out << report << "\n";
}

struct AttackArgs {
  std::string config;
  std::string policy = "both";
  std::string p_grid = "0,0.1,0.3,0.5,0.7,0.9,1";
};

void cmd_attack(const GlobalOptions& g, const AttackArgs& a, std::ostream& out) {
  ToyTaskOptions topts;
  AttackConfig acfg;
  acfg.seed = g.seed;
  std::string config_text = "{}";
  if (!a.config.empty()) config_text = read_file(a.config);
  json j;
  try {
    j = json::parse(config_text);
  } catch (const json::exception& e) {
    fail(Errc::config, std::string("attack config is not valid JSON: ") + e.what());
  }
  require(j.is_object(), Errc::config, "attack config must be an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "input_dim") topts.input_dim = v.get<std::size_t>();
      else if (key == "hidden") topts.hidden = v.get<std::size_t>();
      else if (key == "samples") topts.samples = v.get<std::size_t>();
      else if (key == "attack_samples") topts.attack_samples = v.get<std::size_t>();
      else if (key == "scale_min") topts.scale_min = v.get<double>();
      else if (key == "scale_max") topts.scale_max = v.get<double>();
      else if (key == "iters") acfg.iters = v.get<std::size_t>();
      else if (key == "lr") acfg.lr = v.get<double>();
      else if (key == "restarts") acfg.restarts = v.get<std::size_t>();
      else if (key == "fd_step") acfg.fd_step = v.get<double>();
      else fail(Errc::config, "unknown config key '" + key + "'");
    }
  } catch (const json::exception&) {
    fail(Errc::config, "attack config value has the wrong type");
  }
  acfg.validate();
  std::vector<MaskPolicy> policies;
  if (a.policy == "both") policies = {MaskPolicy::selective_p, MaskPolicy::random_p};
  else policies = {parse_policy(a.policy)};
  for (MaskPolicy p : policies) {
    require(p == MaskPolicy::selective_p || p == MaskPolicy::random_p, Errc::config,
            "attack policy must be selective, random or both");
  }
  const std::vector<double> grid = parse_list(a.p_grid, "--p-grid");
  for (double p : grid) require(p >= 0.0 && p <= 1.0, Errc::config, "--p-grid values must lie in [0, 1]");

  const std::string hash = hash_args(config_text + " policy=" + a.policy + " grid=" + a.p_grid);
  const ToyTask task = make_toy_task(g.seed, topts);
  const std::vector<double> scores = sensitivity(task.params, task.shape, task.client_data).scores;
  const double tau = privacy_threshold(task, 1000, g.seed);

  std::string rows = header_line(hash, g.seed) + "\npolicy,p,seed,restart,iters,match_loss,mse\n";
  std::vector<std::vector<CurvePoint>> curves(policies.size());
  for (std::size_t pi = 0; pi < policies.size(); ++pi) {
    std::size_t offset = 0;
    for (std::size_t s = 0; s < task.xs.size(); ++s) {
      std::vector<CurvePoint> c =
          defense_curve(task.params, task.shape, task.xs[s], task.ys[s], scores, grid, policies[pi], acfg);
      rows += attack_csv_rows(c, policies[pi], g.seed, acfg.iters, offset);
      std::size_t width = 0;
      for (const CurvePoint& pt : c) width = std::max(width, pt.attacks.size() * acfg.restarts);
      offset += width;
      if (curves[pi].empty()) {
        curves[pi] = c;
        for (CurvePoint& pt : curves[pi]) pt.best_mse /= static_cast<double>(task.xs.size());
      } else {
        for (std::size_t i = 0; i < c.size(); ++i) {
          curves[pi][i].best_mse += c[i].best_mse / static_cast<double>(task.xs.size());
        }
      }
    }
  }
  const fs::path attack_path = write_table(g, "attack", rows);

  std::string curve_csv = header_line(hash, g.seed) + "\np,hidden_count";
  for (MaskPolicy p : policies) curve_csv += "," + std::string(to_string(p)) + "_mse";
  curve_csv += "\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    curve_csv += fmt(grid[i]) + "," + std::to_string(curves[0][i].hidden_count);
    for (const auto& c : curves) curve_csv += "," + fmt(c[i].best_mse);
    curve_csv += "\n";
  }
  const fs::path curve_path = write_table(g, "curve", curve_csv);

  json summary{{"meta", meta_json(hash, g.seed)}, {"tau", tau}, {"attacked_samples", task.xs.size()}};
  for (std::size_t pi = 0; pi < policies.size(); ++pi) {
    json pts = json::array();
    for (const CurvePoint& pt : curves[pi]) pts.push_back({{"p", pt.p}, {"mse", pt.best_mse}});
    summary["policies"][std::string(to_string(policies[pi]))] = {{"defeat_point", defeat_point(curves[pi], tau)},
                                                                  {"points", pts}};
  }
  const fs::path summary_path = g.out_dir / "curve.json";
  write_file(summary_path, summary.dump(2) + "\n");
  out << json{{"attack", {{"files", {attack_path.string(), curve_path.string(), summary_path.string()}}}}}.dump()
      << "\n";
}

struct BenchArgs {
  std::string model_params = "1000,10000,100000";
  std::string mask_ratios = "0.1,1";
  std::string backend = "mock";
  std::size_t repeat = 5;
  unsigned bits = 2048;
  double expansion = kDefaultMockExpansion;
  bool no_timing = false;
};

void cmd_bench(const GlobalOptions& g, const BenchArgs& a, std::ostream& out) {
  require(a.repeat >= 1, Errc::config, "--repeat must be >= 1");
  KeyConfig cfg;
  cfg.security_bits = a.bits;
  cfg.validate();
  const BackendId backend = parse_backend(a.backend);
  std::vector<std::size_t> sizes;
  for (double v : parse_list(a.model_params, "--model-params")) {
    require(v >= 1.0 && v == std::floor(v), Errc::config, "--model-params must be positive integers");
    sizes.push_back(static_cast<std::size_t>(v));
  }
  const std::vector<double> ratios = parse_list(a.mask_ratios, "--mask-ratios");
  for (double p : ratios) require(p >= 0.0 && p <= 1.0, Errc::config, "--mask-ratios values must lie in [0, 1]");

  HeContext he;
  if (backend == BackendId::mock) {
    MockBackend m = make_mock_backend(cfg, a.expansion);
    he = {m.evaluator, m.decryptor};
  } else {
    const PaillierKeyPair keys = paillier_keygen(cfg, g.seed);
    he = {make_paillier_evaluator(keys.pk, cfg), make_paillier_decryptor(keys, cfg)};
  }

  const std::string hash = hash_args("bench params=" + a.model_params + " ratios=" + a.mask_ratios + " backend=" +
                                     a.backend + " repeat=" + std::to_string(a.repeat) +
                                     " bits=" + std::to_string(a.bits) + " expansion=" + fmt(a.expansion));
  std::string csv = header_line(hash, g.seed) +
                    "\nn_params,mask_ratio,encrypted_params,bytes,enc_ms_median,enc_ms_iqr,agg_ms_median,agg_ms_iqr,"
                    "dec_ms_median,dec_ms_iqr,repeat\n";
  std::vector<double> xs, ys;
  for (std::size_t n : sizes) {
    for (double p : ratios) {
      const std::size_t count = selection_count(p, n);
      std::vector<double> enc_ms, agg_ms, dec_ms;
      std::size_t bytes = 0;
      if (count > 0) {
        Rng rng(derive_seed(g.seed, {stream::encrypt, n, count}));
        std::vector<double> values(count);
        for (double& v : values) v = rng.uniform(-1.0, 1.0);
        for (std::size_t r = 0; r < a.repeat; ++r) {
          auto t = Clock::now();
          const Ciphertext c1 = he.evaluator->encrypt(values, rng);
          enc_ms.push_back(ms_since(t));
          const Ciphertext c2 = he.evaluator->encrypt(values, rng);
          const std::vector<Ciphertext> pair{c1, c2};
          const std::vector<double> w{0.5, 0.5};
          t = Clock::now();
          const Ciphertext sum = he.evaluator->weighted_sum(pair, w);
          agg_ms.push_back(ms_since(t));
          t = Clock::now();
          (void)he.decryptor->decrypt(sum);
          dec_ms.push_back(ms_since(t));
          bytes = he.evaluator->wire_size(c1);
        }
      } else {
        enc_ms = agg_ms = dec_ms = {0.0};
      }
      if (a.no_timing) enc_ms = agg_ms = dec_ms = {0.0};
      auto stat = [](const std::vector<double>& v) {
        return fmt(quantile(v, 0.5)) + "," + fmt(quantile(v, 0.75) - quantile(v, 0.25));
      };
      csv += std::to_string(n) + "," + fmt(p) + "," + std::to_string(count) + "," + std::to_string(bytes) + "," +
             stat(enc_ms) + "," + stat(agg_ms) + "," + stat(dec_ms) + "," + std::to_string(a.repeat) + "\n";
      xs.push_back(static_cast<double>(count));
      ys.push_back(static_cast<double>(bytes));
    }
  }
  const fs::path table = write_table(g, "bench", csv);

  // Least-squares fit bytes = slope * encrypted_params + intercept.
  const double k = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double vxx = sxx - sx * sx / k, vxy = sxy - sx * sy / k, vyy = syy - sy * sy / k;
  const double slope = vxx > 0 ? vxy / vxx : 0.0;
  const double intercept = (sy - slope * sx) / k;
  const double r2 = (vxx > 0 && vyy > 0) ? vxy * vxy / (vxx * vyy) : 1.0;
  const double bytes_per_slot = backend == BackendId::mock
                                    ? static_cast<double>(kPlainValueBytes) * a.expansion
                                    : static_cast<double>(paillier_serialized_size(cfg, cfg.paillier_slots()) -
                                                          kCiphertextHeaderBytes) /
                                          static_cast<double>(cfg.paillier_slots());
  json fit{{"meta", meta_json(hash, g.seed)},
           {"slope", slope},
           {"intercept", intercept},
           {"r2", r2},
           {"bytes_per_slot", bytes_per_slot}};
  const fs::path fit_path = g.out_dir / "bench_fit.json";
  write_file(fit_path, fit.dump(2) + "\n");
  out << json{{"bench", {{"r2", r2}, {"slope", slope}, {"files", {table.string(), fit_path.string()}}}}}.dump()
      << "\n";
}

std::size_t thread_cap() {
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SELENC_THREADS"); env != nullptr && *env != '\0') {
    std::size_t cap = 0;
    const auto [ptr, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), cap);
    require(ec == std::errc() && *ptr == '\0' && cap >= 1, Errc::config, "SELENC_THREADS must be a positive integer");
    threads = std::min(threads, cap);
  }
  return threads;
}

}  // namespace

std::string header_line(const std::string& config_hash, std::uint64_t seed) {
  return std::string("# selenc ") + SELENC_VERSION + " config=" + config_hash + " seed=" + std::to_string(seed);
}

std::string csv_to_json_lines(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, meta;
  std::vector<std::string> columns;
  std::string out;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!s.empty() && s.back() == ',') cells.emplace_back();
    return cells;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      meta += (meta.empty() ? "" : "\n") + line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
      continue;
    }
    if (!meta.empty()) {
      out += json{{"meta", meta}}.dump() + "\n";
      meta.clear();
    }
    if (columns.empty()) {
      columns = split(line);
      continue;
    }
    const std::vector<std::string> cells = split(line);
    require(cells.size() == columns.size(), Errc::format, "ragged CSV row: " + line);
    json row = json::object();
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string& c = cells[i];
      const char* end = c.data() + c.size();
      std::int64_t iv = 0;
      double dv = 0.0;
      if (auto r = std::from_chars(c.data(), end, iv); !c.empty() && r.ec == std::errc() && r.ptr == end) {
        row[columns[i]] = iv;
      } else if (auto d = std::from_chars(c.data(), end, dv); !c.empty() && d.ec == std::errc() && d.ptr == end) {
        row[columns[i]] = dv;
      } else {
        row[columns[i]] = c;
      }
    }
    out += row.dump() + "\n";
  }
  if (!meta.empty()) out += json{{"meta", meta}}.dump() + "\n";
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Selective parameter encryption for federated learning"};
  app.set_version_flag("--version", SELENC_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  std::string format = "csv";
  std::string out_dir = ".";
  CLI::Option* seed_opt = app.add_option("--seed", g.seed, "Root seed");
  app.add_option("--out-dir", out_dir, "Directory for output files");
  app.add_option("--format", format, "Table format")->check(CLI::IsMember({"csv", "json-lines"}));

  KeygenArgs keygen;
  CLI::App* k = app.add_subcommand("keygen", "Generate a Paillier key pair");
  k->add_option("--bits", keygen.bits, "Modulus size (1024, 2048 or 3072)");
  k->add_option("--out", keygen.out, "File name stem");
  k->add_option("--threshold", keygen.threshold, "Split the secret key into n shares, any k of which recover it (n:k)");

  std::string config;
  CLI::App* sens = app.add_subcommand("sensitivity", "Sensitivity map of the initial model");
  sens->add_option("config", config, "Experiment config")->required();

  std::optional<double> mask_p;
  CLI::App* mask = app.add_subcommand("mask", "Top-p encryption mask");
  mask->add_option("config", config, "Experiment config")->required();
  mask->add_option("--p", mask_p, "Override the config's mask_ratio");

  CLI::App* train = app.add_subcommand("train", "Run the federated protocol");
  train->add_option("config", config, "Experiment config")->required();

  BudgetArgs budget;
  CLI::App* bud = app.add_subcommand("budget", "Expected privacy budgets (Monte Carlo)");
  bud->add_option("--n", budget.n, "Parameter count");
  bud->add_option("--b", budget.b, "Laplace scale");
  bud->add_option("--p", budget.p, "Encryption ratio");
  bud->add_option("--policy", budget.policy, "all_noise, random, selective or full_encryption");
  bud->add_option("--trials", budget.trials, "Monte Carlo trials");

  AttackArgs attack;
  CLI::App* att = app.add_subcommand("attack", "Gradient inversion defense curves");
  att->add_option("--config", attack.config, "Attack config (JSON)");
  att->add_option("--policy", attack.policy, "selective, random or both");
  att->add_option("--p-grid", attack.p_grid, "Comma-separated ratios");

  BenchArgs bench;
  CLI::App* ben = app.add_subcommand("bench", "Encryption overhead vs parameter count");
  ben->add_option("--model-params", bench.model_params, "Comma-separated parameter counts");
  ben->add_option("--mask-ratios", bench.mask_ratios, "Comma-separated ratios");
  ben->add_option("--backend", bench.backend, "paillier or mock");
  ben->add_option("--repeat", bench.repeat, "Repetitions per cell");
  ben->add_option("--bits", bench.bits, "Paillier modulus size");
  ben->add_option("--expansion", bench.expansion, "Mock ciphertext expansion ratio");
  ben->add_flag("--no-timing", bench.no_timing, "Report zero times (byte-reproducible output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    g.out_dir = out_dir;
    g.format = format == "json-lines" ? Format::json_lines : Format::csv;
    g.threads = thread_cap();
    const bool seed_given = seed_opt->count() > 0;
    if (*k) cmd_keygen(g, keygen, out);
    else if (*sens) cmd_sensitivity(g, config, seed_given, out);
    else if (*mask) cmd_mask(g, config, seed_given, mask_p, out);
    else if (*train) cmd_train(g, config, seed_given, out);
    else if (*bud) cmd_budget(g, budget, out);
    else if (*att) cmd_attack(g, attack, out);
    else if (*ben) cmd_bench(g, bench, out);
  } catch (const Error& e) {
    err << json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"selenc"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace selenc::cli

// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

#include "selenc/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "parallel.hpp"
#include "selenc/dp.hpp"
#include "selenc/error.hpp"

namespace selenc {

using detail::Stopwatch;

std::vector<double> RoundConfig::resolved_weights() const {
  if (!weights.empty()) return weights;
  return std::vector<double>(n_clients, 1.0 / static_cast<double>(n_clients));
}

void RoundConfig::validate(std::size_t n_datasets) const {
  require(n_clients >= 1, Errc::config, "n_clients must be >= 1");
  require(rounds >= 1, Errc::config, "rounds must be >= 1");
  require(n_datasets == n_clients, Errc::config,
          "expected " + std::to_string(n_clients) + " client datasets, got " + std::to_string(n_datasets));
  require(weights.empty() || weights.size() == n_clients, Errc::config, "weights must have one entry per client");
  const std::vector<double> w = resolved_weights();
  double total = 0.0;
  for (double a : w) {
    require(a >= 0.0 && a <= 1.0, Errc::config, "weights must lie in [0, 1]");
    total += a;
  }
  require(std::fabs(total - 1.0) <= 1e-12, Errc::config, "weights must sum to 1");
  require(mask_ratio >= 0.0 && mask_ratio <= 1.0, Errc::config, "mask_ratio must lie in [0, 1]");
  require(!dp.enabled || dp.b > 0.0, Errc::config, "dp.b must be positive");
  require(dp.clip > 0.0, Errc::config, "dp.clip must be positive");
  require(train.lr > 0.0, Errc::config, "learning rate must be positive");
  for (const auto& [round, absent] : dropout) {
    require(round >= 1 && round <= rounds, Errc::config, "dropout round " + std::to_string(round) + " out of range");
    for (std::size_t c : absent) require(c < n_clients, Errc::config, "dropout names unknown client " + std::to_string(c));
    require(absent.size() < n_clients, Errc::config,
            "dropout removes every client in round " + std::to_string(round));
  }
}

std::vector<double> handle_dropout(std::span<const std::size_t> expected, std::span<const std::size_t> arrived,
                                   std::span<const double> weights) {
  require(!arrived.empty(), Errc::protocol, "no client arrived this round");
  require(weights.size() == expected.size(), Errc::shape, "one weight per expected client required");
  std::vector<double> out;
  out.reserve(arrived.size());
  double total = 0.0;
  for (std::size_t c : arrived) {
    const auto it = std::find(expected.begin(), expected.end(), c);
    require(it != expected.end(), Errc::protocol, "client " + std::to_string(c) + " was not expected");
    const double w = weights[static_cast<std::size_t>(it - expected.begin())];
    out.push_back(w);
    total += w;
  }
  if (arrived.size() == expected.size()) return out;
  require(total > 0.0, Errc::protocol, "arrived clients carry zero total weight");
  for (double& w : out) w /= total;
  return out;
}

PartialGlobalModel split_global(std::span<const double> params, const EncryptionMask& mask,
                                const Evaluator& evaluator, Rng& rng, std::size_t round) {
  MaskedSplit split = apply_mask(params, mask);
  PartialGlobalModel g;
  if (!split.masked_values.empty()) g.encrypted_part = evaluator.encrypt(split.masked_values, rng);
  g.clear_part = std::move(split.clear_values);
  g.mask_id = mask.id();
  g.round = round;
  return g;
}

ParamVector decrypt_merge(const PartialGlobalModel& global, const EncryptionMask& mask, const Decryptor& decryptor) {
  require(global.mask_id == mask.id(), Errc::protocol, "global model was built under a different mask");
  MaskedSplit split;
  split.masked_indices = mask.encrypted_indices();
  split.clear_indices = mask.clear_indices();
  if (global.encrypted_part) split.masked_values = decryptor.decrypt(*global.encrypted_part);
  split.clear_values = global.clear_part;
  require(split.masked_values.size() == split.masked_indices.size(), Errc::protocol,
          "encrypted part does not match the mask");
  return merge(split, mask.size());
}

std::size_t upload_bytes(const PartialLocalModel& m, const Evaluator& evaluator) {
  return (m.encrypted_part ? evaluator.wire_size(*m.encrypted_part) : 0) + m.clear_part.size() * kPlainValueBytes;
}

std::size_t global_bytes(const PartialGlobalModel& m, const Evaluator& evaluator) {
  return (m.encrypted_part ? evaluator.wire_size(*m.encrypted_part) : 0) + m.clear_part.size() * kPlainValueBytes;
}

ClientUpdate client_update(const ClientContext& client, const ModelShape& shape, const PartialGlobalModel& global,
                           const EncryptionMask& mask, const TrainOptions& train,
                           const std::optional<DpSettings>& dp, std::size_t round, bool timing) {
  require(client.data && client.evaluator && client.decryptor, Errc::protocol, "client context is incomplete");
  require(mask.size() == shape.total_params(), Errc::shape, "mask does not match the model");
  ClientUpdate out;

  Stopwatch dec_clock(timing);
  const ParamVector received = decrypt_merge(global, mask, *client.decryptor);
  out.dec_ms = dec_clock.elapsed_ms();

  Stopwatch train_clock(timing);
  ParamVector local = received;
  train_gd(local, shape, *client.data, train.loss, train.local_steps, train.lr);
  out.train_ms = train_clock.elapsed_ms();

  MaskedSplit split = apply_mask(local, mask);
  if (dp && dp->enabled) {
    DpConfig dcfg{dp->b, estimate_delta_f(received, shape, *client.data, train.loss, dp->clip)};
    const MaskPolicy policy = mask.encrypted_count() == 0 ? MaskPolicy::all_noise : MaskPolicy::selective_p;
    out.epsilon = budget_for_policy(dcfg, mask, policy).epsilon;
    const auto noise = laplace_noise(dp->b, split.clear_values.size(),
                                     derive_seed(client.seed, {stream::dp_noise, client.id, round}));
    for (std::size_t i = 0; i < noise.size(); ++i) split.clear_values[i] += noise[i];
  }

  Stopwatch enc_clock(timing);
  out.upload.client = client.id;
  out.upload.round = round;
  out.upload.mask_id = mask.id();
  if (!split.masked_values.empty()) {
    Rng rng(derive_seed(client.seed, {stream::encrypt, client.id, round}));
    out.upload.encrypted_part = client.evaluator->encrypt(split.masked_values, rng);
  }
  out.upload.clear_part = std::move(split.clear_values);
  out.enc_ms = enc_clock.elapsed_ms();
  return out;
}

PartialGlobalModel server_aggregate(std::span<const PartialLocalModel> uploads, std::span<const double> weights,
                                    const Evaluator& evaluator) {
  require(!uploads.empty(), Errc::protocol, "no uploads to aggregate");
  require(uploads.size() == weights.size(), Errc::shape, "one weight per upload required");
  const PartialLocalModel& first = uploads.front();
  for (const PartialLocalModel& u : uploads) {
    require(u.mask_id == first.mask_id, Errc::protocol, "uploads were built under different masks");
    require(u.clear_part.size() == first.clear_part.size(), Errc::protocol, "clear parts differ in length");
    require(u.encrypted_part.has_value() == first.encrypted_part.has_value(), Errc::protocol,
            "uploads disagree on whether an encrypted part exists");
  }

  PartialGlobalModel g;
  g.mask_id = first.mask_id;
  g.round = first.round;
  if (first.encrypted_part) {
    std::vector<Ciphertext> cts;
    cts.reserve(uploads.size());
    for (const PartialLocalModel& u : uploads) cts.push_back(*u.encrypted_part);
    g.encrypted_part = evaluator.weighted_sum(cts, weights);
  }
  g.clear_part.assign(first.clear_part.size(), 0.0);
  for (std::size_t m = 0; m < g.clear_part.size(); ++m) g.clear_part[m] = weights[0] * first.clear_part[m];
  for (std::size_t i = 1; i < uploads.size(); ++i) {
    for (std::size_t m = 0; m < g.clear_part.size(); ++m) g.clear_part[m] += weights[i] * uploads[i].clear_part[m];
  }
  return g;
}

namespace {

struct MaskAgreement {
  EncryptionMask mask;
  std::vector<double> global_map;
};

MaskAgreement agree_on_mask(const RoundConfig& cfg, const ModelShape& shape, std::span<const Dataset> datasets,
                            const HeContext& he, std::span<const double> params, std::span<const std::size_t> clients,
                            std::span<const double> weights, std::size_t round, std::vector<RoundMetrics>& metrics) {
  std::vector<Ciphertext> maps(clients.size());
  std::vector<RoundMetrics> rows(clients.size());
  SensitivityOptions sopts;
  sopts.loss = cfg.train.loss;
  detail::parallel_for(clients.size(), cfg.threads, [&](std::size_t i) {
    const std::size_t c = clients[i];
    Stopwatch train_clock(cfg.timing);
    const SensitivityMap local = sensitivity(params, shape, datasets[c], sopts);
    rows[i].train_ms = train_clock.elapsed_ms();
    Stopwatch enc_clock(cfg.timing);
    Rng rng(derive_seed(cfg.seed, {stream::encrypt, c, round, 1}));
    maps[i] = he.evaluator->encrypt(local.scores, rng);
    rows[i].enc_ms = enc_clock.elapsed_ms();
    rows[i].bytes_up = he.evaluator->wire_size(maps[i]);
  });

  Stopwatch agg_clock(cfg.timing);
  const Ciphertext aggregate = aggregate_maps(maps, weights, *he.evaluator);
  RoundMetrics server{round, -1, "map_aggregate"};
  server.agg_ms = agg_clock.elapsed_ms();

  Stopwatch dec_clock(cfg.timing);
  MaskAgreement out;
  out.global_map = he.decryptor->decrypt(aggregate);
  out.mask = select_mask(out.global_map, cfg.mask_ratio);
  if (cfg.layer_recipe) {
    out.mask = layer_recipe_mask(shape, out.mask);
    out.mask.set_ratio(cfg.mask_ratio);
  }
  const double select_ms = dec_clock.elapsed_ms();
  const std::size_t mask_bytes = encode_mask(out.mask).size();

  for (std::size_t i = 0; i < clients.size(); ++i) {
    rows[i].round = round;
    rows[i].client = static_cast<long>(clients[i]);
    rows[i].phase = "map";
    rows[i].bytes_down = mask_bytes;
    if (clients[i] == clients.front()) {
      rows[i].bytes_down += he.evaluator->wire_size(aggregate);
      rows[i].dec_ms = select_ms;
    }
    server.bytes_up += rows[i].bytes_up;
    server.bytes_down += rows[i].bytes_down;
    metrics.push_back(rows[i]);
  }
  metrics.push_back(server);
  return out;
}

}  // namespace

ProtocolResult run_protocol(const RoundConfig& cfg, const ModelShape& shape, std::span<const Dataset> datasets,
                            const HeContext& he) {
  cfg.validate(datasets.size());
  require(he.evaluator && he.decryptor, Errc::config, "HE context is incomplete");
  require(he.evaluator->key_id() == he.decryptor->key_id(), Errc::key_mismatch,
          "evaluator and decryptor use different keys");
  for (const Dataset& d : datasets) d.validate(shape);

  const std::vector<double> base_weights = cfg.resolved_weights();
  std::vector<std::size_t> everyone(cfg.n_clients);
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});

  ProtocolResult result;
  result.epsilon_per_client.assign(cfg.n_clients, 0.0);

  ParamVector params = init_params(shape, cfg.seed);
  MaskAgreement agreed =
      agree_on_mask(cfg, shape, datasets, he, params, everyone, base_weights, 0, result.metrics);
  result.mask = agreed.mask;
  result.global_sensitivity = agreed.global_map;

  Rng init_rng(derive_seed(cfg.seed, {stream::encrypt, 0, 0, 2}));
  PartialGlobalModel global = split_global(params, result.mask, *he.evaluator, init_rng, 0);

  const std::optional<DpSettings> dp = cfg.dp.enabled ? std::optional<DpSettings>(cfg.dp) : std::nullopt;

  for (std::size_t round = 1; round <= cfg.rounds; ++round) {
    std::vector<std::size_t> arrived;
    const auto absent_it = cfg.dropout.find(round);
    for (std::size_t c : everyone) {
      if (absent_it == cfg.dropout.end() || !absent_it->second.contains(c)) arrived.push_back(c);
    }
    const std::vector<double> weights = handle_dropout(everyone, arrived, base_weights);

    if (cfg.mask_refresh > 0 && round > 1 && (round - 1) % cfg.mask_refresh == 0) {
      params = decrypt_merge(global, result.mask, *he.decryptor);
      agreed = agree_on_mask(cfg, shape, datasets, he, params, arrived, weights, round, result.metrics);
      result.mask = agreed.mask;
      result.global_sensitivity = agreed.global_map;
      Rng rng(derive_seed(cfg.seed, {stream::encrypt, 0, round, 2}));
      global = split_global(params, result.mask, *he.evaluator, rng, round - 1);
    }

    const std::size_t down = global_bytes(global, *he.evaluator);
    std::vector<ClientUpdate> updates(arrived.size());
    detail::parallel_for(arrived.size(), cfg.threads, [&](std::size_t i) {
      const ClientContext ctx{arrived[i], &datasets[arrived[i]], he.evaluator.get(), he.decryptor.get(), cfg.seed};
      updates[i] = client_update(ctx, shape, global, result.mask, cfg.train, dp, round, cfg.timing);
    });

    std::vector<PartialLocalModel> uploads;
    uploads.reserve(updates.size());
    RoundMetrics server{round, -1, "aggregate"};
    for (std::size_t i = 0; i < updates.size(); ++i) {
      const ClientUpdate& u = updates[i];
      require(u.upload.mask_id == result.mask.id(), Errc::protocol, "upload does not follow the broadcast mask");
      const std::size_t c = arrived[i];
      result.epsilon_per_client[c] += u.epsilon;
      RoundMetrics row{round, static_cast<long>(c), "train"};
      row.bytes_up = upload_bytes(u.upload, *he.evaluator);
      row.bytes_down = down;
      row.enc_ms = u.enc_ms;
      row.dec_ms = u.dec_ms;
      row.train_ms = u.train_ms;
      row.epsilon_round = u.epsilon;
      row.epsilon_total = result.epsilon_per_client[c];
      const std::size_t enc_bytes = u.upload.encrypted_part ? he.evaluator->wire_size(*u.upload.encrypted_part) : 0;
      result.encrypted_bytes_up += enc_bytes;
      result.clear_bytes_up += row.bytes_up - enc_bytes;
      server.bytes_up += row.bytes_up;
      server.bytes_down += row.bytes_down;
      result.metrics.push_back(row);
      uploads.push_back(u.upload);
    }
    if (absent_it != cfg.dropout.end()) {
      for (std::size_t c : absent_it->second) {
        RoundMetrics row{round, static_cast<long>(c), "dropped"};
        row.epsilon_total = result.epsilon_per_client[c];
        result.metrics.push_back(row);
      }
    }

    Stopwatch agg_clock(cfg.timing);
    global = server_aggregate(uploads, weights, *he.evaluator);
    global.round = round;
    server.agg_ms = agg_clock.elapsed_ms();
    result.metrics.push_back(server);
  }

  result.final_model = decrypt_merge(global, result.mask, *he.decryptor);
  return result;
}

std::string metrics_csv(std::span<const RoundMetrics> metrics, const std::string& header_comment) {
  std::string out;
  if (!header_comment.empty()) out += "# " + header_comment + "\n";
  out += "round,client,phase,bytes_up,bytes_down,enc_ms,agg_ms,dec_ms,train_ms,epsilon_round,epsilon_total\n";
  char buf[512];
  for (const RoundMetrics& m : metrics) {
    std::snprintf(buf, sizeof buf, "%zu,%ld,%s,%zu,%zu,%.3f,%.3f,%.3f,%.3f,%.17g,%.17g\n", m.round, m.client,
                  m.phase.c_str(), m.bytes_up, m.bytes_down, m.enc_ms, m.agg_ms, m.dec_ms, m.train_ms,
                  m.epsilon_round, m.epsilon_total);
    out += buf;
  }
  return out;
}

}  // namespace selenc

// Copyright 2026 The selenc Authors
// SPDX-License-Identifier: Apache-2.0

// Federated aggregation with selective parameter encryption, simulated
// in-process.
//
// Phases, in order:
//   1. every client computes a sensitivity map on the initial model, encrypts
//      it and uploads it; the server sums the maps homomorphically;
//   2. a designated key-holding client (client 0) decrypts the aggregate,
//      selects the top-p mask and broadcasts it;
//   3. for each round: clients decrypt and merge the partial global model,
//      train locally, optionally add Laplace noise to the clear coordinates,
//      encrypt the masked coordinates and upload; the server combines the
//      encrypted parts with scale+add and the clear parts in plaintext.
//
// The server only ever holds an Evaluator (public-key material).

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "selenc/he.hpp"
#include "selenc/model.hpp"
#include "selenc/sensitivity.hpp"

namespace selenc {

struct DpSettings {
  bool enabled = false;
  double b = 1.0;
  double clip = 1.0;
};

struct TrainOptions {
  std::size_t local_steps = 5;
  double lr = 0.05;
  LossKind loss = LossKind::squared_error;
};

struct RoundConfig {
  std::size_t n_clients = 1;
  std::size_t rounds = 1;
  std::vector<double> weights;  // empty means uniform
  double mask_ratio = 0.0;
  bool layer_recipe = false;
  DpSettings dp;
  // 1-based round -> clients absent in that round.
  std::map<std::size_t, std::set<std::size_t>> dropout;
  std::uint64_t seed = 0;
  TrainOptions train;
  // Recompute the mask every this many rounds; 0 keeps the first mask.
  std::size_t mask_refresh = 0;
  std::size_t threads = 1;
  bool timing = true;

  std::vector<double> resolved_weights() const;
  void validate(std::size_t n_datasets) const;
};

struct HeContext {
  std::shared_ptr<const Evaluator> evaluator;
  std::shared_ptr<const Decryptor> decryptor;
};

struct PartialGlobalModel {
  std::optional<Ciphertext> encrypted_part;  // over mask.encrypted_indices()
  std::vector<double> clear_part;            // over mask.clear_indices()
  std::uint64_t mask_id = 0;
  std::size_t round = 0;
};

struct PartialLocalModel {
  std::size_t client = 0;
  std::optional<Ciphertext> encrypted_part;
  std::vector<double> clear_part;
  std::uint64_t mask_id = 0;
  std::size_t round = 0;
};

struct RoundMetrics {
  std::size_t round = 0;
  long client = -1;  // -1 for the server
  std::string phase;
  std::size_t bytes_up = 0;
  std::size_t bytes_down = 0;
  double enc_ms = 0.0;
  double agg_ms = 0.0;
  double dec_ms = 0.0;
  double train_ms = 0.0;
  double epsilon_round = 0.0;
  double epsilon_total = 0.0;
};

struct ProtocolResult {
  ParamVector final_model;
  EncryptionMask mask;
  std::vector<double> global_sensitivity;
  std::vector<RoundMetrics> metrics;
  std::vector<double> epsilon_per_client;
  std::size_t encrypted_bytes_up = 0;
  std::size_t clear_bytes_up = 0;
};

ProtocolResult run_protocol(const RoundConfig& cfg, const ModelShape& shape, std::span<const Dataset> datasets,
                            const HeContext& he);

// Per-round client work. Randomness comes from (seed, client, round).
struct ClientContext {
  std::size_t id = 0;
  const Dataset* data = nullptr;
  const Evaluator* evaluator = nullptr;
  const Decryptor* decryptor = nullptr;
  std::uint64_t seed = 0;
};

struct ClientUpdate {
  PartialLocalModel upload;
  double epsilon = 0.0;
  double dec_ms = 0.0;
  double train_ms = 0.0;
  double enc_ms = 0.0;
};

ClientUpdate client_update(const ClientContext& client, const ModelShape& shape, const PartialGlobalModel& global,
                           const EncryptionMask& mask, const TrainOptions& train,
                           const std::optional<DpSettings>& dp, std::size_t round, bool timing = false);

PartialGlobalModel server_aggregate(std::span<const PartialLocalModel> uploads, std::span<const double> weights,
                                    const Evaluator& evaluator);

// Weights of the arrived clients, in arrived order, renormalized to sum to 1.
std::vector<double> handle_dropout(std::span<const std::size_t> expected, std::span<const std::size_t> arrived,
                                   std::span<const double> weights);

PartialGlobalModel split_global(std::span<const double> params, const EncryptionMask& mask,
                                const Evaluator& evaluator, Rng& rng, std::size_t round);
ParamVector decrypt_merge(const PartialGlobalModel& global, const EncryptionMask& mask, const Decryptor& decryptor);

std::size_t upload_bytes(const PartialLocalModel& m, const Evaluator& evaluator);
std::size_t global_bytes(const PartialGlobalModel& m, const Evaluator& evaluator);

std::string metrics_csv(std::span<const RoundMetrics> metrics, const std::string& header_comment);

}  // namespace selenc

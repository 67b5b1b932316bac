// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtvae/dataset.hpp"
#include "mtvae/model.hpp"

namespace mtvae {

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::int64_t batch_size = 32;
  std::int64_t total_steps = 2000;
  std::int64_t kl_anneal_steps = -1;  // -1 -> 20% of total_steps
  std::int64_t coherence_window = 8;  // K
  double lambda_cycle = 5.0;
  double lambda_motion = 5.0;
  double dropout_keep = 1.0;
  std::int64_t obs_lo = 8;
  std::int64_t obs_hi = 12;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_interval = 0;  // 0: final checkpoint only
  bool grad_clip = false;
  double grad_clip_norm = 5.0;

  std::int64_t resolved_anneal_steps() const {
    return kl_anneal_steps >= 0 ? kl_anneal_steps : total_steps / 5;
  }
};

/// Best-performing motion-coherence weight per variant (5 for the additive
/// model, 20 otherwise).
double default_lambda_motion(Variant v);

/// Linear ramp min(1, step / kl_anneal_steps); 0 anneal steps means constant 1.
double kl_anneal_weight(std::int64_t step, std::int64_t kl_anneal_steps);

struct OptimizerState {
  std::map<std::string, DenseArray> m;
  std::map<std::string, DenseArray> v;
  std::int64_t step = 0;
};

OptimizerState init_optimizer(const ModelParams& params);

/// Bias-corrected Adam update; `grads` must be keyed exactly like `params`.
void adam_step(ModelParams& params, const std::map<std::string, DenseArray>& grads, OptimizerState& state,
               const TrainConfig& cfg);

struct TraceRow {
  std::int64_t step = 0;
  double total = 0, recon = 0, kl = 0, cycle = 0, motion = 0, kl_weight = 0;
};

std::string trace_header();
std::string format_trace_row(const TraceRow& row);

struct Checkpoint {
  int format_version = 1;
  ModelConfig model;
  TrainConfig train;
  ModelParams params;
  OptimizerState opt;
  std::string rng_state;
  std::int64_t step = 0;
};

struct TrainResult {
  ModelParams params;
  OptimizerState opt;
  std::vector<TraceRow> trace;  // rows for the steps run by this call
  std::string rng_state;
  std::int64_t step = 0;
  ModelConfig model_cfg;  // effective configs (annealing resolved, dropout and
  TrainConfig train_cfg;  // observed-length range folded into the model)

  Checkpoint checkpoint() const;
};

/// Deterministic single-threaded loop: one uniform observed length per batch,
/// switch-aligned windows when the dataset carries mode labels, random
/// windows otherwise. Resuming from a checkpoint continues the interrupted
/// stream bitwise.
TrainResult train(const ModelConfig& model_cfg, const SequenceDataset& data, const TrainConfig& train_cfg,
                  const Checkpoint* resume = nullptr,
                  const std::function<void(const TraceRow&)>& on_step = {},
                  const std::function<void(const Checkpoint&)>& on_checkpoint = {});

/// Single archive: a textual header (version, configs, step, payload digest)
/// followed by named arrays as name, shape, raw little-endian doubles.
/// Writes are atomic (temp file + rename).
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace mtvae

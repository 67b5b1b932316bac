// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mtvae/dataset.hpp"
#include "mtvae/model.hpp"

namespace mtvae {

struct EvalConfig {
  std::int64_t samples_rmse = 50;
  std::int64_t samples_smse = 500;  // shared by S-MSE and the Parzen CLL
  std::int64_t coverage_samples = 100;
  std::int64_t stride = 16;
  double bandwidth = 0.0;  // <= 0: caller selects on the validation set
  std::vector<double> bandwidth_grid;  // empty -> 20 log-spaced in [1e-3, 1e1]
  std::int64_t bandwidth_windows = 20;
  std::uint64_t seed = 0;
  std::int64_t max_windows = 0;  // 0: all
};

std::vector<double> default_bandwidth_grid();

/// Flattened evaluation dimensionality n = T_fut * D.
std::int64_t flattened_eval_dim(std::int64_t future_len, std::int64_t dim);

// Sample-set primitives (the independent oracles recompute these directly).
double total_sq_error(const MotionSequence& a, const MotionSequence& b);
double min_total_sq_error(const std::vector<MotionSequence>& samples, const MotionSequence& target);
/// log(1/n sum_k N(target; sample_k, h^2 I)) over the flattened sequence,
/// evaluated with log-sum-exp.
double parzen_log_density(const std::vector<MotionSequence>& samples, const MotionSequence& target,
                          double bandwidth);

std::vector<MotionSequence> sample_posterior_futures(const ModelParams& params, const ModelConfig& cfg,
                                                     const MotionSequence& s_a, const MotionSequence& s_b,
                                                     std::int64_t n, Rng& rng);
std::vector<MotionSequence> sample_prior_futures(const ModelParams& params, const ModelConfig& cfg,
                                                 const MotionSequence& s_a, std::int64_t n,
                                                 std::int64_t future_len, Rng& rng);

/// Best-of-n reconstruction error with recognition-model samples; empty for
/// the deterministic variant.
std::optional<double> r_mse(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& s_a,
                            const MotionSequence& s_b, std::int64_t n, Rng& rng);
/// Best-of-n error with prior samples; PredictionLSTM contributes its single
/// deterministic prediction.
double s_mse(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& s_a,
             const MotionSequence& s_b, std::int64_t n, Rng& rng);
double parzen_cll(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& s_a,
                  const MotionSequence& s_b, std::int64_t n, double bandwidth, Rng& rng);

struct BandwidthSelection {
  double best = 0.0;
  std::vector<std::pair<double, double>> table;  // (bandwidth, mean CLL)
};

BandwidthSelection select_bandwidth(const ModelParams& params, const ModelConfig& cfg,
                                    const SequenceDataset& validation, const EvalConfig& ecfg);

/// Fraction of the known synthetic modes reached by n prior samples.
double mode_coverage_for_context(const ModelParams& params, const ModelConfig& cfg,
                                 const MotionSequence& context, std::int64_t n, const SyntheticSpec& spec,
                                 Rng& rng);

struct Aggregate {
  double mean = 0.0;
  double se = 0.0;  // standard error over windows
  std::int64_t n = 0;
};

Aggregate aggregate(const std::vector<double>& values);

struct WindowMetrics {
  double r_mse = 0.0;
  double s_mse = 0.0;
  double cll = 0.0;
  double coverage = 0.0;
  bool has_r = false;
  bool has_coverage = false;
};

struct EvalReport {
  std::string variant;
  std::string split;
  std::int64_t windows = 0;
  double bandwidth = 0.0;
  std::vector<WindowMetrics> per_window;
  Aggregate r_mse, s_mse, cll, coverage;
  bool has_r = false;
  bool has_coverage = false;
  nlohmann::json config_echo;
};

/// Strided windows for plain datasets, switch-aligned windows when the
/// dataset carries synthetic labels. Per-window RNG streams derive from
/// (seed, window index) so the report is independent of evaluation order.
EvalReport evaluate(const ModelParams& params, const ModelConfig& cfg, const SequenceDataset& ds,
                    const EvalConfig& ecfg, const SyntheticSpec* spec = nullptr);

std::string format_report(const EvalReport& report);
nlohmann::json report_to_json(const EvalReport& report);

}  // namespace mtvae

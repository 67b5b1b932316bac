// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtvae/seqnet.hpp"

namespace mtvae {

enum class Variant { PredictionLstm, VanillaVae, MtVaeConcat, MtVaeAdd };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::MtVaeAdd;
  bool context_free = false;  // MT-VAE (add) ablation: latent decoder ignores e_A
  std::int64_t dim = 4;       // D, frame width
  std::int64_t hidden = 64;   // H; the motion feature width N_e is tied to H
  std::int64_t latent = 8;    // N_z
  std::int64_t latent_hidden = 0;  // fully-connected width; 0 -> max(hidden, latent)
  std::int64_t obs_lo = 8;
  std::int64_t obs_hi = 12;
  std::int64_t future_len = 16;
  bool layer_norm = true;
  double ln_epsilon = 1e-5;
  double dropout_keep = 1.0;
  bool teacher_forcing = false;

  std::int64_t feature_dim() const { return hidden; }
  std::int64_t latent_net_width() const { return latent_hidden > 0 ? latent_hidden : std::max(hidden, latent); }
  bool is_vae() const { return variant != Variant::PredictionLstm; }
  bool has_latent_decoder() const { return variant == Variant::MtVaeConcat || variant == Variant::MtVaeAdd; }
  /// Width of the feature consumed by the sequence decoder.
  std::int64_t decoder_feature_dim() const {
    return variant == Variant::VanillaVae ? hidden + latent : hidden;
  }
  /// Input width of the latent encoder net.
  std::int64_t latent_encoder_input_dim() const {
    return variant == Variant::MtVaeAdd ? hidden : 2 * hidden;
  }
  /// Input width of the latent decoder net.
  std::int64_t latent_decoder_input_dim() const {
    return (variant == Variant::MtVaeAdd && context_free) ? latent : latent + hidden;
  }
};

/// Named trainable arrays for one model instance. The name set and shapes
/// are a pure function of the config.
struct ModelParams {
  std::map<std::string, DenseArray> values;

  const DenseArray& at(const std::string& name) const;
  DenseArray& at(const std::string& name);
};

struct ParamSpec {
  std::string name;
  std::vector<std::int64_t> shape;
};

std::vector<ParamSpec> param_specs(const ModelConfig& cfg);
/// Scaled-uniform fan-in initialization; forget-gate biases start at 1, the
/// latent encoder output layer starts at zero so training begins at the prior.
ModelParams init_params(const ModelConfig& cfg, Rng& rng);
void validate_params(const ModelParams& params, const ModelConfig& cfg);

/// Recognition-model output (mu, log sigma^2); rows = batch.
struct LatentGaussian {
  DenseArray mu;
  DenseArray log_var;
};

double kl_divergence(const LatentGaussian& g);
DenseArray reparameterize(const LatentGaussian& g, Rng& rng);
DenseArray reparameterize_with(const LatentGaussian& g, const DenseArray& eps);

// ---------------------------------------------------------------------------
// Graph-level model. Parameters are bound onto a tape once per step; the
// builders below compose the variant-specific graphs.

struct FcLayerVars {
  Var w, b, ln_g, ln_b;
  Var skip_w;  // only when input and output widths differ
  bool has_skip_w = false;
};

struct LatentNetVars {
  FcLayerVars l1, l2;
  Var w_out, b_out;
};

struct BoundModel {
  ModelConfig cfg;
  LstmVars enc;
  DecoderVars dec;
  LatentNetVars lat_enc;  // valid when cfg.is_vae()
  LatentNetVars lat_dec;  // valid when cfg.has_latent_decoder()
  std::map<std::string, Var> handles;
};

BoundModel bind_params(Tape& tape, const ModelParams& params, const ModelConfig& cfg);

struct GaussianV {
  Var mu, log_var;
};

/// Three fully-connected layers with skip connections; the output layer is
/// linear. `x` is the net input (concatenated features or a difference).
Var latent_net_forward(const LatentNetVars& net, Var x, const ModelConfig& cfg);

GaussianV latent_encode_g(const BoundModel& m, Var e_a, Var e_b);
/// z -> T* for the additive variant (before the e_A + T* interaction).
Var latent_transform_g(const BoundModel& m, Var z, Var e_a);
Var latent_decode_g(const BoundModel& m, Var z, Var e_a);
/// Variant routing for the feature consumed by the sequence decoder.
Var decoder_feature_g(const BoundModel& m, Var z, Var e_a);

struct TrainBatch {
  std::vector<DenseArray> obs;  // T_obs arrays of [B x D]
  std::vector<DenseArray> fut;  // T_fut arrays of [B x D]
};

struct LossVars {
  Var total, recon, kl, cycle, motion;
  bool has_kl = false, has_cycle = false, has_motion = false;
};

/// Full training objective: reconstruction via the recognition sample, the
/// weighted KL, and (for the MT-VAE variants) cycle consistency and motion
/// coherence computed from one shared prior sample.
LossVars build_loss(Tape& tape, const BoundModel& m, const TrainBatch& batch, Rng& rng, double kl_weight,
                    double lambda_cycle, double lambda_motion, std::int64_t coherence_window, bool training);

// ---------------------------------------------------------------------------
// Value-level operations (ephemeral single-example graphs).

DenseArray encode_sequence(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& seq);
MotionSequence decode_sequence(const ModelParams& params, const ModelConfig& cfg, const DenseArray& feature,
                               const std::vector<double>& last_observed, std::int64_t steps);

LatentGaussian latent_encode(const ModelParams& params, const ModelConfig& cfg, const DenseArray& e_a,
                             const DenseArray& e_b);
DenseArray latent_transform(const ModelParams& params, const ModelConfig& cfg, const DenseArray& z,
                            const DenseArray& e_a);
DenseArray latent_decode(const ModelParams& params, const ModelConfig& cfg, const DenseArray& z,
                         const DenseArray& e_a);
LatentGaussian posterior_gaussian(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& s_a,
                                  const MotionSequence& s_b);

double reconstruction_loss(const MotionSequence& predicted, const MotionSequence& target);
double cycle_loss(const ModelParams& params, const ModelConfig& cfg, const DenseArray& e_a, Rng& rng);
double motion_coherence_loss(const MotionSequence& generated, const MotionSequence& target,
                             const std::vector<double>& last_observed, std::int64_t window);

struct TotalLoss {
  double total = 0, recon = 0, kl = 0, cycle = 0, motion = 0;
};

TotalLoss total_loss(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& s_a,
                     const MotionSequence& s_b, Rng& rng, double kl_weight, double lambda_cycle,
                     double lambda_motion, std::int64_t coherence_window);

/// Generates the future sequence. VAE variants require z (prior or
/// recognition sample); PredictionLSTM ignores it and reports via `warning`.
MotionSequence predict_future(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& s_a,
                              const std::optional<DenseArray>& z, std::int64_t future_len,
                              std::string* warning = nullptr);

/// Batched generation: one future per row of `zs` ([n x N_z]), sharing the
/// encoded context. Used by the sampling metrics.
std::vector<MotionSequence> generate_futures(const ModelParams& params, const ModelConfig& cfg,
                                             const MotionSequence& s_a, const DenseArray& zs,
                                             std::int64_t future_len);

/// Feature-space analogy e_D for the transfer A:B :: C:D. VAE variants use
/// the recognition mean (sigma = 0); PredictionLSTM uses e_B + (e_C - e_A).
DenseArray analogy_feature(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& a,
                           const MotionSequence& b, const MotionSequence& c);
MotionSequence analogy_transfer(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& a,
                                const MotionSequence& b, const MotionSequence& c, std::int64_t future_len);

}  // namespace mtvae

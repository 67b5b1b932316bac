// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mtvae/tape.hpp"

namespace mtvae {

/// One motion sequence: T frames of D coordinates, row-major [T x D].
struct MotionSequence {
  DenseArray frames;  // rank-2 [T x D]

  MotionSequence() = default;
  explicit MotionSequence(DenseArray f);

  std::int64_t length() const { return frames.rows(); }
  std::int64_t dim() const { return frames.cols(); }
  std::vector<double> frame(std::int64_t t) const;
  std::vector<double> last_frame() const { return frame(length() - 1); }
};

/// LSTM cell parameters as tape handles. Gate order within the 4H axis is
/// (input, forget, cell-candidate, output).
struct LstmVars {
  Var w_input;   // [4H x D_in]
  Var w_hidden;  // [4H x H]
  Var bias;      // [4H]
  Var ln_gain;   // [4H], used when layer norm is enabled
  Var ln_bias;   // [4H]
};

struct LstmStateV {
  Var h;  // [B x H]
  Var c;  // [B x H]
};

struct CellOptions {
  bool layer_norm = true;
  double ln_epsilon = 1e-5;
  double dropout_keep = 1.0;  // applied to step inputs in training mode
  bool training = false;
  Rng* rng = nullptr;
};

/// Single LSTM update with optional per-gate layer normalization of the
/// summed pre-activations.
LstmStateV lstm_step(const LstmVars& p, const LstmStateV& state, Var input, const CellOptions& opt);

LstmStateV lstm_zero_state(Tape& tape, std::int64_t batch, std::int64_t hidden);

/// Runs the encoder over `frames` (one Var of shape [B x D] per time step)
/// and returns the final hidden state: the motion feature e, [B x H].
Var encode_frames(Tape& tape, const LstmVars& p, const std::vector<Var>& frames, std::int64_t hidden,
                  const CellOptions& opt);

/// Decoder parameters: the LSTM cell plus the feature-to-initial-state
/// projections and the per-step frame readout.
struct DecoderVars {
  LstmVars cell;
  Var w_init_h;  // [H x F]
  Var b_init_h;  // [H]
  Var w_init_c;  // [H x F]
  Var b_init_c;  // [H]
  Var w_out;     // [D x H]
  Var b_out;     // [D]
};

/// Autoregressive rollout of `steps` frames. Initial state comes from two
/// learned projections of the feature; each step consumes
/// [previous frame || feature] and emits a frame through a linear readout.
/// When `forced_inputs` is non-empty (teacher forcing), step t > 0 consumes
/// forced_inputs[t-1] instead of the previous output.
std::vector<Var> decode_frames(Tape& tape, const DecoderVars& p, Var feature, Var last_frame,
                               std::int64_t steps, const CellOptions& opt,
                               const std::vector<Var>& forced_inputs = {});

}  // namespace mtvae

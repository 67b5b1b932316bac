// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "mtvae/seqnet.hpp"

#include <stdexcept>

namespace mtvae {

MotionSequence::MotionSequence(DenseArray f) : frames(std::move(f)) {
  if (frames.rank() != 2) throw std::invalid_argument("MotionSequence: frames must be rank-2, got " + frames.shape_str());
}

std::vector<double> MotionSequence::frame(std::int64_t t) const {
  if (t < 0 || t >= length()) throw std::out_of_range("MotionSequence: frame index " + std::to_string(t));
  const std::int64_t d = dim();
  std::vector<double> out(static_cast<std::size_t>(d));
  for (std::int64_t j = 0; j < d; ++j) out[static_cast<std::size_t>(j)] = frames[t * d + j];
  return out;
}

LstmStateV lstm_zero_state(Tape& tape, std::int64_t batch, std::int64_t hidden) {
  return {tape.constant(DenseArray({batch, hidden})), tape.constant(DenseArray({batch, hidden}))};
}

LstmStateV lstm_step(const LstmVars& p, const LstmStateV& state, Var input, const CellOptions& opt) {
  const std::int64_t hidden = state.h.value().cols();
  Var x = input;
  if (opt.training && opt.dropout_keep < 1.0) {
    x = dropout(x, opt.dropout_keep, *opt.rng, true);
  }
  // pre-activations [B x 4H]
  Var pre = add_rowvec(add(matmul_nt(x, p.w_input), matmul_nt(state.h, p.w_hidden)), p.bias);

  auto gate = [&](std::int64_t k) {
    Var g = slice_cols(pre, k * hidden, (k + 1) * hidden);
    if (opt.layer_norm) {
      Var gain = slice_cols(p.ln_gain, k * hidden, (k + 1) * hidden);
      Var bias = slice_cols(p.ln_bias, k * hidden, (k + 1) * hidden);
      g = layer_norm(g, gain, bias, opt.ln_epsilon);
    }
    return g;
  };

  Var gi = sigmoid(gate(0));
  Var gf = sigmoid(gate(1));
  Var gc = tanh(gate(2));
  Var go = sigmoid(gate(3));

  Var c_next = add(mul(gf, state.c), mul(gi, gc));
  Var h_next = mul(go, tanh(c_next));
  return {h_next, c_next};
}

Var encode_frames(Tape& tape, const LstmVars& p, const std::vector<Var>& frames, std::int64_t hidden,
                  const CellOptions& opt) {
  if (frames.empty()) throw std::invalid_argument("encode_frames: empty sequence");
  const std::int64_t batch = frames.front().value().rows();
  LstmStateV state = lstm_zero_state(tape, batch, hidden);
  for (const Var& x : frames) state = lstm_step(p, state, x, opt);
  return state.h;
}

std::vector<Var> decode_frames(Tape& tape, const DecoderVars& p, Var feature, Var last_frame,
                               std::int64_t steps, const CellOptions& opt,
                               const std::vector<Var>& forced_inputs) {
  if (steps < 1) throw std::invalid_argument("decode_frames: steps must be >= 1");
  (void)tape;
  LstmStateV state{add_rowvec(matmul_nt(feature, p.w_init_h), p.b_init_h),
                   add_rowvec(matmul_nt(feature, p.w_init_c), p.b_init_c)};
  std::vector<Var> out;
  out.reserve(static_cast<std::size_t>(steps));
  Var prev = last_frame;
  for (std::int64_t t = 0; t < steps; ++t) {
    Var x = concat_cols(prev, feature);
    state = lstm_step(p.cell, state, x, opt);
    Var frame = add_rowvec(matmul_nt(state.h, p.w_out), p.b_out);
    out.push_back(frame);
    if (!forced_inputs.empty() && t + 1 < steps) {
      prev = forced_inputs[static_cast<std::size_t>(t)];
    } else {
      prev = frame;
    }
  }
  return out;
}

}  // namespace mtvae

// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mtvae/dataset.hpp"
#include "mtvae/model.hpp"
#include "mtvae/seqnet.hpp"
#include "mtvae/train.hpp"
#include "testutil.hpp"

using namespace mtvae;
namespace tu = mtvae::testutil;

namespace {

constexpr std::int64_t kH = 4;
constexpr std::int64_t kD = 3;

LstmVars zero_lstm(Tape& t, std::int64_t h, std::int64_t d_in) {
  LstmVars v;
  v.w_input = t.leaf(DenseArray({4 * h, d_in}));
  v.w_hidden = t.leaf(DenseArray({4 * h, h}));
  v.bias = t.leaf(DenseArray({4 * h}));
  v.ln_gain = t.leaf(DenseArray({4 * h}));
  v.ln_bias = t.leaf(DenseArray({4 * h}));
  return v;
}

}  // namespace

TEST_SUITE("seqnet") {

TEST_CASE("zero parameters, zero state, zero input give zero next state") {
  Tape t;
  LstmVars p = zero_lstm(t, kH, kD);
  LstmStateV s = lstm_zero_state(t, 1, kH);
  Var x = t.constant(DenseArray({1, kD}));
  CellOptions opt;
  opt.layer_norm = true;
  LstmStateV next = lstm_step(p, s, x, opt);
  for (std::int64_t i = 0; i < kH; ++i) {
    CHECK(next.h.value()[i] == 0.0);
    CHECK(next.c.value()[i] == 0.0);
  }
}

TEST_CASE("saturated forget/input gates preserve the cell state") {
  Tape t;
  Rng rng(3);
  LstmVars p = zero_lstm(t, kH, kD);
  DenseArray bias({4 * kH});
  for (std::int64_t i = kH; i < 2 * kH; ++i) bias[i] = 20.0;  // forget -> ~1
  for (std::int64_t i = 0; i < kH; ++i) bias[i] = -20.0;      // input -> ~0
  p.bias = t.leaf(bias);
  DenseArray c0 = tu::random_array({1, kH}, rng, -0.8, 0.8);
  LstmStateV s{t.constant(DenseArray({1, kH})), t.constant(c0)};
  Var x = t.constant(tu::random_array({1, kD}, rng));
  CellOptions opt;
  opt.layer_norm = false;  // saturation test runs on the raw cell
  LstmStateV next = lstm_step(p, s, x, opt);
  for (std::int64_t i = 0; i < kH; ++i) {
    CHECK(std::abs(next.c.value()[i] - c0[i]) < 1e-6);
  }
}

TEST_CASE("lstm_step dimension mismatch is rejected") {
  Tape t;
  LstmVars p = zero_lstm(t, kH, kD);
  LstmStateV s = lstm_zero_state(t, 1, kH);
  Var bad = t.constant(DenseArray({1, kD + 1}));
  CellOptions opt;
  CHECK_THROWS_AS(lstm_step(p, s, bad, opt), std::invalid_argument);
}

TEST_CASE("lstm_step gradients match finite differences") {
  Rng rng(17);
  std::vector<DenseArray> inputs{tu::random_array({4 * kH, kD}, rng, -0.5, 0.5),
                                 tu::random_array({4 * kH, kH}, rng, -0.5, 0.5),
                                 tu::random_array({4 * kH}, rng, -0.5, 0.5),
                                 tu::random_array({4 * kH}, rng, 0.5, 1.5),
                                 tu::random_array({4 * kH}, rng, -0.5, 0.5),
                                 tu::random_array({2, kH}, rng, -0.5, 0.5),
                                 tu::random_array({2, kH}, rng, -0.5, 0.5),
                                 tu::random_array({2, kD}, rng, -0.5, 0.5)};
  auto build = [](Tape&, const std::vector<Var>& in) {
    LstmVars p{in[0], in[1], in[2], in[3], in[4]};
    LstmStateV s{in[5], in[6]};
    CellOptions opt;
    opt.layer_norm = true;
    LstmStateV next = lstm_step(p, s, in[7], opt);
    return sum(next.h);
  };
  CHECK(tu::max_grad_rel_err(inputs, build) <= 1e-6);
}

TEST_CASE("encode_sequence basics") {
  ModelConfig cfg;
  cfg.variant = Variant::PredictionLstm;
  cfg.dim = kD;
  cfg.hidden = 8;
  Rng rng(5);
  ModelParams zero = init_params(cfg, rng);
  for (auto& [name, arr] : zero.values) {
    for (std::int64_t i = 0; i < arr.size(); ++i) arr[i] = 0.0;
  }
  MotionSequence seq = tu::random_sequence(6, kD, rng);
  DenseArray e = encode_sequence(zero, cfg, seq);
  CHECK(e.size() == 8);
  for (std::int64_t i = 0; i < e.size(); ++i) CHECK(e[i] == 0.0);

  ModelParams params = tu::randomized_params(cfg, rng);
  DenseArray e1 = encode_sequence(params, cfg, seq);
  DenseArray e2 = encode_sequence(params, cfg, seq);
  CHECK(tu::arrays_equal(e1, e2));  // inference determinism

  CHECK_THROWS_AS(encode_sequence(params, cfg, MotionSequence{}), std::invalid_argument);
}

TEST_CASE("frame permutation changes the encoding of a trained model") {
  SyntheticSpec spec;
  spec.train_n = 40;
  spec.val_n = 2;
  spec.test_n = 2;
  DataBundle data = gen_synthetic(spec);
  ModelConfig mc;
  mc.variant = Variant::MtVaeAdd;
  mc.dim = data.train.dim;
  TrainConfig tc;
  tc.total_steps = 40;
  tc.batch_size = 8;
  tc.seed = 11;
  TrainResult r = train(mc, data.train, tc);

  MotionSequence seq = data.test.records[0].seq;
  MotionSequence permuted = seq;
  const std::int64_t d = seq.dim();
  for (std::int64_t j = 0; j < d; ++j) {  // swap first and last frames
    std::swap(permuted.frames.raw()[static_cast<std::size_t>(j)],
              permuted.frames.raw()[static_cast<std::size_t>((seq.length() - 1) * d + j)]);
  }
  DenseArray e1 = encode_sequence(r.params, r.model_cfg, seq);
  DenseArray e2 = encode_sequence(r.params, r.model_cfg, permuted);
  CHECK_FALSE(tu::arrays_equal(e1, e2));
}

TEST_CASE("decode_sequence contract") {
  ModelConfig cfg;
  cfg.variant = Variant::PredictionLstm;
  cfg.dim = kD;
  cfg.hidden = 8;
  Rng rng(7);
  ModelParams params = tu::randomized_params(cfg, rng);
  DenseArray feature = tu::random_array({8}, rng, -0.5, 0.5);
  std::vector<double> last{0.1, -0.2, 0.3};

  MotionSequence out = decode_sequence(params, cfg, feature, last, 5);
  CHECK(out.length() == 5);
  CHECK(out.dim() == kD);

  MotionSequence again = decode_sequence(params, cfg, feature, last, 5);
  CHECK(tu::arrays_equal(out.frames, again.frames));  // bit-identical rollout

  CHECK_THROWS_AS(decode_sequence(params, cfg, feature, last, 0), std::invalid_argument);

  ModelParams zero = params;
  for (auto& [name, arr] : zero.values) {
    for (std::int64_t i = 0; i < arr.size(); ++i) arr[i] = 0.0;
  }
  MotionSequence flat = decode_sequence(zero, cfg, DenseArray({8}), last, 4);
  for (std::int64_t i = 0; i < flat.frames.size(); ++i) CHECK(flat.frames[i] == 0.0);
}

TEST_CASE("layer norm disabled with zero parameters rolls out a constant") {
  ModelConfig cfg;
  cfg.variant = Variant::PredictionLstm;
  cfg.dim = kD;
  cfg.hidden = 8;
  cfg.layer_norm = false;
  Rng rng(9);
  ModelParams zero = init_params(cfg, rng);
  for (auto& [name, arr] : zero.values) {
    for (std::int64_t i = 0; i < arr.size(); ++i) arr[i] = 0.0;
  }
  MotionSequence out = decode_sequence(zero, cfg, DenseArray({8}), {0.5, 0.5, 0.5}, 6);
  for (std::int64_t t = 1; t < out.length(); ++t) {
    for (std::int64_t j = 0; j < kD; ++j) {
      CHECK(out.frames[t * kD + j] == out.frames[j]);
    }
  }
}

TEST_CASE("encode-decode pipeline gradients match finite differences") {
  // tiny model: D=3, 4 observed frames, H=8, 4 decoded frames
  const std::int64_t h = 8, d = 3, t_obs = 4, t_fut = 4;
  Rng rng(23);
  std::vector<DenseArray> inputs;
  inputs.push_back(tu::random_array({4 * h, d}, rng, -0.4, 0.4));
  inputs.push_back(tu::random_array({4 * h, h}, rng, -0.4, 0.4));
  inputs.push_back(tu::random_array({4 * h}, rng, -0.4, 0.4));
  inputs.push_back(tu::random_array({4 * h}, rng, 0.6, 1.4));
  inputs.push_back(tu::random_array({4 * h}, rng, -0.4, 0.4));
  inputs.push_back(tu::random_array({4 * h, d + h}, rng, -0.4, 0.4));
  inputs.push_back(tu::random_array({4 * h, h}, rng, -0.4, 0.4));
  inputs.push_back(tu::random_array({4 * h}, rng, -0.4, 0.4));
  inputs.push_back(tu::random_array({4 * h}, rng, 0.6, 1.4));
  inputs.push_back(tu::random_array({4 * h}, rng, -0.4, 0.4));
  inputs.push_back(tu::random_array({h, h}, rng, -0.4, 0.4));
  inputs.push_back(tu::random_array({h}, rng, -0.4, 0.4));
  inputs.push_back(tu::random_array({h, h}, rng, -0.4, 0.4));
  inputs.push_back(tu::random_array({h}, rng, -0.4, 0.4));
  inputs.push_back(tu::random_array({d, h}, rng, -0.4, 0.4));
  inputs.push_back(tu::random_array({d}, rng, -0.4, 0.4));
  for (int i = 0; i < t_obs + t_fut; ++i) inputs.push_back(tu::random_array({1, d}, rng, -0.9, 0.9));

  auto build = [=](Tape& tape, const std::vector<Var>& in) {
    LstmVars enc{in[0], in[1], in[2], in[3], in[4]};
    DecoderVars dec;
    dec.cell = LstmVars{in[5], in[6], in[7], in[8], in[9]};
    dec.w_init_h = in[10];
    dec.b_init_h = in[11];
    dec.w_init_c = in[12];
    dec.b_init_c = in[13];
    dec.w_out = in[14];
    dec.b_out = in[15];
    CellOptions opt;
    opt.layer_norm = true;
    std::vector<Var> obs(in.begin() + 16, in.begin() + 16 + t_obs);
    std::vector<Var> fut(in.begin() + 16 + t_obs, in.end());
    Var e = encode_frames(tape, enc, obs, h, opt);
    auto preds = decode_frames(tape, dec, e, obs.back(), t_fut, opt);
    Var acc = sum(abs(sub(preds[0], fut[0])));
    for (std::size_t t = 1; t < preds.size(); ++t) acc = add(acc, sum(abs(sub(preds[t], fut[t]))));
    return scale(acc, 1.0 / static_cast<double>(t_fut * d));
  };
  CHECK(tu::max_grad_rel_err(inputs, build) <= 1e-5);
}

}  // TEST_SUITE

// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "mtvae/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mtvae {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::PredictionLstm: return "pred-lstm";
    case Variant::VanillaVae: return "vanilla-vae";
    case Variant::MtVaeConcat: return "mtvae-concat";
    case Variant::MtVaeAdd: return "mtvae-add";
  }
  return "unknown";
}

Variant variant_from_name(const std::string& name) {
  if (name == "pred-lstm") return Variant::PredictionLstm;
  if (name == "vanilla-vae") return Variant::VanillaVae;
  if (name == "mtvae-concat") return Variant::MtVaeConcat;
  if (name == "mtvae-add") return Variant::MtVaeAdd;
  throw std::invalid_argument("unknown model variant '" + name +
                              "' (expected pred-lstm, vanilla-vae, mtvae-concat, or mtvae-add)");
}

const DenseArray& ModelParams::at(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw std::out_of_range("ModelParams: missing parameter '" + name + "'");
  return it->second;
}

DenseArray& ModelParams::at(const std::string& name) {
  auto it = values.find(name);
  if (it == values.end()) throw std::out_of_range("ModelParams: missing parameter '" + name + "'");
  return it->second;
}

namespace {

void append_lstm_specs(std::vector<ParamSpec>& out, const std::string& prefix, std::int64_t in_dim,
                       std::int64_t hidden, bool layer_norm) {
  out.push_back({prefix + ".w_in", {4 * hidden, in_dim}});
  out.push_back({prefix + ".w_h", {4 * hidden, hidden}});
  out.push_back({prefix + ".b", {4 * hidden}});
  if (layer_norm) {
    out.push_back({prefix + ".ln_g", {4 * hidden}});
    out.push_back({prefix + ".ln_b", {4 * hidden}});
  }
}

void append_fc_specs(std::vector<ParamSpec>& out, const std::string& prefix, std::int64_t in_dim,
                     std::int64_t out_dim, bool layer_norm) {
  out.push_back({prefix + ".w", {out_dim, in_dim}});
  out.push_back({prefix + ".b", {out_dim}});
  if (layer_norm) {
    out.push_back({prefix + ".ln_g", {out_dim}});
    out.push_back({prefix + ".ln_b", {out_dim}});
  }
  if (in_dim != out_dim) out.push_back({prefix + ".skip_w", {out_dim, in_dim}});
}

void append_latent_net_specs(std::vector<ParamSpec>& out, const std::string& prefix, std::int64_t in_dim,
                             std::int64_t out_dim, std::int64_t width, bool layer_norm) {
  append_fc_specs(out, prefix + ".l1", in_dim, width, layer_norm);
  append_fc_specs(out, prefix + ".l2", width, width, layer_norm);
  out.push_back({prefix + ".out.w", {out_dim, width}});
  out.push_back({prefix + ".out.b", {out_dim}});
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::vector<ParamSpec> param_specs(const ModelConfig& cfg) {
  if (cfg.dim < 1 || cfg.hidden < 2 || cfg.latent < 1) {
    throw std::invalid_argument("ModelConfig: dim/hidden/latent out of range");
  }
  std::vector<ParamSpec> out;
  append_lstm_specs(out, "enc", cfg.dim, cfg.hidden, cfg.layer_norm);
  const std::int64_t feat = cfg.decoder_feature_dim();
  append_lstm_specs(out, "dec", cfg.dim + feat, cfg.hidden, cfg.layer_norm);
  out.push_back({"dec.w_init_h", {cfg.hidden, feat}});
  out.push_back({"dec.b_init_h", {cfg.hidden}});
  out.push_back({"dec.w_init_c", {cfg.hidden, feat}});
  out.push_back({"dec.b_init_c", {cfg.hidden}});
  out.push_back({"dec.w_out", {cfg.dim, cfg.hidden}});
  out.push_back({"dec.b_out", {cfg.dim}});
  const std::int64_t width = cfg.latent_net_width();
  if (cfg.is_vae()) {
    append_latent_net_specs(out, "lat_enc", cfg.latent_encoder_input_dim(), 2 * cfg.latent, width,
                            cfg.layer_norm);
  }
  if (cfg.has_latent_decoder()) {
    append_latent_net_specs(out, "lat_dec", cfg.latent_decoder_input_dim(), cfg.hidden, width, cfg.layer_norm);
  }
  return out;
}

ModelParams init_params(const ModelConfig& cfg, Rng& rng) {
  ModelParams params;
  for (const ParamSpec& spec : param_specs(cfg)) {
    DenseArray a(spec.shape);
    if (ends_with(spec.name, ".ln_g")) {
      for (std::int64_t i = 0; i < a.size(); ++i) a[i] = 1.0;
    } else if (spec.name == "lat_enc.out.w" || spec.name == "lat_enc.out.b") {
      // zero start: recognition opens at the prior, KL begins at 0
    } else if (spec.shape.size() == 2) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(spec.shape[1]));
      for (std::int64_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(-bound, bound);
    }
    if ((spec.name == "enc.b" || spec.name == "dec.b" || spec.name == "enc.ln_b" || spec.name == "dec.ln_b")) {
      // forget-gate block starts open
      const std::int64_t h = cfg.hidden;
      for (std::int64_t i = h; i < 2 * h; ++i) a[i] = 1.0;
    }
    params.values.emplace(spec.name, std::move(a));
  }
  return params;
}

void validate_params(const ModelParams& params, const ModelConfig& cfg) {
  const auto specs = param_specs(cfg);
  if (params.values.size() != specs.size()) {
    throw std::invalid_argument("ModelParams: expected " + std::to_string(specs.size()) + " arrays, got " +
                                std::to_string(params.values.size()));
  }
  for (const ParamSpec& spec : specs) {
    const DenseArray& a = params.at(spec.name);
    if (a.shape() != spec.shape) {
      throw std::invalid_argument("ModelParams: '" + spec.name + "' has shape " + a.shape_str() +
                                  ", expected " + shape_to_string(spec.shape));
    }
  }
}

double kl_divergence(const LatentGaussian& g) {
  if (!g.mu.same_shape(g.log_var)) {
    throw std::invalid_argument("kl_divergence: mu " + g.mu.shape_str() + " vs log_var " + g.log_var.shape_str());
  }
  double acc = 0.0;
  for (std::int64_t i = 0; i < g.mu.size(); ++i) {
    acc += std::exp(g.log_var[i]) + g.mu[i] * g.mu[i] - 1.0 - g.log_var[i];
  }
  return 0.5 * acc;
}

DenseArray reparameterize(const LatentGaussian& g, Rng& rng) {
  return reparameterize_with(g, rng.normal_array(g.mu.shape()));
}

DenseArray reparameterize_with(const LatentGaussian& g, const DenseArray& eps) {
  if (!g.mu.same_shape(g.log_var) || !g.mu.same_shape(eps)) {
    throw std::invalid_argument("reparameterize: shape mismatch");
  }
  DenseArray z(g.mu.shape());
  for (std::int64_t i = 0; i < z.size(); ++i) {
    z[i] = g.mu[i] + std::exp(0.5 * g.log_var[i]) * eps[i];
  }
  return z;
}

// ---------------------------------------------------------------------------

namespace {

LstmVars bind_lstm(const std::map<std::string, Var>& h, const std::string& prefix, bool layer_norm) {
  LstmVars v;
  v.w_input = h.at(prefix + ".w_in");
  v.w_hidden = h.at(prefix + ".w_h");
  v.bias = h.at(prefix + ".b");
  if (layer_norm) {
    v.ln_gain = h.at(prefix + ".ln_g");
    v.ln_bias = h.at(prefix + ".ln_b");
  }
  return v;
}

FcLayerVars bind_fc(const std::map<std::string, Var>& h, const std::string& prefix, bool layer_norm) {
  FcLayerVars v;
  v.w = h.at(prefix + ".w");
  v.b = h.at(prefix + ".b");
  if (layer_norm) {
    v.ln_g = h.at(prefix + ".ln_g");
    v.ln_b = h.at(prefix + ".ln_b");
  }
  auto it = h.find(prefix + ".skip_w");
  if (it != h.end()) {
    v.skip_w = it->second;
    v.has_skip_w = true;
  }
  return v;
}

LatentNetVars bind_latent_net(const std::map<std::string, Var>& h, const std::string& prefix, bool layer_norm) {
  LatentNetVars v;
  v.l1 = bind_fc(h, prefix + ".l1", layer_norm);
  v.l2 = bind_fc(h, prefix + ".l2", layer_norm);
  v.w_out = h.at(prefix + ".out.w");
  v.b_out = h.at(prefix + ".out.b");
  return v;
}

CellOptions cell_options(const ModelConfig& cfg, bool training, Rng* rng) {
  CellOptions opt;
  opt.layer_norm = cfg.layer_norm;
  opt.ln_epsilon = cfg.ln_epsilon;
  opt.dropout_keep = cfg.dropout_keep;
  opt.training = training;
  opt.rng = rng;
  return opt;
}

std::vector<Var> sequence_constants(Tape& tape, const MotionSequence& seq) {
  std::vector<Var> out;
  const std::int64_t t_len = seq.length(), d = seq.dim();
  out.reserve(static_cast<std::size_t>(t_len));
  for (std::int64_t t = 0; t < t_len; ++t) {
    DenseArray row({1, d});
    for (std::int64_t j = 0; j < d; ++j) row[j] = seq.frames[t * d + j];
    out.push_back(tape.constant(std::move(row)));
  }
  return out;
}

DenseArray tile_rows(const DenseArray& row, std::int64_t n) {
  const std::int64_t c = row.cols();
  DenseArray out({n, c});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < c; ++j) out[i * c + j] = row[j];
  }
  return out;
}

MotionSequence collect_row(const std::vector<Var>& preds, std::int64_t row, std::int64_t d) {
  const auto t_len = static_cast<std::int64_t>(preds.size());
  DenseArray frames({t_len, d});
  for (std::int64_t t = 0; t < t_len; ++t) {
    const DenseArray& v = preds[static_cast<std::size_t>(t)].value();
    for (std::int64_t j = 0; j < d; ++j) frames[t * d + j] = v.at(row, j);
  }
  return MotionSequence(std::move(frames));
}

DenseArray row_to_vec(const DenseArray& m, std::int64_t row) {
  const std::int64_t c = m.cols();
  DenseArray out({c});
  for (std::int64_t j = 0; j < c; ++j) out[j] = m.at(row, j);
  return out;
}

Var as_row_matrix(Tape& tape, const DenseArray& v) {
  if (v.rank() == 2) return tape.constant(v);
  DenseArray m({1, v.size()});
  for (std::int64_t i = 0; i < v.size(); ++i) m[i] = v[i];
  return tape.constant(std::move(m));
}

}  // namespace

BoundModel bind_params(Tape& tape, const ModelParams& params, const ModelConfig& cfg) {
  validate_params(params, cfg);
  BoundModel m;
  m.cfg = cfg;
  for (const ParamSpec& spec : param_specs(cfg)) {
    m.handles.emplace(spec.name, tape.leaf(params.at(spec.name)));
  }
  m.enc = bind_lstm(m.handles, "enc", cfg.layer_norm);
  m.dec.cell = bind_lstm(m.handles, "dec", cfg.layer_norm);
  m.dec.w_init_h = m.handles.at("dec.w_init_h");
  m.dec.b_init_h = m.handles.at("dec.b_init_h");
  m.dec.w_init_c = m.handles.at("dec.w_init_c");
  m.dec.b_init_c = m.handles.at("dec.b_init_c");
  m.dec.w_out = m.handles.at("dec.w_out");
  m.dec.b_out = m.handles.at("dec.b_out");
  if (cfg.is_vae()) m.lat_enc = bind_latent_net(m.handles, "lat_enc", cfg.layer_norm);
  if (cfg.has_latent_decoder()) m.lat_dec = bind_latent_net(m.handles, "lat_dec", cfg.layer_norm);
  return m;
}

Var latent_net_forward(const LatentNetVars& net, Var x, const ModelConfig& cfg) {
  auto layer = [&](const FcLayerVars& l, Var in) {
    Var pre = add_rowvec(matmul_nt(in, l.w), l.b);
    if (cfg.layer_norm) pre = layer_norm(pre, l.ln_g, l.ln_b, cfg.ln_epsilon);
    Var act = tanh(pre);
    Var skip = l.has_skip_w ? matmul_nt(in, l.skip_w) : in;
    return add(act, skip);
  };
  Var h1 = layer(net.l1, x);
  Var h2 = layer(net.l2, h1);
  return add_rowvec(matmul_nt(h2, net.w_out), net.b_out);
}

GaussianV latent_encode_g(const BoundModel& m, Var e_a, Var e_b) {
  if (!m.cfg.is_vae()) {
    throw std::invalid_argument("latent_encode: unsupported for variant " + variant_name(m.cfg.variant));
  }
  Var input = m.cfg.variant == Variant::MtVaeAdd ? sub(e_b, e_a) : concat_cols(e_a, e_b);
  Var raw = latent_net_forward(m.lat_enc, input, m.cfg);
  const std::int64_t nz = m.cfg.latent;
  return {slice_cols(raw, 0, nz), clamp(slice_cols(raw, nz, 2 * nz), -10.0, 10.0)};
}

Var latent_transform_g(const BoundModel& m, Var z, Var e_a) {
  if (m.cfg.variant != Variant::MtVaeAdd) {
    throw std::invalid_argument("latent_transform: only defined for mtvae-add");
  }
  Var input = m.cfg.context_free ? z : concat_cols(z, e_a);
  return latent_net_forward(m.lat_dec, input, m.cfg);
}

Var latent_decode_g(const BoundModel& m, Var z, Var e_a) {
  switch (m.cfg.variant) {
    case Variant::MtVaeConcat:
      return latent_net_forward(m.lat_dec, concat_cols(z, e_a), m.cfg);
    case Variant::MtVaeAdd:
      return add(e_a, latent_transform_g(m, z, e_a));
    default:
      throw std::invalid_argument("latent_decode: unsupported for variant " + variant_name(m.cfg.variant));
  }
}

Var decoder_feature_g(const BoundModel& m, Var z, Var e_a) {
  switch (m.cfg.variant) {
    case Variant::PredictionLstm:
      return e_a;
    case Variant::VanillaVae:
      return concat_cols(z, e_a);
    default:
      return latent_decode_g(m, z, e_a);
  }
}

LossVars build_loss(Tape& tape, const BoundModel& m, const TrainBatch& batch, Rng& rng, double kl_weight,
                    double lambda_cycle, double lambda_motion, std::int64_t coherence_window, bool training) {
  const ModelConfig& cfg = m.cfg;
  if (kl_weight < 0.0 || kl_weight > 1.0) throw std::invalid_argument("build_loss: kl_weight outside [0,1]");
  if (lambda_cycle < 0.0 || lambda_motion < 0.0) throw std::invalid_argument("build_loss: negative lambda");
  if (batch.obs.empty() || batch.fut.empty()) throw std::invalid_argument("build_loss: empty batch");
  const std::int64_t b = batch.obs.front().rows();
  const auto t_fut = static_cast<std::int64_t>(batch.fut.size());
  const std::int64_t d = cfg.dim;
  if (coherence_window > t_fut) {
    throw std::invalid_argument("build_loss: coherence window " + std::to_string(coherence_window) +
                                " exceeds future length " + std::to_string(t_fut));
  }
  CellOptions opt = cell_options(cfg, training, &rng);

  std::vector<Var> obs, fut;
  obs.reserve(batch.obs.size());
  fut.reserve(batch.fut.size());
  for (const auto& a : batch.obs) obs.push_back(tape.constant(a));
  for (const auto& a : batch.fut) fut.push_back(tape.constant(a));
  Var last = obs.back();

  Var e_a = encode_frames(tape, m.enc, obs, cfg.hidden, opt);

  LossVars out;
  Var feat;
  GaussianV q;
  if (cfg.is_vae()) {
    Var e_b = encode_frames(tape, m.enc, fut, cfg.hidden, opt);
    q = latent_encode_g(m, e_a, e_b);
    Var eps = tape.constant(rng.normal_array({b, cfg.latent}));
    Var z = add(q.mu, mul(exp(scale(q.log_var, 0.5)), eps));
    feat = decoder_feature_g(m, z, e_a);
  } else {
    feat = e_a;
  }

  std::vector<Var> forced;
  if (cfg.teacher_forcing && t_fut > 1) forced.assign(fut.begin(), fut.end() - 1);
  std::vector<Var> preds = decode_frames(tape, m.dec, feat, last, t_fut, opt, forced);

  Var recon_acc = sum(abs(sub(preds[0], fut[0])));
  for (std::int64_t t = 1; t < t_fut; ++t) {
    recon_acc = add(recon_acc, sum(abs(sub(preds[static_cast<std::size_t>(t)], fut[static_cast<std::size_t>(t)]))));
  }
  out.recon = scale(recon_acc, 1.0 / static_cast<double>(b * t_fut * d));
  Var total = out.recon;

  if (cfg.is_vae()) {
    Var t1 = sub(add_const(add(exp(q.log_var), square(q.mu)), -1.0), q.log_var);
    out.kl = mean(scale(row_sum(t1), 0.5));
    out.has_kl = true;
    total = add(total, scale(out.kl, kl_weight));
  }

  const bool want_cycle = cfg.has_latent_decoder() && lambda_cycle > 0.0;
  const bool want_motion = cfg.has_latent_decoder() && lambda_motion > 0.0 && coherence_window > 0;
  if (want_cycle || want_motion) {
    Var z0 = tape.constant(rng.normal_array({b, cfg.latent}));
    Var t_star, feat0;
    if (cfg.variant == Variant::MtVaeAdd) {
      t_star = latent_transform_g(m, z0, e_a);
      feat0 = add(e_a, t_star);
    } else {
      feat0 = latent_decode_g(m, z0, e_a);
    }
    if (want_cycle) {
      Var z_star_mu;
      if (cfg.variant == Variant::MtVaeAdd) {
        Var raw = latent_net_forward(m.lat_enc, t_star, cfg);
        z_star_mu = slice_cols(raw, 0, cfg.latent);
      } else {
        z_star_mu = latent_encode_g(m, e_a, feat0).mu;
      }
      out.cycle = mean(sqrt(row_sum(square(sub(z_star_mu, z0)))));
      out.has_cycle = true;
      total = add(total, scale(out.cycle, lambda_cycle));
    }
    if (want_motion) {
      std::vector<Var> gen = decode_frames(tape, m.dec, feat0, last, coherence_window, opt);
      Var acc;
      for (std::int64_t t = 0; t < coherence_window; ++t) {
        Var v_gen = t == 0 ? sub(gen[0], last)
                           : sub(gen[static_cast<std::size_t>(t)], gen[static_cast<std::size_t>(t - 1)]);
        Var v_ref = t == 0 ? sub(fut[0], last)
                           : sub(fut[static_cast<std::size_t>(t)], fut[static_cast<std::size_t>(t - 1)]);
        Var term = mean(sqrt(row_sum(square(sub(v_gen, v_ref)))));
        acc = t == 0 ? term : add(acc, term);
      }
      out.motion = scale(acc, 1.0 / static_cast<double>(coherence_window));
      out.has_motion = true;
      total = add(total, scale(out.motion, lambda_motion));
    }
  }
  out.total = total;
  return out;
}

// ---------------------------------------------------------------------------
// Value-level operations.

DenseArray encode_sequence(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& seq) {
  if (seq.frames.size() == 0) throw std::invalid_argument("encode_sequence: empty sequence");
  if (seq.dim() != cfg.dim) {
    throw std::invalid_argument("encode_sequence: frame width " + std::to_string(seq.dim()) +
                                " does not match model dim " + std::to_string(cfg.dim));
  }
  Tape tape;
  BoundModel m = bind_params(tape, params, cfg);
  Var e = encode_frames(tape, m.enc, sequence_constants(tape, seq), cfg.hidden, cell_options(cfg, false, nullptr));
  return row_to_vec(e.value(), 0);
}

MotionSequence decode_sequence(const ModelParams& params, const ModelConfig& cfg, const DenseArray& feature,
                               const std::vector<double>& last_observed, std::int64_t steps) {
  if (steps < 1) throw std::invalid_argument("decode_sequence: steps must be >= 1");
  if (feature.size() != cfg.decoder_feature_dim()) {
    throw std::invalid_argument("decode_sequence: feature length " + std::to_string(feature.size()) +
                                " does not match decoder width " + std::to_string(cfg.decoder_feature_dim()));
  }
  if (static_cast<std::int64_t>(last_observed.size()) != cfg.dim) {
    throw std::invalid_argument("decode_sequence: last_observed width mismatch");
  }
  Tape tape;
  BoundModel m = bind_params(tape, params, cfg);
  Var feat = as_row_matrix(tape, feature);
  Var last = tape.constant(DenseArray({1, cfg.dim}, std::vector<double>(last_observed)));
  auto preds = decode_frames(tape, m.dec, feat, last, steps, cell_options(cfg, false, nullptr));
  return collect_row(preds, 0, cfg.dim);
}

LatentGaussian latent_encode(const ModelParams& params, const ModelConfig& cfg, const DenseArray& e_a,
                             const DenseArray& e_b) {
  Tape tape;
  BoundModel m = bind_params(tape, params, cfg);
  GaussianV g = latent_encode_g(m, as_row_matrix(tape, e_a), as_row_matrix(tape, e_b));
  return {row_to_vec(g.mu.value(), 0), row_to_vec(g.log_var.value(), 0)};
}

DenseArray latent_transform(const ModelParams& params, const ModelConfig& cfg, const DenseArray& z,
                            const DenseArray& e_a) {
  Tape tape;
  BoundModel m = bind_params(tape, params, cfg);
  Var t = latent_transform_g(m, as_row_matrix(tape, z), as_row_matrix(tape, e_a));
  return row_to_vec(t.value(), 0);
}

DenseArray latent_decode(const ModelParams& params, const ModelConfig& cfg, const DenseArray& z,
                         const DenseArray& e_a) {
  Tape tape;
  BoundModel m = bind_params(tape, params, cfg);
  Var e = latent_decode_g(m, as_row_matrix(tape, z), as_row_matrix(tape, e_a));
  return row_to_vec(e.value(), 0);
}

LatentGaussian posterior_gaussian(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& s_a,
                                  const MotionSequence& s_b) {
  Tape tape;
  BoundModel m = bind_params(tape, params, cfg);
  CellOptions opt = cell_options(cfg, false, nullptr);
  Var e_a = encode_frames(tape, m.enc, sequence_constants(tape, s_a), cfg.hidden, opt);
  Var e_b = encode_frames(tape, m.enc, sequence_constants(tape, s_b), cfg.hidden, opt);
  GaussianV g = latent_encode_g(m, e_a, e_b);
  return {row_to_vec(g.mu.value(), 0), row_to_vec(g.log_var.value(), 0)};
}

double reconstruction_loss(const MotionSequence& predicted, const MotionSequence& target) {
  if (!predicted.frames.same_shape(target.frames)) {
    throw std::invalid_argument("reconstruction_loss: shape mismatch " + predicted.frames.shape_str() + " vs " +
                                target.frames.shape_str());
  }
  double acc = 0.0;
  for (std::int64_t i = 0; i < predicted.frames.size(); ++i) {
    acc += std::abs(predicted.frames[i] - target.frames[i]);
  }
  return acc / static_cast<double>(predicted.frames.size());
}

double cycle_loss(const ModelParams& params, const ModelConfig& cfg, const DenseArray& e_a, Rng& rng) {
  if (!cfg.has_latent_decoder()) {
    throw std::invalid_argument("cycle_loss: unsupported for variant " + variant_name(cfg.variant));
  }
  Tape tape;
  BoundModel m = bind_params(tape, params, cfg);
  Var ea = as_row_matrix(tape, e_a);
  Var z0 = tape.constant(rng.normal_array({1, cfg.latent}));
  Var z_star_mu;
  if (cfg.variant == Variant::MtVaeAdd) {
    Var t_star = latent_transform_g(m, z0, ea);
    z_star_mu = slice_cols(latent_net_forward(m.lat_enc, t_star, cfg), 0, cfg.latent);
  } else {
    z_star_mu = latent_encode_g(m, ea, latent_decode_g(m, z0, ea)).mu;
  }
  return mean(sqrt(row_sum(square(sub(z_star_mu, z0))))).value()[0];
}

double motion_coherence_loss(const MotionSequence& generated, const MotionSequence& target,
                             const std::vector<double>& last_observed, std::int64_t window) {
  if (window == 0) return 0.0;
  if (window < 0 || window > generated.length() || window > target.length()) {
    throw std::invalid_argument("motion_coherence_loss: window " + std::to_string(window) +
                                " exceeds sequence length");
  }
  const std::int64_t d = generated.dim();
  if (target.dim() != d || static_cast<std::int64_t>(last_observed.size()) != d) {
    throw std::invalid_argument("motion_coherence_loss: dimension mismatch");
  }
  double acc = 0.0;
  for (std::int64_t t = 0; t < window; ++t) {
    double sq = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      const double vg = generated.frames[t * d + j] - (t == 0 ? last_observed[static_cast<std::size_t>(j)]
                                                              : generated.frames[(t - 1) * d + j]);
      const double vt = target.frames[t * d + j] -
                        (t == 0 ? last_observed[static_cast<std::size_t>(j)] : target.frames[(t - 1) * d + j]);
      sq += (vg - vt) * (vg - vt);
    }
    acc += std::sqrt(sq);
  }
  return acc / static_cast<double>(window);
}

TotalLoss total_loss(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& s_a,
                     const MotionSequence& s_b, Rng& rng, double kl_weight, double lambda_cycle,
                     double lambda_motion, std::int64_t coherence_window) {
  TrainBatch batch;
  const std::int64_t d = cfg.dim;
  for (std::int64_t t = 0; t < s_a.length(); ++t) {
    DenseArray row({1, d});
    for (std::int64_t j = 0; j < d; ++j) row[j] = s_a.frames[t * d + j];
    batch.obs.push_back(std::move(row));
  }
  for (std::int64_t t = 0; t < s_b.length(); ++t) {
    DenseArray row({1, d});
    for (std::int64_t j = 0; j < d; ++j) row[j] = s_b.frames[t * d + j];
    batch.fut.push_back(std::move(row));
  }
  Tape tape;
  BoundModel m = bind_params(tape, params, cfg);
  LossVars lv = build_loss(tape, m, batch, rng, kl_weight, lambda_cycle, lambda_motion, coherence_window, false);
  TotalLoss out;
  out.total = lv.total.value()[0];
  out.recon = lv.recon.value()[0];
  out.kl = lv.has_kl ? lv.kl.value()[0] : 0.0;
  out.cycle = lv.has_cycle ? lv.cycle.value()[0] : 0.0;
  out.motion = lv.has_motion ? lv.motion.value()[0] : 0.0;
  return out;
}

MotionSequence predict_future(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& s_a,
                              const std::optional<DenseArray>& z, std::int64_t future_len, std::string* warning) {
  if (cfg.variant == Variant::PredictionLstm) {
    if (z.has_value() && warning != nullptr) {
      *warning = "predict_future: latent sample ignored by pred-lstm (deterministic variant)";
    }
    Tape tape;
    BoundModel m = bind_params(tape, params, cfg);
    CellOptions opt = cell_options(cfg, false, nullptr);
    Var e_a = encode_frames(tape, m.enc, sequence_constants(tape, s_a), cfg.hidden, opt);
    Var last = as_row_matrix(tape, DenseArray::vec(s_a.last_frame()));
    return collect_row(decode_frames(tape, m.dec, e_a, last, future_len, opt), 0, cfg.dim);
  }
  if (!z.has_value()) {
    throw std::invalid_argument("predict_future: " + variant_name(cfg.variant) + " requires a latent sample");
  }
  DenseArray zs({1, cfg.latent});
  if (z->size() != cfg.latent) throw std::invalid_argument("predict_future: z length mismatch");
  for (std::int64_t i = 0; i < cfg.latent; ++i) zs[i] = (*z)[i];
  return generate_futures(params, cfg, s_a, zs, future_len).front();
}

std::vector<MotionSequence> generate_futures(const ModelParams& params, const ModelConfig& cfg,
                                             const MotionSequence& s_a, const DenseArray& zs,
                                             std::int64_t future_len) {
  if (!cfg.is_vae()) {
    throw std::invalid_argument("generate_futures: latent sampling undefined for pred-lstm");
  }
  if (zs.rank() != 2 || zs.cols() != cfg.latent) {
    throw std::invalid_argument("generate_futures: zs must be [n x " + std::to_string(cfg.latent) + "], got " +
                                zs.shape_str());
  }
  const std::int64_t n = zs.rows();
  Tape tape;
  BoundModel m = bind_params(tape, params, cfg);
  CellOptions opt = cell_options(cfg, false, nullptr);
  Var e_a1 = encode_frames(tape, m.enc, sequence_constants(tape, s_a), cfg.hidden, opt);
  Var e_a = tape.constant(tile_rows(e_a1.value(), n));
  Var z = tape.constant(zs);
  Var feat = decoder_feature_g(m, z, e_a);
  Var last = tape.constant(tile_rows(DenseArray::vec(s_a.last_frame()), n));
  auto preds = decode_frames(tape, m.dec, feat, last, future_len, opt);
  std::vector<MotionSequence> out;
  out.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) out.push_back(collect_row(preds, i, cfg.dim));
  return out;
}

DenseArray analogy_feature(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& a,
                           const MotionSequence& b, const MotionSequence& c) {
  const DenseArray e_a = encode_sequence(params, cfg, a);
  const DenseArray e_b = encode_sequence(params, cfg, b);
  const DenseArray e_c = encode_sequence(params, cfg, c);
  if (cfg.variant == Variant::PredictionLstm) {
    // e_B + (e_C - e_A): the C == A case cancels exactly.
    DenseArray out({cfg.hidden});
    for (std::int64_t i = 0; i < cfg.hidden; ++i) out[i] = e_b[i] + (e_c[i] - e_a[i]);
    return out;
  }
  const LatentGaussian g = latent_encode(params, cfg, e_a, e_b);
  if (cfg.variant == Variant::VanillaVae) {
    DenseArray out({cfg.latent + cfg.hidden});
    for (std::int64_t i = 0; i < cfg.latent; ++i) out[i] = g.mu[i];
    for (std::int64_t i = 0; i < cfg.hidden; ++i) out[cfg.latent + i] = e_c[i];
    return out;
  }
  return latent_decode(params, cfg, g.mu, e_c);
}

MotionSequence analogy_transfer(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& a,
                                const MotionSequence& b, const MotionSequence& c, std::int64_t future_len) {
  return decode_sequence(params, cfg, analogy_feature(params, cfg, a, b, c), c.last_frame(), future_len);
}

}  // namespace mtvae

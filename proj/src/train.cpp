// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "mtvae/train.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mtvae {

using nlohmann::json;

double default_lambda_motion(Variant v) { return v == Variant::MtVaeAdd ? 5.0 : 20.0; }

double kl_anneal_weight(std::int64_t step, std::int64_t kl_anneal_steps) {
  if (step < 0) throw std::invalid_argument("kl_anneal_weight: negative step");
  if (kl_anneal_steps <= 0) return 1.0;
  if (step >= kl_anneal_steps) return 1.0;
  return static_cast<double>(step) / static_cast<double>(kl_anneal_steps);
}

OptimizerState init_optimizer(const ModelParams& params) {
  OptimizerState st;
  for (const auto& [name, arr] : params.values) {
    st.m.emplace(name, DenseArray(arr.shape()));
    st.v.emplace(name, DenseArray(arr.shape()));
  }
  return st;
}

void adam_step(ModelParams& params, const std::map<std::string, DenseArray>& grads, OptimizerState& state,
               const TrainConfig& cfg) {
  state.step += 1;
  const auto t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, p] : params.values) {
    auto git = grads.find(name);
    if (git == grads.end()) throw std::invalid_argument("adam_step: missing gradient for '" + name + "'");
    const DenseArray& g = git->second;
    DenseArray& m = state.m.at(name);
    DenseArray& v = state.v.at(name);
    for (std::int64_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
    }
  }
}

std::string trace_header() {
  return "# mtvae loss trace v1 deterministic=true\n# step total recon kl cycle motion kl_weight";
}

std::string format_trace_row(const TraceRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld %.17g %.17g %.17g %.17g %.17g %.17g",
                static_cast<long long>(row.step), row.total, row.recon, row.kl, row.cycle, row.motion,
                row.kl_weight);
  return buf;
}

Checkpoint TrainResult::checkpoint() const {
  Checkpoint ck;
  ck.model = model_cfg;
  ck.train = train_cfg;
  ck.params = params;
  ck.opt = opt;
  ck.rng_state = rng_state;
  ck.step = step;
  return ck;
}

namespace {

struct BatchSampler {
  const SequenceDataset& ds;
  std::int64_t obs_lo, obs_hi, t_fut, batch;
  bool aligned;

  BatchSampler(const SequenceDataset& data, const TrainConfig& tc, std::int64_t future_len)
      : ds(data), obs_lo(tc.obs_lo), obs_hi(tc.obs_hi), t_fut(future_len), batch(tc.batch_size),
        aligned(data.has_modes()) {
    bool feasible = false;
    for (const auto& r : ds.records) {
      if (aligned) {
        if (r.switch_index >= obs_lo && r.seq.length() >= r.switch_index + t_fut) feasible = true;
      } else if (r.seq.length() >= obs_lo + t_fut) {
        feasible = true;
      }
      if (feasible) break;
    }
    if (!feasible) {
      throw std::runtime_error("train: dataset too short to produce any (" + std::to_string(obs_lo) + "+" +
                               std::to_string(t_fut) + ")-frame window");
    }
  }

  TrainBatch next(Rng& rng) const {
    const std::int64_t k = rng.uniform_int(obs_lo, obs_hi);
    const std::int64_t d = ds.dim;
    TrainBatch out;
    out.obs.assign(static_cast<std::size_t>(k), DenseArray({batch, d}));
    out.fut.assign(static_cast<std::size_t>(t_fut), DenseArray({batch, d}));
    for (std::int64_t bi = 0; bi < batch; ++bi) {
      std::int64_t start = 0, idx = 0;
      for (;;) {
        idx = rng.uniform_int(0, static_cast<std::int64_t>(ds.records.size()) - 1);
        const auto& r = ds.records[static_cast<std::size_t>(idx)];
        if (aligned) {
          if (r.switch_index < k || r.seq.length() < r.switch_index + t_fut) continue;
          start = r.switch_index - k;
          break;
        }
        const std::int64_t max_start = r.seq.length() - k - t_fut;
        if (max_start < 0) continue;
        start = max_start == 0 ? 0 : rng.uniform_int(0, max_start);
        break;
      }
      const auto& seq = ds.records[static_cast<std::size_t>(idx)].seq;
      for (std::int64_t t = 0; t < k; ++t) {
        for (std::int64_t j = 0; j < d; ++j) {
          out.obs[static_cast<std::size_t>(t)][bi * d + j] = seq.frames[(start + t) * d + j];
        }
      }
      for (std::int64_t t = 0; t < t_fut; ++t) {
        for (std::int64_t j = 0; j < d; ++j) {
          out.fut[static_cast<std::size_t>(t)][bi * d + j] = seq.frames[(start + k + t) * d + j];
        }
      }
    }
    return out;
  }
};

}  // namespace

TrainResult train(const ModelConfig& model_cfg, const SequenceDataset& data, const TrainConfig& train_cfg,
                  const Checkpoint* resume, const std::function<void(const TraceRow&)>& on_step,
                  const std::function<void(const Checkpoint&)>& on_checkpoint) {
  if (data.dim != model_cfg.dim) {
    throw std::invalid_argument("train: dataset d=" + std::to_string(data.dim) + " does not match model dim " +
                                std::to_string(model_cfg.dim));
  }
  ModelConfig cfg = model_cfg;
  cfg.dropout_keep = train_cfg.dropout_keep;
  cfg.obs_lo = train_cfg.obs_lo;
  cfg.obs_hi = train_cfg.obs_hi;
  TrainConfig tc = train_cfg;
  tc.kl_anneal_steps = train_cfg.resolved_anneal_steps();

  Rng rng(tc.seed);
  TrainResult result;
  if (resume != nullptr) {
    result.params = resume->params;
    result.opt = resume->opt;
    result.step = resume->step;
    rng.deserialize(resume->rng_state);
  } else {
    result.params = init_params(cfg, rng);
    result.opt = init_optimizer(result.params);
    result.step = 0;
  }
  validate_params(result.params, cfg);
  result.model_cfg = cfg;
  result.train_cfg = tc;

  const BatchSampler sampler(data, tc, cfg.future_len);
  const std::int64_t anneal = tc.kl_anneal_steps;

  CheckedModeScope unchecked(false);
  Tape tape;
  for (std::int64_t step = result.step; step < tc.total_steps; ++step) {
    const double klw = kl_anneal_weight(step, anneal);
    const TrainBatch batch = sampler.next(rng);
    tape.clear();
    BoundModel bound = bind_params(tape, result.params, cfg);
    LossVars loss = build_loss(tape, bound, batch, rng, klw, tc.lambda_cycle, tc.lambda_motion,
                               tc.coherence_window, true);
    tape.backward(loss.total);

    std::map<std::string, DenseArray> grads;
    for (const auto& [name, var] : bound.handles) grads.emplace(name, tape.grad(var));
    if (tc.grad_clip) {
      double sq = 0.0;
      for (const auto& [name, g] : grads) {
        for (std::int64_t i = 0; i < g.size(); ++i) sq += g[i] * g[i];
      }
      const double norm = std::sqrt(sq);
      if (norm > tc.grad_clip_norm) {
        const double s = tc.grad_clip_norm / norm;
        for (auto& [name, g] : grads) {
          for (std::int64_t i = 0; i < g.size(); ++i) g[i] *= s;
        }
      }
    }
    adam_step(result.params, grads, result.opt, tc);

    TraceRow row;
    row.step = step;
    row.total = loss.total.value()[0];
    row.recon = loss.recon.value()[0];
    row.kl = loss.has_kl ? loss.kl.value()[0] : 0.0;
    row.cycle = loss.has_cycle ? loss.cycle.value()[0] : 0.0;
    row.motion = loss.has_motion ? loss.motion.value()[0] : 0.0;
    row.kl_weight = klw;
    result.trace.push_back(row);
    if (on_step) on_step(row);
    result.step = step + 1;
    if (on_checkpoint && tc.checkpoint_interval > 0 && result.step % tc.checkpoint_interval == 0 &&
        result.step < tc.total_steps) {
      result.rng_state = rng.serialize();
      on_checkpoint(result.checkpoint());
    }
  }
  result.rng_state = rng.serialize();
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoint archive.

namespace {

constexpr const char* kMagic = "MTVAE-CKPT";
constexpr int kVersion = 1;

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void append_array(std::string& payload, const std::string& name, const DenseArray& a) {
  std::ostringstream head;
  head << "A " << name << " " << a.rank();
  for (auto d : a.shape()) head << " " << d;
  head << "\n";
  payload += head.str();
  const auto bytes = static_cast<std::size_t>(a.size()) * sizeof(double);
  const std::size_t off = payload.size();
  payload.resize(off + bytes);
  std::memcpy(payload.data() + off, a.data(), bytes);
}

struct PayloadReader {
  const std::string& buf;
  std::size_t pos = 0;

  bool done() const { return pos >= buf.size(); }

  std::pair<std::string, DenseArray> next() {
    const std::size_t eol = buf.find('\n', pos);
    if (eol == std::string::npos) throw std::runtime_error("checkpoint: truncated array header");
    std::istringstream head(buf.substr(pos, eol - pos));
    pos = eol + 1;
    std::string tag, name;
    std::int64_t rank = 0;
    head >> tag >> name >> rank;
    if (tag != "A" || rank < 1 || rank > 2) throw std::runtime_error("checkpoint: malformed array header");
    std::vector<std::int64_t> shape(static_cast<std::size_t>(rank));
    std::int64_t count = 1;
    for (auto& d : shape) {
      head >> d;
      count *= d;
    }
    if (head.fail()) throw std::runtime_error("checkpoint: malformed array shape for '" + name + "'");
    const auto bytes = static_cast<std::size_t>(count) * sizeof(double);
    if (pos + bytes > buf.size()) throw std::runtime_error("checkpoint: truncated array data for '" + name + "'");
    std::vector<double> data(static_cast<std::size_t>(count));
    std::memcpy(data.data(), buf.data() + pos, bytes);
    pos += bytes;
    return {name, DenseArray(std::move(shape), std::move(data))};
  }
};

void atomic_write_file(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

json model_config_to_json(const ModelConfig& cfg) {
  return json{{"variant", variant_name(cfg.variant)},
              {"context_free", cfg.context_free},
              {"dim", cfg.dim},
              {"hidden", cfg.hidden},
              {"latent", cfg.latent},
              {"latent_hidden", cfg.latent_hidden},
              {"obs_lo", cfg.obs_lo},
              {"obs_hi", cfg.obs_hi},
              {"future_len", cfg.future_len},
              {"layer_norm", cfg.layer_norm},
              {"ln_epsilon", cfg.ln_epsilon},
              {"dropout_keep", cfg.dropout_keep},
              {"teacher_forcing", cfg.teacher_forcing}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.variant = variant_from_name(j.at("variant").get<std::string>());
  cfg.context_free = j.at("context_free").get<bool>();
  cfg.dim = j.at("dim").get<std::int64_t>();
  cfg.hidden = j.at("hidden").get<std::int64_t>();
  cfg.latent = j.at("latent").get<std::int64_t>();
  cfg.latent_hidden = j.at("latent_hidden").get<std::int64_t>();
  cfg.obs_lo = j.at("obs_lo").get<std::int64_t>();
  cfg.obs_hi = j.at("obs_hi").get<std::int64_t>();
  cfg.future_len = j.at("future_len").get<std::int64_t>();
  cfg.layer_norm = j.at("layer_norm").get<bool>();
  cfg.ln_epsilon = j.at("ln_epsilon").get<double>();
  cfg.dropout_keep = j.at("dropout_keep").get<double>();
  cfg.teacher_forcing = j.at("teacher_forcing").get<bool>();
  return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
  return json{{"learning_rate", cfg.learning_rate},
              {"beta1", cfg.beta1},
              {"beta2", cfg.beta2},
              {"adam_epsilon", cfg.adam_epsilon},
              {"batch_size", cfg.batch_size},
              {"total_steps", cfg.total_steps},
              {"kl_anneal_steps", cfg.kl_anneal_steps},
              {"coherence_window", cfg.coherence_window},
              {"lambda_cycle", cfg.lambda_cycle},
              {"lambda_motion", cfg.lambda_motion},
              {"dropout_keep", cfg.dropout_keep},
              {"obs_lo", cfg.obs_lo},
              {"obs_hi", cfg.obs_hi},
              {"seed", cfg.seed},
              {"checkpoint_interval", cfg.checkpoint_interval},
              {"grad_clip", cfg.grad_clip},
              {"grad_clip_norm", cfg.grad_clip_norm}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.beta1 = j.at("beta1").get<double>();
  cfg.beta2 = j.at("beta2").get<double>();
  cfg.adam_epsilon = j.at("adam_epsilon").get<double>();
  cfg.batch_size = j.at("batch_size").get<std::int64_t>();
  cfg.total_steps = j.at("total_steps").get<std::int64_t>();
  cfg.kl_anneal_steps = j.at("kl_anneal_steps").get<std::int64_t>();
  cfg.coherence_window = j.at("coherence_window").get<std::int64_t>();
  cfg.lambda_cycle = j.at("lambda_cycle").get<double>();
  cfg.lambda_motion = j.at("lambda_motion").get<double>();
  cfg.dropout_keep = j.at("dropout_keep").get<double>();
  cfg.obs_lo = j.at("obs_lo").get<std::int64_t>();
  cfg.obs_hi = j.at("obs_hi").get<std::int64_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.checkpoint_interval = j.at("checkpoint_interval").get<std::int64_t>();
  cfg.grad_clip = j.at("grad_clip").get<bool>();
  cfg.grad_clip_norm = j.at("grad_clip_norm").get<double>();
  return cfg;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::string payload;
  for (const auto& [name, arr] : ck.params.values) append_array(payload, "p/" + name, arr);
  for (const auto& [name, arr] : ck.opt.m) append_array(payload, "m/" + name, arr);
  for (const auto& [name, arr] : ck.opt.v) append_array(payload, "v/" + name, arr);

  char digest[32];
  std::snprintf(digest, sizeof(digest), "%016llx", static_cast<unsigned long long>(fnv1a(payload)));

  json header{{"format_version", ck.format_version},
              {"model", model_config_to_json(ck.model)},
              {"train", train_config_to_json(ck.train)},
              {"step", ck.step},
              {"opt_step", ck.opt.step},
              {"rng", ck.rng_state},
              {"digest", digest}};

  std::ostringstream out;
  out << kMagic << " " << ck.format_version << "\n" << header.dump() << "\nPAYLOAD " << payload.size() << "\n";
  std::string contents = out.str();
  contents += payload;
  atomic_write_file(path, contents);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  std::string magic_line, header_line, payload_line;
  if (!std::getline(is, magic_line) || !std::getline(is, header_line) || !std::getline(is, payload_line)) {
    throw std::runtime_error("checkpoint '" + path + "': truncated header");
  }
  std::istringstream magic(magic_line);
  std::string tag;
  int version = 0;
  magic >> tag >> version;
  if (tag != kMagic) throw std::runtime_error("checkpoint '" + path + "': not a checkpoint file");
  if (version != kVersion) {
    throw std::runtime_error("checkpoint '" + path + "': unsupported format version " +
                             std::to_string(version) + " (this build reads version " + std::to_string(kVersion) +
                             ")");
  }
  std::istringstream pl(payload_line);
  std::size_t payload_size = 0;
  pl >> tag >> payload_size;
  if (tag != "PAYLOAD") throw std::runtime_error("checkpoint '" + path + "': missing payload marker");
  std::string payload(payload_size, '\0');
  is.read(payload.data(), static_cast<std::streamsize>(payload_size));
  if (static_cast<std::size_t>(is.gcount()) != payload_size) {
    throw std::runtime_error("checkpoint '" + path + "': integrity error, payload truncated");
  }

  json header = json::parse(header_line);
  char digest[32];
  std::snprintf(digest, sizeof(digest), "%016llx", static_cast<unsigned long long>(fnv1a(payload)));
  if (header.at("digest").get<std::string>() != digest) {
    throw std::runtime_error("checkpoint '" + path + "': integrity error, payload digest mismatch");
  }

  Checkpoint ck;
  ck.format_version = header.at("format_version").get<int>();
  ck.model = model_config_from_json(header.at("model"));
  ck.train = train_config_from_json(header.at("train"));
  ck.step = header.at("step").get<std::int64_t>();
  ck.rng_state = header.at("rng").get<std::string>();
  ck.opt.step = header.at("opt_step").get<std::int64_t>();

  PayloadReader reader{payload};
  while (!reader.done()) {
    auto [name, arr] = reader.next();
    if (name.rfind("p/", 0) == 0) {
      ck.params.values.emplace(name.substr(2), std::move(arr));
    } else if (name.rfind("m/", 0) == 0) {
      ck.opt.m.emplace(name.substr(2), std::move(arr));
    } else if (name.rfind("v/", 0) == 0) {
      ck.opt.v.emplace(name.substr(2), std::move(arr));
    } else {
      throw std::runtime_error("checkpoint '" + path + "': unknown array kind '" + name + "'");
    }
  }
  validate_params(ck.params, ck.model);
  return ck;
}

}  // namespace mtvae

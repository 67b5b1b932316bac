// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: data generation, training, sampling, evaluation,
// analogy transfer, and static rendering. All numerical work lives in the
// library; this file only wires subcommands to it.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mtvae/dataset.hpp"
#include "mtvae/eval.hpp"
#include "mtvae/model.hpp"
#include "mtvae/render.hpp"
#include "mtvae/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void atomic_write(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    os << contents;
  }
  fs::rename(tmp, path);
}

void write_manifest(const std::string& dir, const std::string& command, const json& inputs,
                    const json& outputs, const json& config, std::uint64_t seed, double elapsed) {
  json manifest{{"tool", "mtvae"},         {"version", kToolVersion}, {"command", command},
                {"inputs", inputs},        {"outputs", outputs},      {"config", config},
                {"seed", seed},            {"elapsed_seconds", elapsed}};
  fs::create_directories(dir);
  atomic_write(dir + "/run_manifest.json", manifest.dump(2) + "\n");
}

mtvae::SyntheticSpec load_spec(const std::string& spec_arg) {
  if (spec_arg == "default") return mtvae::SyntheticSpec{};
  std::ifstream is(spec_arg);
  if (!is) throw std::runtime_error("cannot open synthetic spec '" + spec_arg + "'");
  const json j = json::parse(is);
  mtvae::SyntheticSpec s;
  if (j.contains("modes")) s.modes = j.at("modes").get<int>();
  if (j.contains("joints")) s.joints = j.at("joints").get<int>();
  if (j.contains("amplitude")) s.amplitude = j.at("amplitude").get<double>();
  if (j.contains("omega0")) s.omega0 = j.at("omega0").get<double>();
  if (j.contains("mode_omega")) s.mode_omega = j.at("mode_omega").get<std::vector<double>>();
  if (j.contains("mode_drift_angle")) s.mode_drift_angle = j.at("mode_drift_angle").get<std::vector<double>>();
  if (j.contains("drift_step")) s.drift_step = j.at("drift_step").get<double>();
  if (j.contains("noise")) s.noise = j.at("noise").get<double>();
  if (j.contains("center_box")) s.center_box = j.at("center_box").get<double>();
  if (j.contains("obs_len")) s.obs_len = j.at("obs_len").get<std::int64_t>();
  if (j.contains("obs_lo")) s.obs_lo = j.at("obs_lo").get<std::int64_t>();
  if (j.contains("future_len")) s.future_len = j.at("future_len").get<std::int64_t>();
  if (j.contains("train_n")) s.train_n = j.at("train_n").get<std::int64_t>();
  if (j.contains("val_n")) s.val_n = j.at("val_n").get<std::int64_t>();
  if (j.contains("test_n")) s.test_n = j.at("test_n").get<std::int64_t>();
  if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

mtvae::MotionSequence first_record(const std::string& path) {
  const auto ds = mtvae::load_sequence_file(path);
  return ds.records.front().seq;
}

// flat key=value config files; '#' starts a comment, flags always win
std::map<std::string, std::string> read_flat_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto strip = [](std::string v) {
      const auto b = v.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = v.find_last_not_of(" \t\r");
      return v.substr(b, e - b + 1);
    };
    if (strip(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config '" + path + "' line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    out[strip(line.substr(0, eq))] = strip(line.substr(eq + 1));
  }
  return out;
}

bool config_truthy(const std::string& v) { return v == "true" || v == "1" || v == "yes" || v == "on"; }

mtvae::MotionSequence sequence_prefix(const mtvae::MotionSequence& seq, std::int64_t len) {
  const std::int64_t d = seq.dim();
  mtvae::DenseArray frames({len, d});
  for (std::int64_t i = 0; i < len * d; ++i) frames[i] = seq.frames[i];
  return mtvae::MotionSequence(std::move(frames));
}

int cmd_gen_data(const std::string& spec_arg, const std::string& out_dir, std::int64_t seed) {
  Stopwatch timer;
  mtvae::SyntheticSpec spec = load_spec(spec_arg);
  if (seed >= 0) spec.seed = static_cast<std::uint64_t>(seed);
  const mtvae::DataBundle bundle = mtvae::gen_synthetic(spec);
  mtvae::save_dataset_dir(out_dir, bundle);
  write_manifest(out_dir, "gen-data", json{{"spec", spec_arg}},
                 json{{"dataset", out_dir}},
                 json{{"modes", spec.modes},
                      {"joints", spec.joints},
                      {"train_n", spec.train_n},
                      {"val_n", spec.val_n},
                      {"test_n", spec.test_n}},
                 spec.seed, timer.seconds());
  std::cout << "wrote dataset (" << bundle.train.size() << "/" << bundle.val.size() << "/" << bundle.test.size()
            << " train/val/test sequences, d=" << bundle.train.dim << ") to " << out_dir << "\n";
  return 0;
}

struct TrainArgs {
  std::string data_dir, variant = "mtvae-add", out_dir, resume_path, config_path;
  bool context_free = false;
  bool teacher_forcing = false;
  bool no_layer_norm = false;
  std::int64_t hidden = 64, latent = 8, future_len = 16;
  mtvae::TrainConfig tc;
};

void apply_train_config(TrainArgs& a, const CLI::App* cmd) {
  const auto cfg = read_flat_config(a.config_path);
  auto fills = [&](const char* key) {
    return cfg.count(key) != 0 && cmd->count(std::string("--") + key) == 0;
  };
  if (fills("variant")) a.variant = cfg.at("variant");
  if (fills("context-free")) a.context_free = config_truthy(cfg.at("context-free"));
  if (fills("teacher-forcing")) a.teacher_forcing = config_truthy(cfg.at("teacher-forcing"));
  if (fills("no-layer-norm")) a.no_layer_norm = config_truthy(cfg.at("no-layer-norm"));
  if (fills("hidden")) a.hidden = std::stoll(cfg.at("hidden"));
  if (fills("latent")) a.latent = std::stoll(cfg.at("latent"));
  if (fills("future")) a.future_len = std::stoll(cfg.at("future"));
  if (fills("steps")) a.tc.total_steps = std::stoll(cfg.at("steps"));
  if (fills("batch")) a.tc.batch_size = std::stoll(cfg.at("batch"));
  if (fills("lr")) a.tc.learning_rate = std::stod(cfg.at("lr"));
  if (fills("kl-anneal")) a.tc.kl_anneal_steps = std::stoll(cfg.at("kl-anneal"));
  if (fills("coherence-window")) a.tc.coherence_window = std::stoll(cfg.at("coherence-window"));
  if (fills("lambda-cycle")) a.tc.lambda_cycle = std::stod(cfg.at("lambda-cycle"));
  if (fills("lambda-motion")) a.tc.lambda_motion = std::stod(cfg.at("lambda-motion"));
  if (fills("dropout-keep")) a.tc.dropout_keep = std::stod(cfg.at("dropout-keep"));
  if (fills("obs-lo")) a.tc.obs_lo = std::stoll(cfg.at("obs-lo"));
  if (fills("obs-hi")) a.tc.obs_hi = std::stoll(cfg.at("obs-hi"));
  if (fills("seed")) a.tc.seed = std::stoull(cfg.at("seed"));
  if (fills("checkpoint-interval")) a.tc.checkpoint_interval = std::stoll(cfg.at("checkpoint-interval"));
}

int cmd_train(const TrainArgs& args) {
  Stopwatch timer;
  const mtvae::DataBundle bundle = mtvae::load_dataset_dir(args.data_dir);

  mtvae::ModelConfig mc;
  mtvae::TrainConfig tc = args.tc;
  std::optional<mtvae::Checkpoint> resume;
  if (!args.resume_path.empty()) {
    resume = mtvae::load_checkpoint(args.resume_path);
    mc = resume->model;
    tc = resume->train;
    tc.total_steps = args.tc.total_steps;  // extendable horizon
  } else {
    mc.variant = mtvae::variant_from_name(args.variant);
    mc.context_free = args.context_free;
    mc.dim = bundle.train.dim;
    mc.hidden = args.hidden;
    mc.latent = args.latent;
    mc.future_len = args.future_len;
    mc.obs_lo = tc.obs_lo;
    mc.obs_hi = tc.obs_hi;
    mc.layer_norm = !args.no_layer_norm;
    mc.teacher_forcing = args.teacher_forcing;
  }

  fs::create_directories(args.out_dir);
  std::ofstream trace(args.out_dir + "/loss_trace.txt", std::ios::trunc);
  if (!trace) throw std::runtime_error("cannot open '" + args.out_dir + "/loss_trace.txt'");
  trace << mtvae::trace_header() << "\n";

  const std::string ckpt_path = args.out_dir + "/checkpoint.ckpt";
  mtvae::TrainResult result = mtvae::train(
      mc, bundle.train, tc, resume ? &*resume : nullptr,
      [&](const mtvae::TraceRow& row) { trace << mtvae::format_trace_row(row) << "\n"; },
      [&](const mtvae::Checkpoint& snapshot) {
        mtvae::save_checkpoint(snapshot, args.out_dir + "/checkpoint_" + std::to_string(snapshot.step) +
                                             ".ckpt");
      });
  trace.close();

  mtvae::Checkpoint ck = result.checkpoint();
  mtvae::save_checkpoint(ck, ckpt_path);

  write_manifest(args.out_dir, "train", json{{"data", args.data_dir}, {"resume", args.resume_path}},
                 json{{"checkpoint", ckpt_path}, {"loss_trace", args.out_dir + "/loss_trace.txt"}},
                 json{{"model", mtvae::model_config_to_json(result.model_cfg)},
                      {"train", mtvae::train_config_to_json(result.train_cfg)}},
                 tc.seed, timer.seconds());
  const auto& last = result.trace.empty() ? mtvae::TraceRow{} : result.trace.back();
  std::cout << "trained " << mtvae::variant_name(mc.variant) << " to step " << result.step
            << " (final total=" << last.total << " recon=" << last.recon << ")\n";
  return 0;
}

struct SampleArgs {
  std::string ckpt, context, out, from = "prior";
  std::int64_t n = 5, horizon = 0, obs = 0;
  std::uint64_t seed = 0;
};

int cmd_sample(const SampleArgs& args) {
  Stopwatch timer;
  const mtvae::Checkpoint ck = mtvae::load_checkpoint(args.ckpt);
  const mtvae::SequenceDataset contexts = mtvae::load_sequence_file(args.context);
  const std::int64_t horizon = args.horizon > 0 ? args.horizon : ck.model.future_len;

  mtvae::SequenceDataset out;
  out.dim = ck.model.dim;
  out.split = "samples";
  for (std::size_t ri = 0; ri < contexts.records.size(); ++ri) {
    const auto& rec = contexts.records[ri];
    const std::int64_t obs_len =
        args.obs > 0 ? args.obs : std::min<std::int64_t>(rec.seq.length(), ck.model.obs_hi);
    if (rec.seq.length() < obs_len) {
      throw std::runtime_error("sample: context '" + rec.id + "' shorter than observed window");
    }
    mtvae::Rng rng = mtvae::Rng::derive(args.seed, ri);
    const mtvae::MotionSequence s_a = sequence_prefix(rec.seq, obs_len);
    std::vector<mtvae::MotionSequence> futures;
    if (ck.model.variant == mtvae::Variant::PredictionLstm) {
      futures.push_back(mtvae::predict_future(ck.params, ck.model, s_a, std::nullopt, horizon));
    } else if (args.from == "prior") {
      futures = mtvae::sample_prior_futures(ck.params, ck.model, s_a, args.n, horizon, rng);
    } else if (args.from == "posterior") {
      if (rec.seq.length() < obs_len + ck.model.future_len) {
        throw std::runtime_error("sample: context '" + rec.id + "' too short for posterior sampling (needs " +
                                 std::to_string(obs_len + ck.model.future_len) + " frames)");
      }
      mtvae::WindowRef w{static_cast<std::int64_t>(ri), 0, obs_len};
      auto [s_obs, s_b] = mtvae::window_pair(contexts, w, ck.model.future_len);
      futures = mtvae::sample_posterior_futures(ck.params, ck.model, s_obs, s_b, args.n, rng);
      if (horizon != ck.model.future_len) {
        throw std::runtime_error("sample: posterior sampling generates the training horizon " +
                                 std::to_string(ck.model.future_len));
      }
    } else {
      throw std::runtime_error("sample: --from must be prior or posterior");
    }
    for (std::size_t k = 0; k < futures.size(); ++k) {
      mtvae::SequenceRecord sr;
      sr.id = rec.id + "-sample" + std::to_string(k);
      sr.seq = std::move(futures[k]);
      out.records.push_back(std::move(sr));
    }
  }
  mtvae::save_sequence_file(args.out, out);
  write_manifest(fs::path(args.out).parent_path().empty() ? "." : fs::path(args.out).parent_path().string(),
                 "sample", json{{"ckpt", args.ckpt}, {"context", args.context}},
                 json{{"samples", args.out}},
                 json{{"n", args.n}, {"horizon", horizon}, {"from", args.from}, {"obs", args.obs}}, args.seed,
                 timer.seconds());
  std::cout << "wrote " << out.records.size() << " sampled futures to " << args.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string ckpt, data_dir, out_dir = ".", bandwidth = "auto", config_path;
  mtvae::EvalConfig ec;
};

void apply_eval_config(EvalArgs& a, const CLI::App* cmd) {
  const auto cfg = read_flat_config(a.config_path);
  auto fills = [&](const char* key) {
    return cfg.count(key) != 0 && cmd->count(std::string("--") + key) == 0;
  };
  if (fills("stride")) a.ec.stride = std::stoll(cfg.at("stride"));
  if (fills("samples-rmse")) a.ec.samples_rmse = std::stoll(cfg.at("samples-rmse"));
  if (fills("samples-smse")) a.ec.samples_smse = std::stoll(cfg.at("samples-smse"));
  if (fills("samples-coverage")) a.ec.coverage_samples = std::stoll(cfg.at("samples-coverage"));
  if (fills("max-windows")) a.ec.max_windows = std::stoll(cfg.at("max-windows"));
  if (fills("bandwidth")) a.bandwidth = cfg.at("bandwidth");
  if (fills("seed")) a.ec.seed = std::stoull(cfg.at("seed"));
}

int cmd_eval(const EvalArgs& args) {
  Stopwatch timer;
  const mtvae::Checkpoint ck = mtvae::load_checkpoint(args.ckpt);
  const mtvae::DataBundle bundle = mtvae::load_dataset_dir(args.data_dir);
  const mtvae::SyntheticSpec* spec = bundle.synthetic ? &*bundle.synthetic : nullptr;

  mtvae::EvalConfig ec = args.ec;
  json bandwidth_echo;
  if (args.bandwidth == "auto") {
    const auto sel = mtvae::select_bandwidth(ck.params, ck.model, bundle.val, ec);
    ec.bandwidth = sel.best;
    json table = json::array();
    for (auto [h, cll] : sel.table) table.push_back(json{{"bandwidth", h}, {"mean_cll", cll}});
    bandwidth_echo = json{{"mode", "auto"}, {"selected", sel.best}, {"table", table}};
  } else {
    ec.bandwidth = std::stod(args.bandwidth);
    bandwidth_echo = json{{"mode", "fixed"}, {"selected", ec.bandwidth}};
  }

  const mtvae::EvalReport train_report = mtvae::evaluate(ck.params, ck.model, bundle.train, ec, spec);
  const mtvae::EvalReport test_report = mtvae::evaluate(ck.params, ck.model, bundle.test, ec, spec);

  std::ostringstream table;
  table << mtvae::format_report(train_report) << "\n" << mtvae::format_report(test_report);
  std::cout << table.str();

  fs::create_directories(args.out_dir);
  json out{{"variant", train_report.variant},
           {"bandwidth", bandwidth_echo},
           {"train", mtvae::report_to_json(train_report)},
           {"test", mtvae::report_to_json(test_report)}};
  atomic_write(args.out_dir + "/eval_report.json", out.dump(2) + "\n");
  atomic_write(args.out_dir + "/eval_report.txt", table.str());
  write_manifest(args.out_dir, "eval", json{{"ckpt", args.ckpt}, {"data", args.data_dir}},
                 json{{"report_json", args.out_dir + "/eval_report.json"},
                      {"report_txt", args.out_dir + "/eval_report.txt"}},
                 test_report.config_echo, ec.seed, timer.seconds());
  return 0;
}

struct AnalogyArgs {
  std::string ckpt, a, b, c, out;
  std::int64_t horizon = 0;
};

int cmd_analogy(const AnalogyArgs& args) {
  Stopwatch timer;
  const mtvae::Checkpoint ck = mtvae::load_checkpoint(args.ckpt);
  const mtvae::MotionSequence a = first_record(args.a);
  const mtvae::MotionSequence b = first_record(args.b);
  const mtvae::MotionSequence c = first_record(args.c);
  const std::int64_t horizon = args.horizon > 0 ? args.horizon : ck.model.future_len;
  mtvae::SequenceDataset out;
  out.dim = ck.model.dim;
  out.split = "analogy";
  mtvae::SequenceRecord rec;
  rec.id = "analogy-d";
  rec.seq = mtvae::analogy_transfer(ck.params, ck.model, a, b, c, horizon);
  out.records.push_back(std::move(rec));
  mtvae::save_sequence_file(args.out, out);
  write_manifest(fs::path(args.out).parent_path().empty() ? "." : fs::path(args.out).parent_path().string(),
                 "analogy", json{{"ckpt", args.ckpt}, {"a", args.a}, {"b", args.b}, {"c", args.c}},
                 json{{"sequence", args.out}}, json{{"horizon", horizon}}, 0, timer.seconds());
  std::cout << "wrote analogy transfer result to " << args.out << "\n";
  return 0;
}

int cmd_render(const std::string& seq_path, const std::string& out, const std::string& layout) {
  const mtvae::MotionSequence seq = first_record(seq_path);
  if (layout == "strip") {
    mtvae::render_strip(seq, out);
  } else if (layout == "frames") {
    mtvae::render_frames(seq, out);
  } else {
    throw std::runtime_error("render: --layout must be strip or frames");
  }
  std::cout << "rendered " << seq.length() << " frames to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mtvae: multimodal motion-sequence generation lab"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // gen-data
  std::string gd_spec = "default", gd_out;
  std::int64_t gd_seed = -1;
  auto* gen = app.add_subcommand("gen-data", "generate the synthetic branching-motion benchmark");
  gen->add_option("--spec", gd_spec, "'default' or a JSON spec file");
  gen->add_option("--out", gd_out, "output dataset directory")->required();
  gen->add_option("--seed", gd_seed, "override the spec seed");

  // train
  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "train a model variant");
  tr->add_option("--config", ta.config_path, "flat key=value config file; flags override");
  tr->add_option("--data", ta.data_dir, "dataset directory")->required();
  tr->add_option("--variant", ta.variant, "pred-lstm | vanilla-vae | mtvae-concat | mtvae-add");
  tr->add_flag("--context-free", ta.context_free, "context-free latent decoder (mtvae-add)");
  tr->add_flag("--teacher-forcing", ta.teacher_forcing, "feed ground-truth frames to the decoder in training");
  tr->add_flag("--no-layer-norm", ta.no_layer_norm, "disable layer normalization");
  tr->add_option("--hidden", ta.hidden, "LSTM hidden units (= feature width)");
  tr->add_option("--latent", ta.latent, "latent dimension N_z");
  tr->add_option("--future", ta.future_len, "future window length");
  tr->add_option("--steps", ta.tc.total_steps, "total training steps");
  tr->add_option("--batch", ta.tc.batch_size, "mini-batch size");
  tr->add_option("--lr", ta.tc.learning_rate, "learning rate");
  tr->add_option("--kl-anneal", ta.tc.kl_anneal_steps, "KL annealing steps (-1: 20% of total)");
  tr->add_option("--coherence-window", ta.tc.coherence_window, "motion coherence window K");
  tr->add_option("--lambda-cycle", ta.tc.lambda_cycle, "cycle consistency weight");
  tr->add_option("--lambda-motion", ta.tc.lambda_motion, "motion coherence weight");
  tr->add_option("--dropout-keep", ta.tc.dropout_keep, "dropout keep probability");
  tr->add_option("--obs-lo", ta.tc.obs_lo, "minimum observed frames");
  tr->add_option("--obs-hi", ta.tc.obs_hi, "maximum observed frames");
  tr->add_option("--seed", ta.tc.seed, "training seed");
  tr->add_option("--checkpoint-interval", ta.tc.checkpoint_interval, "steps between checkpoints (0: final only)");
  tr->add_option("--resume", ta.resume_path, "checkpoint to resume from");
  tr->add_option("--out", ta.out_dir, "output directory")->required();

  // sample
  SampleArgs sa;
  auto* sm = app.add_subcommand("sample", "sample future sequences from a checkpoint");
  sm->add_option("--ckpt", sa.ckpt, "checkpoint file")->required();
  sm->add_option("--context", sa.context, "sequence file with contexts")->required();
  sm->add_option("--n", sa.n, "samples per context");
  sm->add_option("--horizon", sa.horizon, "future length (default: training horizon)");
  sm->add_option("--obs", sa.obs, "observed prefix length (default: model obs_hi)");
  sm->add_option("--from", sa.from, "prior | posterior");
  sm->add_option("--seed", sa.seed, "sampling seed");
  sm->add_option("--out", sa.out, "output sequence file")->required();

  // eval
  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "run the quantitative evaluation suite");
  ev->add_option("--config", ea.config_path, "flat key=value config file; flags override");
  ev->add_option("--ckpt", ea.ckpt, "checkpoint file")->required();
  ev->add_option("--data", ea.data_dir, "dataset directory")->required();
  ev->add_option("--out", ea.out_dir, "report output directory");
  ev->add_option("--stride", ea.ec.stride, "evaluation stride for unlabeled data");
  ev->add_option("--samples-rmse", ea.ec.samples_rmse, "recognition samples for R-MSE");
  ev->add_option("--samples-smse", ea.ec.samples_smse, "prior samples for S-MSE and CLL");
  ev->add_option("--samples-coverage", ea.ec.coverage_samples, "prior samples for mode coverage");
  ev->add_option("--max-windows", ea.ec.max_windows, "cap evaluation windows per split (0: all)");
  ev->add_option("--bandwidth", ea.bandwidth, "'auto' (validation selection) or a value");
  ev->add_option("--seed", ea.ec.seed, "evaluation seed");

  // analogy
  AnalogyArgs aa;
  auto* an = app.add_subcommand("analogy", "transfer the A->B transition onto C");
  an->add_option("--ckpt", aa.ckpt, "checkpoint file")->required();
  an->add_option("--a", aa.a, "sequence file for A")->required();
  an->add_option("--b", aa.b, "sequence file for B")->required();
  an->add_option("--c", aa.c, "sequence file for C")->required();
  an->add_option("--horizon", aa.horizon, "generated length (default: training horizon)");
  an->add_option("--out", aa.out, "output sequence file")->required();

  // render
  std::string rd_seq, rd_out, rd_layout = "strip";
  auto* rd = app.add_subcommand("render", "render a keypoint sequence to SVG");
  rd->add_option("--seq", rd_seq, "sequence file")->required();
  rd->add_option("--out", rd_out, "output file (strip) or directory (frames)")->required();
  rd->add_option("--layout", rd_layout, "strip | frames");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen_data(gd_spec, gd_out, gd_seed);
    if (tr->parsed()) {
      if (!ta.config_path.empty()) apply_train_config(ta, tr);
      return cmd_train(ta);
    }
    if (sm->parsed()) return cmd_sample(sa);
    if (ev->parsed()) {
      if (!ea.config_path.empty()) apply_eval_config(ea, ev);
      return cmd_eval(ea);
    }
    if (an->parsed()) return cmd_analogy(aa);
    if (rd->parsed()) return cmd_render(rd_seq, rd_out, rd_layout);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

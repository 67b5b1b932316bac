// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "mtvae/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mtvae {

using nlohmann::json;

NormalizationStats NormalizationStats::identity(std::int64_t dim) {
  NormalizationStats s;
  s.min.assign(static_cast<std::size_t>(dim), -1.0);
  s.max.assign(static_cast<std::size_t>(dim), 1.0);
  return s;
}

bool SequenceDataset::has_modes() const {
  if (records.empty()) return false;
  for (const auto& r : records) {
    if (r.mode < 0 || r.switch_index < 0) return false;
  }
  return true;
}

double SyntheticSpec::omega_for_mode(int mode) const {
  if (mode_omega.empty()) return omega0;
  return mode_omega.at(static_cast<std::size_t>(mode - 1));
}

std::array<double, 2> SyntheticSpec::drift_for_mode(int mode) const {
  double angle;
  if (mode_drift_angle.empty()) {
    angle = M_PI / 2.0 + 2.0 * M_PI * static_cast<double>(mode - 1) / static_cast<double>(modes);
  } else {
    angle = mode_drift_angle.at(static_cast<std::size_t>(mode - 1));
  }
  return {std::cos(angle), std::sin(angle)};
}

void SyntheticSpec::validate() const {
  if (modes < 1) throw std::invalid_argument("SyntheticSpec: modes must be >= 1");
  if (joints < 2) throw std::invalid_argument("SyntheticSpec: joints must be >= 2 (centroid oracle)");
  if (obs_len < 1 || future_len < 1) throw std::invalid_argument("SyntheticSpec: empty segments");
  if (obs_lo < 1 || obs_lo > obs_len) throw std::invalid_argument("SyntheticSpec: obs_lo outside [1, obs_len]");
  if (!mode_omega.empty() && static_cast<int>(mode_omega.size()) != modes) {
    throw std::invalid_argument("SyntheticSpec: mode_omega size mismatch");
  }
  if (!mode_drift_angle.empty() && static_cast<int>(mode_drift_angle.size()) != modes) {
    throw std::invalid_argument("SyntheticSpec: mode_drift_angle size mismatch");
  }
  const double reach = center_box + amplitude + static_cast<double>(future_len) * drift_step + 4.0 * noise;
  if (reach > 1.0) {
    throw std::invalid_argument("SyntheticSpec: frames can leave [-1,1] (reach " + std::to_string(reach) + ")");
  }
}

namespace {

// Continuation from an arbitrary frame: recover the center as the joint
// centroid, then rotate the offsets and add the mode drift.
MotionSequence continuation_from_frame(const std::vector<double>& frame, int mode, const SyntheticSpec& spec,
                                       std::int64_t steps) {
  const int j_n = spec.joints;
  const std::int64_t d = 2 * j_n;
  double cx = 0.0, cy = 0.0;
  for (int j = 0; j < j_n; ++j) {
    cx += frame[static_cast<std::size_t>(2 * j)];
    cy += frame[static_cast<std::size_t>(2 * j + 1)];
  }
  cx /= j_n;
  cy /= j_n;
  const double omega = spec.omega_for_mode(mode);
  const auto drift = spec.drift_for_mode(mode);
  DenseArray frames({steps, d});
  for (std::int64_t k = 1; k <= steps; ++k) {
    const double ca = std::cos(omega * static_cast<double>(k));
    const double sa = std::sin(omega * static_cast<double>(k));
    const double ox = cx + static_cast<double>(k) * spec.drift_step * drift[0];
    const double oy = cy + static_cast<double>(k) * spec.drift_step * drift[1];
    for (int j = 0; j < j_n; ++j) {
      const double ux = frame[static_cast<std::size_t>(2 * j)] - cx;
      const double uy = frame[static_cast<std::size_t>(2 * j + 1)] - cy;
      frames[(k - 1) * d + 2 * j] = ox + ca * ux - sa * uy;
      frames[(k - 1) * d + 2 * j + 1] = oy + sa * ux + ca * uy;
    }
  }
  return MotionSequence(std::move(frames));
}

double truncated_normal(Rng& rng, double sd) {
  double x = rng.normal();
  if (x > 4.0) x = 4.0;
  if (x < -4.0) x = -4.0;
  return sd * x;
}

SequenceRecord make_sequence(const SyntheticSpec& spec, Rng& rng, const std::string& id) {
  const int j_n = spec.joints;
  const std::int64_t d = 2 * j_n;
  const std::int64_t total = spec.obs_len + spec.future_len;
  const double cx = rng.uniform(-spec.center_box, spec.center_box);
  const double cy = rng.uniform(-spec.center_box, spec.center_box);
  const double phase = rng.uniform(0.0, 2.0 * M_PI);
  const int mode = static_cast<int>(rng.uniform_int(1, spec.modes));

  DenseArray frames({total, d});
  std::vector<double> last_clean(static_cast<std::size_t>(d), 0.0);
  for (std::int64_t t = 0; t < spec.obs_len; ++t) {
    for (int j = 0; j < j_n; ++j) {
      const double a = spec.omega0 * static_cast<double>(t) + phase +
                       2.0 * M_PI * static_cast<double>(j) / static_cast<double>(j_n);
      frames[t * d + 2 * j] = cx + spec.amplitude * std::cos(a);
      frames[t * d + 2 * j + 1] = cy + spec.amplitude * std::sin(a);
    }
  }
  for (std::int64_t j = 0; j < d; ++j) last_clean[static_cast<std::size_t>(j)] = frames[(spec.obs_len - 1) * d + j];
  MotionSequence fut = continuation_from_frame(last_clean, mode, spec, spec.future_len);
  for (std::int64_t k = 0; k < spec.future_len; ++k) {
    for (std::int64_t j = 0; j < d; ++j) frames[(spec.obs_len + k) * d + j] = fut.frames[k * d + j];
  }
  if (spec.noise > 0.0) {
    for (std::int64_t i = 0; i < frames.size(); ++i) frames[i] += truncated_normal(rng, spec.noise);
  }
  for (std::int64_t i = 0; i < frames.size(); ++i) {
    if (frames[i] < -1.0 || frames[i] > 1.0) {
      throw std::runtime_error("gen_synthetic: frame value " + std::to_string(frames[i]) +
                               " outside [-1,1]; adjust the spec");
    }
  }
  SequenceRecord rec;
  rec.id = id;
  rec.seq = MotionSequence(std::move(frames));
  rec.mode = mode;
  rec.switch_index = static_cast<int>(spec.obs_len);
  return rec;
}

SequenceDataset make_split(const SyntheticSpec& spec, Rng& rng, const std::string& split, std::int64_t count) {
  SequenceDataset ds;
  ds.dim = 2 * spec.joints;
  ds.split = split;
  ds.stats = NormalizationStats::identity(ds.dim);
  ds.records.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    std::ostringstream id;
    id << split << "-" << i;
    ds.records.push_back(make_sequence(spec, rng, id.str()));
  }
  return ds;
}

}  // namespace

DataBundle gen_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  DataBundle bundle;
  bundle.train = make_split(spec, rng, "train", spec.train_n);
  bundle.val = make_split(spec, rng, "val", spec.val_n);
  bundle.test = make_split(spec, rng, "test", spec.test_n);
  bundle.synthetic = spec;
  return bundle;
}

MotionSequence closed_form_continuation(const MotionSequence& context, int mode, const SyntheticSpec& spec,
                                        std::int64_t steps) {
  if (mode < 1 || mode > spec.modes) throw std::invalid_argument("closed_form_continuation: mode out of range");
  if (context.dim() != 2 * spec.joints) {
    throw std::invalid_argument("closed_form_continuation: context width mismatch");
  }
  return continuation_from_frame(context.last_frame(), mode, spec, steps);
}

ModeMatch mode_classify(const MotionSequence& context, const MotionSequence& generated_future,
                        const SyntheticSpec& spec) {
  ModeMatch best;
  best.distance = std::numeric_limits<double>::infinity();
  for (int m = 1; m <= spec.modes; ++m) {
    const MotionSequence ref = closed_form_continuation(context, m, spec, generated_future.length());
    double acc = 0.0;
    for (std::int64_t i = 0; i < ref.frames.size(); ++i) {
      const double diff = generated_future.frames[i] - ref.frames[i];
      acc += diff * diff;
    }
    acc /= static_cast<double>(ref.frames.size());
    if (acc < best.distance) {
      best.distance = acc;
      best.mode = m;
    }
  }
  return best;
}

NormalizationStats compute_stats(const SequenceDataset& train) {
  if (train.records.empty()) throw std::invalid_argument("compute_stats: empty dataset");
  const std::int64_t d = train.dim;
  NormalizationStats s;
  s.min.assign(static_cast<std::size_t>(d), std::numeric_limits<double>::infinity());
  s.max.assign(static_cast<std::size_t>(d), -std::numeric_limits<double>::infinity());
  for (const auto& r : train.records) {
    for (std::int64_t t = 0; t < r.seq.length(); ++t) {
      for (std::int64_t j = 0; j < d; ++j) {
        const double v = r.seq.frames[t * d + j];
        auto ju = static_cast<std::size_t>(j);
        s.min[ju] = std::min(s.min[ju], v);
        s.max[ju] = std::max(s.max[ju], v);
      }
    }
  }
  for (std::int64_t j = 0; j < d; ++j) {
    if (!(s.max[static_cast<std::size_t>(j)] > s.min[static_cast<std::size_t>(j)])) {
      throw std::invalid_argument("compute_stats: dimension " + std::to_string(j) +
                                  " is constant; cannot normalize");
    }
  }
  return s;
}

namespace {
SequenceDataset affine_map(const SequenceDataset& ds, const NormalizationStats& stats, bool forward) {
  if (static_cast<std::int64_t>(stats.min.size()) != ds.dim) {
    throw std::invalid_argument("normalize: stats dimension mismatch");
  }
  for (std::size_t j = 0; j < stats.min.size(); ++j) {
    if (!(stats.max[j] > stats.min[j])) {
      throw std::invalid_argument("normalize: degenerate dimension " + std::to_string(j));
    }
  }
  SequenceDataset out = ds;
  const std::int64_t d = ds.dim;
  for (auto& r : out.records) {
    for (std::int64_t i = 0; i < r.seq.frames.size(); ++i) {
      const auto j = static_cast<std::size_t>(i % d);
      const double lo = stats.min[j], hi = stats.max[j];
      if (forward) {
        r.seq.frames[i] = -1.0 + 2.0 * (r.seq.frames[i] - lo) / (hi - lo);
      } else {
        r.seq.frames[i] = lo + (r.seq.frames[i] + 1.0) * (hi - lo) / 2.0;
      }
    }
  }
  out.stats = stats;
  return out;
}
}  // namespace

SequenceDataset normalize(const SequenceDataset& ds, const NormalizationStats& stats) {
  return affine_map(ds, stats, true);
}

SequenceDataset denormalize(const SequenceDataset& ds, const NormalizationStats& stats) {
  return affine_map(ds, stats, false);
}

WindowPlan sample_windows(const SequenceDataset& ds, std::int64_t lo, std::int64_t hi, std::int64_t t_fut,
                          WindowMode mode, std::int64_t stride_or_count, Rng* rng) {
  if (lo < 1 || hi < lo || t_fut < 1) throw std::invalid_argument("sample_windows: bad window lengths");
  WindowPlan plan;
  if (mode == WindowMode::Stride) {
    const std::int64_t stride = stride_or_count;
    if (stride < 1) throw std::invalid_argument("sample_windows: stride must be >= 1");
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
      const std::int64_t len = ds.records[i].seq.length();
      for (std::int64_t start = 0; start + lo + t_fut <= len; start += stride) {
        plan.windows.push_back({static_cast<std::int64_t>(i), start, lo});
      }
      if (len < lo + t_fut) plan.skipped += 1;
    }
  } else {
    if (rng == nullptr) throw std::invalid_argument("sample_windows: random mode needs an rng");
    const std::int64_t count = stride_or_count;
    for (std::int64_t n = 0; n < count; ++n) {
      const auto i = rng->uniform_int(0, static_cast<std::int64_t>(ds.records.size()) - 1);
      const std::int64_t k = rng->uniform_int(lo, hi);
      const std::int64_t len = ds.records[static_cast<std::size_t>(i)].seq.length();
      const std::int64_t max_start = len - k - t_fut;
      if (max_start < 0) {
        plan.skipped += 1;
        continue;
      }
      plan.windows.push_back({i, rng->uniform_int(0, max_start), k});
    }
  }
  if (plan.windows.empty()) {
    throw std::runtime_error("sample_windows: no feasible windows (skipped " + std::to_string(plan.skipped) + ")");
  }
  return plan;
}

WindowPlan aligned_windows(const SequenceDataset& ds, std::int64_t obs_len, std::int64_t t_fut) {
  WindowPlan plan;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& r = ds.records[i];
    if (r.switch_index < obs_len || r.seq.length() < r.switch_index + t_fut) {
      plan.skipped += 1;
      continue;
    }
    plan.windows.push_back({static_cast<std::int64_t>(i), r.switch_index - obs_len, obs_len});
  }
  if (plan.windows.empty()) throw std::runtime_error("aligned_windows: no labeled windows available");
  return plan;
}

std::pair<MotionSequence, MotionSequence> window_pair(const SequenceDataset& ds, const WindowRef& w,
                                                      std::int64_t t_fut) {
  const auto& seq = ds.records[static_cast<std::size_t>(w.seq_index)].seq;
  const std::int64_t d = seq.dim();
  DenseArray a({w.obs_len, d});
  DenseArray b({t_fut, d});
  for (std::int64_t t = 0; t < w.obs_len; ++t) {
    for (std::int64_t j = 0; j < d; ++j) a[t * d + j] = seq.frames[(w.start + t) * d + j];
  }
  for (std::int64_t t = 0; t < t_fut; ++t) {
    for (std::int64_t j = 0; j < d; ++j) b[t * d + j] = seq.frames[(w.start + w.obs_len + t) * d + j];
  }
  return {MotionSequence(std::move(a)), MotionSequence(std::move(b))};
}

// ---------------------------------------------------------------------------
// File formats.

namespace {

json record_to_json(const SequenceRecord& r) {
  json frames = json::array();
  const std::int64_t d = r.seq.dim();
  for (std::int64_t t = 0; t < r.seq.length(); ++t) {
    json row = json::array();
    for (std::int64_t j = 0; j < d; ++j) row.push_back(r.seq.frames[t * d + j]);
    frames.push_back(std::move(row));
  }
  json out{{"id", r.id}, {"d", d}, {"frames", std::move(frames)}};
  if (r.mode >= 0) out["mode"] = r.mode;
  if (r.switch_index >= 0) out["switch_index"] = r.switch_index;
  return out;
}

SequenceRecord record_from_json(const json& j, std::int64_t line_no) {
  auto fail = [&](const std::string& why) -> std::runtime_error {
    return std::runtime_error("sequence file line " + std::to_string(line_no) + ": " + why);
  };
  if (!j.is_object() || !j.contains("id") || !j.contains("d") || !j.contains("frames")) {
    throw fail("record must be an object with id, d, frames");
  }
  SequenceRecord rec;
  rec.id = j.at("id").get<std::string>();
  const auto d = j.at("d").get<std::int64_t>();
  const json& frames = j.at("frames");
  if (d < 1 || !frames.is_array() || frames.empty()) throw fail("record '" + rec.id + "' has no frames");
  const auto t_len = static_cast<std::int64_t>(frames.size());
  DenseArray arr({t_len, d});
  for (std::int64_t t = 0; t < t_len; ++t) {
    const json& row = frames[static_cast<std::size_t>(t)];
    if (!row.is_array() || static_cast<std::int64_t>(row.size()) != d) {
      throw fail("record '" + rec.id + "' frame " + std::to_string(t) + " has width " +
                 std::to_string(row.size()) + ", header says d=" + std::to_string(d));
    }
    for (std::int64_t c = 0; c < d; ++c) arr[t * d + c] = row[static_cast<std::size_t>(c)].get<double>();
  }
  rec.seq = MotionSequence(std::move(arr));
  if (j.contains("mode")) rec.mode = j.at("mode").get<int>();
  if (j.contains("switch_index")) rec.switch_index = j.at("switch_index").get<int>();
  return rec;
}

json stats_to_json(const NormalizationStats& s) { return json{{"min", s.min}, {"max", s.max}}; }

NormalizationStats stats_from_json(const json& j) {
  NormalizationStats s;
  s.min = j.at("min").get<std::vector<double>>();
  s.max = j.at("max").get<std::vector<double>>();
  return s;
}

json spec_to_json(const SyntheticSpec& s) {
  return json{{"modes", s.modes},
              {"joints", s.joints},
              {"amplitude", s.amplitude},
              {"omega0", s.omega0},
              {"mode_omega", s.mode_omega},
              {"mode_drift_angle", s.mode_drift_angle},
              {"drift_step", s.drift_step},
              {"noise", s.noise},
              {"center_box", s.center_box},
              {"obs_len", s.obs_len},
              {"obs_lo", s.obs_lo},
              {"future_len", s.future_len},
              {"train_n", s.train_n},
              {"val_n", s.val_n},
              {"test_n", s.test_n},
              {"seed", s.seed}};
}

SyntheticSpec spec_from_json(const json& j) {
  SyntheticSpec s;
  s.modes = j.at("modes").get<int>();
  s.joints = j.at("joints").get<int>();
  s.amplitude = j.at("amplitude").get<double>();
  s.omega0 = j.at("omega0").get<double>();
  s.mode_omega = j.at("mode_omega").get<std::vector<double>>();
  s.mode_drift_angle = j.at("mode_drift_angle").get<std::vector<double>>();
  s.drift_step = j.at("drift_step").get<double>();
  s.noise = j.at("noise").get<double>();
  s.center_box = j.at("center_box").get<double>();
  s.obs_len = j.at("obs_len").get<std::int64_t>();
  s.obs_lo = j.at("obs_lo").get<std::int64_t>();
  s.future_len = j.at("future_len").get<std::int64_t>();
  s.train_n = j.at("train_n").get<std::int64_t>();
  s.val_n = j.at("val_n").get<std::int64_t>();
  s.test_n = j.at("test_n").get<std::int64_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

void atomic_write(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    os << contents;
    if (!os) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void save_sequence_file(const std::string& path, const SequenceDataset& ds) {
  std::ostringstream os;
  for (const auto& r : ds.records) os << record_to_json(r).dump() << "\n";
  atomic_write(path, os.str());
}

SequenceDataset load_sequence_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open sequence file '" + path + "'");
  SequenceDataset ds;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw std::runtime_error("sequence file line " + std::to_string(line_no) + ": malformed JSON (" +
                               e.what() + ")");
    }
    SequenceRecord rec = record_from_json(j, line_no);
    if (ds.records.empty()) {
      ds.dim = rec.seq.dim();
    } else if (rec.seq.dim() != ds.dim) {
      throw std::runtime_error("sequence file line " + std::to_string(line_no) + ": record '" + rec.id +
                               "' has d=" + std::to_string(rec.seq.dim()) + ", dataset has d=" +
                               std::to_string(ds.dim));
    }
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.empty()) throw std::runtime_error("sequence file '" + path + "' holds no records");
  ds.stats = NormalizationStats::identity(ds.dim);
  return ds;
}

void save_dataset_dir(const std::string& dir, const DataBundle& bundle) {
  std::filesystem::create_directories(dir);
  save_sequence_file(dir + "/train.jsonl", bundle.train);
  save_sequence_file(dir + "/val.jsonl", bundle.val);
  save_sequence_file(dir + "/test.jsonl", bundle.test);
  json manifest{{"format", "mtvae-dataset"},
                {"d", bundle.train.dim},
                {"splits",
                 {{"train", bundle.train.records.size()},
                  {"val", bundle.val.records.size()},
                  {"test", bundle.test.records.size()}}},
                {"normalization", stats_to_json(bundle.train.stats)}};
  if (bundle.synthetic.has_value()) manifest["synthetic"] = spec_to_json(*bundle.synthetic);
  atomic_write(dir + "/manifest.json", manifest.dump(2) + "\n");
}

DataBundle load_dataset_dir(const std::string& dir) {
  std::ifstream is(dir + "/manifest.json");
  if (!is) throw std::runtime_error("cannot open dataset manifest '" + dir + "/manifest.json'");
  json manifest = json::parse(is);
  DataBundle bundle;
  bundle.train = load_sequence_file(dir + "/train.jsonl");
  bundle.val = load_sequence_file(dir + "/val.jsonl");
  bundle.test = load_sequence_file(dir + "/test.jsonl");
  bundle.train.split = "train";
  bundle.val.split = "val";
  bundle.test.split = "test";
  const NormalizationStats stats = stats_from_json(manifest.at("normalization"));
  bundle.train.stats = stats;
  bundle.val.stats = stats;
  bundle.test.stats = stats;
  if (manifest.contains("synthetic") && !manifest.at("synthetic").is_null()) {
    bundle.synthetic = spec_from_json(manifest.at("synthetic"));
  }
  const auto d = manifest.at("d").get<std::int64_t>();
  for (const auto* ds : {&bundle.train, &bundle.val, &bundle.test}) {
    if (ds->dim != d) {
      throw std::runtime_error("dataset dir '" + dir + "': split " + ds->split + " has d=" +
                               std::to_string(ds->dim) + ", manifest says d=" + std::to_string(d));
    }
  }
  return bundle;
}

}  // namespace mtvae

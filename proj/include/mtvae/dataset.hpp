// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mtvae/seqnet.hpp"

namespace mtvae {

struct NormalizationStats {
  std::vector<double> min;
  std::vector<double> max;

  bool empty() const { return min.empty(); }
  static NormalizationStats identity(std::int64_t dim);
};

struct SequenceRecord {
  std::string id;
  MotionSequence seq;
  int mode = -1;          // synthetic ground-truth future mode, 1-based
  int switch_index = -1;  // frame index where the future segment begins
};

struct SequenceDataset {
  std::int64_t dim = 0;
  std::vector<SequenceRecord> records;
  NormalizationStats stats;
  std::string split;

  bool has_modes() const;
  std::size_t size() const { return records.size(); }
};

/// Synthetic branching-motion benchmark. Joints rotate around a per-sequence
/// center; at the switch point the future continues the rotation under one of
/// M modes, each adding a per-frame drift (and optionally a new frequency).
/// The continuation is a closed-form function of the last observed frame, so
/// an exact mode oracle exists.
struct SyntheticSpec {
  int modes = 3;
  int joints = 2;  // D = 2 * joints; centroid recovery needs joints >= 2
  double amplitude = 0.3;
  double omega0 = 0.5;                 // observed angular step per frame
  std::vector<double> mode_omega;      // empty -> all modes keep omega0
  std::vector<double> mode_drift_angle;  // empty -> evenly spread, offset 90 degrees
  double drift_step = 0.028;           // drift magnitude per future frame
  double noise = 0.01;                 // i.i.d. Gaussian, truncated at 4 sigma
  double center_box = 0.2;             // centers uniform in [-box, box]^2
  std::int64_t obs_len = 12;           // observed frames per sequence
  std::int64_t obs_lo = 8;             // window range over the observed suffix
  std::int64_t future_len = 16;
  std::int64_t train_n = 600;
  std::int64_t val_n = 100;
  std::int64_t test_n = 100;
  std::uint64_t seed = 12345;

  double omega_for_mode(int mode) const;        // mode is 1-based
  std::array<double, 2> drift_for_mode(int mode) const;
  void validate() const;
};

struct DataBundle {
  SequenceDataset train, val, test;
  std::optional<SyntheticSpec> synthetic;
};

/// Deterministic in spec (same spec -> bit-identical datasets).
DataBundle gen_synthetic(const SyntheticSpec& spec);

/// Noise-free continuation of `context` under `mode` for `steps` frames.
MotionSequence closed_form_continuation(const MotionSequence& context, int mode, const SyntheticSpec& spec,
                                        std::int64_t steps);

struct ModeMatch {
  int mode = 0;
  double distance = 0.0;  // mean squared error against the best continuation
};

ModeMatch mode_classify(const MotionSequence& context, const MotionSequence& generated_future,
                        const SyntheticSpec& spec);

NormalizationStats compute_stats(const SequenceDataset& train);
SequenceDataset normalize(const SequenceDataset& ds, const NormalizationStats& stats);
SequenceDataset denormalize(const SequenceDataset& ds, const NormalizationStats& stats);

struct WindowRef {
  std::int64_t seq_index = 0;
  std::int64_t start = 0;
  std::int64_t obs_len = 0;
};

enum class WindowMode { Random, Stride };

struct WindowPlan {
  std::vector<WindowRef> windows;
  std::int64_t skipped = 0;
};

/// Random mode: `count` windows with observed length uniform in [lo, hi].
/// Stride mode: deterministic starts every `stride` frames, observed length
/// fixed at lo.
WindowPlan sample_windows(const SequenceDataset& ds, std::int64_t lo, std::int64_t hi, std::int64_t t_fut,
                          WindowMode mode, std::int64_t stride_or_count, Rng* rng);

/// One window per labeled record, ending exactly at the mode switch.
WindowPlan aligned_windows(const SequenceDataset& ds, std::int64_t obs_len, std::int64_t t_fut);

std::pair<MotionSequence, MotionSequence> window_pair(const SequenceDataset& ds, const WindowRef& w,
                                                      std::int64_t t_fut);

// Sequence files: one self-describing JSON record per line with fields
// id, d, frames, and optional mode / switch_index labels.
void save_sequence_file(const std::string& path, const SequenceDataset& ds);
SequenceDataset load_sequence_file(const std::string& path);

// Dataset directory: train/val/test.jsonl plus manifest.json carrying split
// membership, normalization stats, and the generating spec when synthetic.
void save_dataset_dir(const std::string& dir, const DataBundle& bundle);
DataBundle load_dataset_dir(const std::string& dir);

}  // namespace mtvae

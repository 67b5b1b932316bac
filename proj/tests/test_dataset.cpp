// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "mtvae/dataset.hpp"
#include "testutil.hpp"

using namespace mtvae;
namespace tu = mtvae::testutil;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("mtvae_ds_" + name)).string();
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("gen_synthetic is a pure function of the spec") {
  SyntheticSpec spec;
  spec.train_n = 20;
  spec.val_n = 5;
  spec.test_n = 5;
  DataBundle a = gen_synthetic(spec);
  DataBundle b = gen_synthetic(spec);
  REQUIRE(a.train.size() == b.train.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train.records[i].mode == b.train.records[i].mode);
    CHECK(tu::arrays_equal(a.train.records[i].seq.frames, b.train.records[i].seq.frames));
  }
}

TEST_CASE("all synthetic frames stay inside [-1, 1]") {
  SyntheticSpec spec;
  spec.train_n = 50;
  spec.val_n = 5;
  spec.test_n = 5;
  DataBundle d = gen_synthetic(spec);
  for (const auto* split : {&d.train, &d.val, &d.test}) {
    for (const auto& r : split->records) {
      for (std::int64_t i = 0; i < r.seq.frames.size(); ++i) {
        CHECK(r.seq.frames[i] >= -1.0);
        CHECK(r.seq.frames[i] <= 1.0);
      }
    }
  }
  SyntheticSpec bad;
  bad.amplitude = 0.9;  // center_box + amplitude + drift reach exceeds 1
  CHECK_THROWS_AS(gen_synthetic(bad), std::invalid_argument);
}

TEST_CASE("mode draws are uniform within 3 sigma over 3000 sequences") {
  SyntheticSpec spec;
  spec.train_n = 3000;
  spec.val_n = 1;
  spec.test_n = 1;
  DataBundle d = gen_synthetic(spec);
  std::vector<int> counts(static_cast<std::size_t>(spec.modes), 0);
  for (const auto& r : d.train.records) counts[static_cast<std::size_t>(r.mode - 1)] += 1;
  const double expected = 3000.0 / spec.modes;
  const double sigma = std::sqrt(3000.0 * (1.0 / spec.modes) * (1.0 - 1.0 / spec.modes));
  for (int m = 0; m < spec.modes; ++m) {
    CHECK(std::abs(counts[static_cast<std::size_t>(m)] - expected) <= 3.0 * sigma);
  }
}

TEST_CASE("single mode, no noise: futures equal the closed-form continuation") {
  SyntheticSpec spec;
  spec.modes = 1;
  spec.noise = 0.0;
  spec.train_n = 10;
  spec.val_n = 1;
  spec.test_n = 1;
  DataBundle d = gen_synthetic(spec);
  for (const auto& r : d.train.records) {
    WindowRef w{0, 0, spec.obs_len};
    DenseArray ctx({spec.obs_len, d.train.dim});
    for (std::int64_t i = 0; i < ctx.size(); ++i) ctx[i] = r.seq.frames[i];
    MotionSequence context(std::move(ctx));
    MotionSequence cont = closed_form_continuation(context, 1, spec, spec.future_len);
    for (std::int64_t k = 0; k < spec.future_len; ++k) {
      for (std::int64_t j = 0; j < d.train.dim; ++j) {
        CHECK(cont.frames[k * d.train.dim + j] ==
              r.seq.frames[(spec.obs_len + k) * d.train.dim + j]);
      }
    }
    (void)w;
  }
}

TEST_CASE("mode_classify recovers labels and reports exact-match distance") {
  SyntheticSpec spec;
  spec.train_n = 1000;
  spec.val_n = 1;
  spec.test_n = 1;
  DataBundle d = gen_synthetic(spec);
  int correct = 0;
  for (const auto& r : d.train.records) {
    auto [s_a, s_b] = window_pair(d.train, WindowRef{&r - d.train.records.data(), 0, spec.obs_len},
                                  spec.future_len);
    const ModeMatch m = mode_classify(s_a, s_b, spec);
    if (m.mode == r.mode) ++correct;
  }
  CHECK(correct >= 990);  // >= 99% at sigma_noise = 0.01

  // feeding the oracle its own continuation gives distance exactly 0
  const auto& rec = d.train.records[0];
  auto [s_a, s_b] = window_pair(d.train, WindowRef{0, 0, spec.obs_len}, spec.future_len);
  (void)s_b;
  MotionSequence exact = closed_form_continuation(s_a, 2, spec, spec.future_len);
  const ModeMatch m = mode_classify(s_a, exact, spec);
  CHECK(m.mode == 2);
  CHECK(m.distance == 0.0);
  (void)rec;
}

TEST_CASE("normalize endpoints, inverse, and no clipping") {
  SequenceDataset ds;
  ds.dim = 2;
  ds.split = "train";
  SequenceRecord r;
  r.id = "a";
  r.seq = MotionSequence(DenseArray::mat(3, 2, {0.0, 10.0, 5.0, 20.0, 2.5, 15.0}));
  ds.records.push_back(r);
  NormalizationStats stats = compute_stats(ds);
  CHECK(stats.min[0] == 0.0);
  CHECK(stats.max[0] == 5.0);

  SequenceDataset n = normalize(ds, stats);
  CHECK(n.records[0].seq.frames[0] == -1.0);  // min -> -1
  CHECK(n.records[0].seq.frames[2] == 1.0);   // max -> +1

  SequenceDataset back = denormalize(n, stats);
  CHECK(tu::max_abs_diff(back.records[0].seq.frames, ds.records[0].seq.frames) < 1e-9);

  // out-of-range values map outside [-1,1] and are preserved
  SequenceDataset test = ds;
  test.records[0].seq.frames[0] = -5.0;
  SequenceDataset tn = normalize(test, stats);
  CHECK(tn.records[0].seq.frames[0] < -1.0);
  SequenceDataset tb = denormalize(tn, stats);
  CHECK(tb.records[0].seq.frames[0] == doctest::Approx(-5.0).epsilon(1e-12));

  // ordering within a dimension is preserved
  CHECK(tn.records[0].seq.frames[0] < tn.records[0].seq.frames[4]);
  CHECK(tn.records[0].seq.frames[4] < tn.records[0].seq.frames[2]);

  // degenerate dimension
  SequenceDataset flat;
  flat.dim = 1;
  SequenceRecord fr;
  fr.id = "flat";
  fr.seq = MotionSequence(DenseArray::mat(2, 1, {3.0, 3.0}));
  flat.records.push_back(fr);
  CHECK_THROWS_AS(compute_stats(flat), std::invalid_argument);
}

TEST_CASE("window sampling") {
  SequenceDataset ds;
  ds.dim = 1;
  const std::int64_t lo = 8, t_fut = 32;

  SequenceRecord exact;
  exact.id = "exact";
  exact.seq = MotionSequence(DenseArray({lo + t_fut, 1}));
  ds.records.push_back(exact);
  WindowPlan one = sample_windows(ds, lo, lo, t_fut, WindowMode::Stride, 16, nullptr);
  CHECK(one.windows.size() == 1);
  CHECK(one.windows[0].start == 0);

  SequenceDataset ds100;
  ds100.dim = 1;
  SequenceRecord hundred;
  hundred.id = "hundred";
  hundred.seq = MotionSequence(DenseArray({100, 1}));
  ds100.records.push_back(hundred);
  WindowPlan plan = sample_windows(ds100, 8, 8, 32, WindowMode::Stride, 16, nullptr);
  REQUIRE(plan.windows.size() == 4);
  CHECK(plan.windows[0].start == 0);
  CHECK(plan.windows[1].start == 16);
  CHECK(plan.windows[2].start == 32);
  CHECK(plan.windows[3].start == 48);

  // random mode determinism
  Rng r1(3), r2(3);
  WindowPlan p1 = sample_windows(ds100, 4, 8, 32, WindowMode::Random, 20, &r1);
  WindowPlan p2 = sample_windows(ds100, 4, 8, 32, WindowMode::Random, 20, &r2);
  REQUIRE(p1.windows.size() == p2.windows.size());
  for (std::size_t i = 0; i < p1.windows.size(); ++i) {
    CHECK(p1.windows[i].start == p2.windows[i].start);
    CHECK(p1.windows[i].obs_len == p2.windows[i].obs_len);
  }

  // infeasible windows are skipped with a count; all-infeasible errors
  SequenceDataset tiny;
  tiny.dim = 1;
  SequenceRecord small;
  small.id = "small";
  small.seq = MotionSequence(DenseArray({10, 1}));
  tiny.records.push_back(small);
  CHECK_THROWS(sample_windows(tiny, 8, 8, 32, WindowMode::Stride, 16, nullptr));
}

TEST_CASE("windows pair adjacent segments") {
  SyntheticSpec spec;
  spec.train_n = 5;
  spec.val_n = 1;
  spec.test_n = 1;
  DataBundle d = gen_synthetic(spec);
  Rng rng(5);
  WindowPlan plan = sample_windows(d.train, 8, 12, 10, WindowMode::Random, 10, &rng);
  for (const auto& w : plan.windows) {
    auto [s_a, s_b] = window_pair(d.train, w, 10);
    const auto& seq = d.train.records[static_cast<std::size_t>(w.seq_index)].seq;
    for (std::int64_t j = 0; j < seq.dim(); ++j) {
      CHECK(s_b.frames[j] == seq.frames[(w.start + w.obs_len) * seq.dim() + j]);
      CHECK(s_a.frames[(w.obs_len - 1) * seq.dim() + j] ==
            seq.frames[(w.start + w.obs_len - 1) * seq.dim() + j]);
    }
  }

  WindowPlan aligned = aligned_windows(d.train, 10, spec.future_len);
  for (const auto& w : aligned.windows) {
    CHECK(w.start + w.obs_len == d.train.records[static_cast<std::size_t>(w.seq_index)].switch_index);
  }
}

TEST_CASE("sequence file round trip preserves full precision") {
  SyntheticSpec spec;
  spec.train_n = 4;
  spec.val_n = 1;
  spec.test_n = 1;
  DataBundle d = gen_synthetic(spec);
  const std::string path = temp_path("roundtrip.jsonl");
  save_sequence_file(path, d.train);
  SequenceDataset loaded = load_sequence_file(path);
  REQUIRE(loaded.size() == d.train.size());
  CHECK(loaded.dim == d.train.dim);
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded.records[i].id == d.train.records[i].id);
    CHECK(loaded.records[i].mode == d.train.records[i].mode);
    CHECK(loaded.records[i].switch_index == d.train.records[i].switch_index);
    CHECK(tu::arrays_equal(loaded.records[i].seq.frames, d.train.records[i].seq.frames));
  }
  fs::remove(path);
}

TEST_CASE("sequence file validation errors carry context") {
  const std::string path = temp_path("bad.jsonl");
  {
    std::ofstream os(path);
    os << R"({"id":"ok","d":2,"frames":[[0.1,0.2],[0.3,0.4]]})" << "\n";
    os << "not json at all\n";
  }
  CHECK_THROWS_WITH_AS(load_sequence_file(path), doctest::Contains("line 2"), std::runtime_error);

  {
    std::ofstream os(path);
    os << R"({"id":"widths","d":3,"frames":[[0.1,0.2]]})" << "\n";
  }
  CHECK_THROWS_WITH_AS(load_sequence_file(path), doctest::Contains("widths"), std::runtime_error);

  {
    std::ofstream os(path);
    os << R"({"id":"a","d":2,"frames":[[0.1,0.2]]})" << "\n";
    os << R"({"id":"b","d":3,"frames":[[0.1,0.2,0.3]]})" << "\n";
  }
  try {
    load_sequence_file(path);
    CHECK(false);
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    CHECK(what.find("d=3") != std::string::npos);
    CHECK(what.find("d=2") != std::string::npos);
  }

  {
    std::ofstream os(path);
    os << R"({"id":"ok","d":2,"frames":[[0.1,0.2]]})" << "\n";
    os << R"({"id":"ok2","d":2,"frames":[[0.5,-0.5]]})" << "\n";
  }
  CHECK(load_sequence_file(path).size() == 2);
  fs::remove(path);
}

TEST_CASE("dataset directory round trip") {
  SyntheticSpec spec;
  spec.train_n = 6;
  spec.val_n = 3;
  spec.test_n = 3;
  DataBundle d = gen_synthetic(spec);
  const std::string dir = temp_path("bundle");
  save_dataset_dir(dir, d);
  DataBundle loaded = load_dataset_dir(dir);
  CHECK(loaded.train.size() == 6);
  CHECK(loaded.val.size() == 3);
  CHECK(loaded.test.size() == 3);
  REQUIRE(loaded.synthetic.has_value());
  CHECK(loaded.synthetic->modes == spec.modes);
  CHECK(loaded.synthetic->seed == spec.seed);
  CHECK(tu::arrays_equal(loaded.test.records[0].seq.frames, d.test.records[0].seq.frames));
  fs::remove_all(dir);
}

}  // TEST_SUITE

// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mtvae/eval.hpp"
#include "mtvae/train.hpp"
#include "testutil.hpp"

using namespace mtvae;
namespace tu = mtvae::testutil;

namespace {

ModelConfig small_model(std::int64_t dim) {
  ModelConfig mc;
  mc.variant = Variant::MtVaeAdd;
  mc.dim = dim;
  mc.hidden = 16;
  mc.latent = 4;
  mc.future_len = 8;
  mc.obs_lo = 4;
  mc.obs_hi = 6;
  return mc;
}

DataBundle small_data() {
  SyntheticSpec spec;
  spec.train_n = 12;
  spec.val_n = 6;
  spec.test_n = 6;
  spec.obs_len = 6;
  spec.obs_lo = 4;
  spec.future_len = 8;
  return gen_synthetic(spec);
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("min error over a stored sample set") {
  Rng rng(3);
  MotionSequence target = tu::random_sequence(4, 2, rng);
  std::vector<MotionSequence> samples;
  for (int i = 0; i < 5; ++i) samples.push_back(tu::random_sequence(4, 2, rng));

  // brute-force recomputation matches exactly
  double best = total_sq_error(samples[0], target);
  for (const auto& s : samples) best = std::min(best, total_sq_error(s, target));
  CHECK(min_total_sq_error(samples, target) == best);

  // a sample equal to the target drives the min to zero
  samples.push_back(target);
  CHECK(min_total_sq_error(samples, target) == 0.0);

  // n = 1 degenerates to the plain squared error
  std::vector<MotionSequence> one{samples[0]};
  CHECK(min_total_sq_error(one, target) == total_sq_error(samples[0], target));
}

TEST_CASE("r_mse and s_mse contracts") {
  DataBundle data = small_data();
  ModelConfig mc = small_model(data.train.dim);
  Rng prng(5);
  ModelParams params = tu::randomized_params(mc, prng);
  auto [s_a, s_b] = window_pair(data.test, aligned_windows(data.test, 6, 8).windows[0], 8);

  // nested sampling: more samples can only lower the minimum
  Rng r10(9);
  auto r_small = r_mse(params, mc, s_a, s_b, 10, r10);
  Rng r50(9);
  auto r_large = r_mse(params, mc, s_a, s_b, 50, r50);
  REQUIRE(r_small.has_value());
  REQUIRE(r_large.has_value());
  CHECK(*r_large <= *r_small);

  Rng s10(9);
  const double s_small = s_mse(params, mc, s_a, s_b, 10, s10);
  Rng s50(9);
  const double s_large = s_mse(params, mc, s_a, s_b, 50, s50);
  CHECK(s_large <= s_small);

  // deterministic variant: R-MSE undefined, S-MSE independent of n
  ModelConfig pl = mc;
  pl.variant = Variant::PredictionLstm;
  ModelParams pl_params = tu::randomized_params(pl, prng);
  Rng x1(9), x2(9);
  CHECK_FALSE(r_mse(pl_params, pl, s_a, s_b, 10, x1).has_value());
  const double d3 = s_mse(pl_params, pl, s_a, s_b, 3, x1);
  const double d7 = s_mse(pl_params, pl, s_a, s_b, 7, x2);
  CHECK(d3 == d7);
}

TEST_CASE("parzen window log density") {
  Rng rng(11);
  MotionSequence target = tu::random_sequence(4, 2, rng);
  const double h = 0.3;
  const auto n_dim = static_cast<double>(target.frames.size());

  // single sample at the target: the Gaussian mode value
  std::vector<MotionSequence> exact{target};
  const double analytic = -0.5 * n_dim * std::log(2.0 * M_PI * h * h);
  CHECK(std::abs(parzen_log_density(exact, target, h) - analytic) < 1e-9);

  // duplicating the sample set leaves the estimate unchanged
  std::vector<MotionSequence> samples;
  for (int i = 0; i < 6; ++i) samples.push_back(tu::random_sequence(4, 2, rng));
  std::vector<MotionSequence> doubled = samples;
  doubled.insert(doubled.end(), samples.begin(), samples.end());
  CHECK(parzen_log_density(samples, target, h) ==
        doctest::Approx(parzen_log_density(doubled, target, h)).epsilon(1e-12));

  // direct computation (no log-sum-exp) in a safe regime
  double direct = 0.0;
  for (const auto& s : samples) direct += std::exp(-total_sq_error(s, target) / (2.0 * h * h));
  direct = std::log(direct / static_cast<double>(samples.size())) -
           0.5 * n_dim * std::log(2.0 * M_PI * h * h);
  CHECK(std::abs(parzen_log_density(samples, target, h) - direct) < 1e-9);

  // stays finite when every kernel underflows
  MotionSequence far(DenseArray::full({4, 2}, 1e6));
  const double res = parzen_log_density(samples, far, 0.001);
  CHECK(std::isfinite(res));

  CHECK_THROWS_AS(parzen_log_density(samples, target, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(parzen_log_density(samples, target, -1.0), std::invalid_argument);
}

TEST_CASE("select_bandwidth") {
  DataBundle data = small_data();
  ModelConfig mc = small_model(data.train.dim);
  Rng prng(7);
  ModelParams params = tu::randomized_params(mc, prng);

  EvalConfig ec;
  ec.samples_smse = 30;
  ec.bandwidth_windows = 4;
  ec.seed = 3;
  ec.bandwidth_grid = {0.25};
  CHECK(select_bandwidth(params, mc, data.val, ec).best == 0.25);  // singleton grid

  ec.bandwidth_grid = {0.05, 0.1, 0.2, 0.4, 0.8};
  BandwidthSelection sel = select_bandwidth(params, mc, data.val, ec);
  double best_mean = -1e300;
  double best_h = 0.0;
  for (auto [h, m] : sel.table) {
    if (m > best_mean) {
      best_mean = m;
      best_h = h;
    }
  }
  CHECK(sel.best == best_h);  // returned value maximizes its own logged table

  ec.bandwidth_grid = {0.1, -0.5};
  CHECK_THROWS_AS(select_bandwidth(params, mc, data.val, ec), std::invalid_argument);
}

TEST_CASE("mode coverage") {
  DataBundle data = small_data();
  const SyntheticSpec& spec = *data.synthetic;
  ModelConfig mc = small_model(data.train.dim);
  Rng prng(13);
  ModelParams params = tu::randomized_params(mc, prng);
  auto [context, s_b] = window_pair(data.test, aligned_windows(data.test, 6, 8).windows[0], 8);
  (void)s_b;

  // single-mode spec: coverage is always 1
  SyntheticSpec one_mode = spec;
  one_mode.modes = 1;
  Rng r1(5);
  CHECK(mode_coverage_for_context(params, mc, context, 10, one_mode, r1) == 1.0);

  // deterministic model reaches exactly one of M modes
  ModelConfig pl = mc;
  pl.variant = Variant::PredictionLstm;
  ModelParams pl_params = tu::randomized_params(pl, prng);
  Rng r2(5);
  CHECK(mode_coverage_for_context(pl_params, pl, context, 100, spec, r2) <=
        1.0 / static_cast<double>(spec.modes) + 1e-12);

  // nested sampling: coverage is monotone in the sample count
  Rng r3(5);
  const double c10 = mode_coverage_for_context(params, mc, context, 10, spec, r3);
  Rng r4(5);
  const double c100 = mode_coverage_for_context(params, mc, context, 100, spec, r4);
  CHECK(c100 >= c10);
}

TEST_CASE("evaluate report internals") {
  DataBundle data = small_data();
  ModelConfig mc = small_model(data.train.dim);
  Rng prng(17);
  ModelParams params = tu::randomized_params(mc, prng);

  EvalConfig ec;
  ec.samples_rmse = 5;
  ec.samples_smse = 20;
  ec.coverage_samples = 20;
  ec.bandwidth = 0.3;
  ec.seed = 21;

  EvalReport rep = evaluate(params, mc, data.test, ec, &*data.synthetic);
  CHECK(rep.windows == static_cast<std::int64_t>(rep.per_window.size()));
  CHECK(rep.has_r);
  CHECK(rep.has_coverage);

  // aggregates are recomputable from the per-window values
  std::vector<double> svals, cvals;
  for (const auto& w : rep.per_window) {
    svals.push_back(w.s_mse);
    cvals.push_back(w.cll);
  }
  Aggregate s_again = aggregate(svals);
  CHECK(rep.s_mse.mean == s_again.mean);
  CHECK(rep.s_mse.se == s_again.se);
  CHECK(rep.cll.mean == aggregate(cvals).mean);

  // determinism under the same seed
  EvalReport rep2 = evaluate(params, mc, data.test, ec, &*data.synthetic);
  CHECK(rep.s_mse.mean == rep2.s_mse.mean);
  CHECK(rep.r_mse.mean == rep2.r_mse.mean);
  CHECK(rep.cll.mean == rep2.cll.mean);
  CHECK(rep.coverage.mean == rep2.coverage.mean);

  CHECK_THROWS_AS(evaluate(params, mc, data.test, EvalConfig{}), std::invalid_argument);  // no bandwidth

  const std::string table = format_report(rep);
  CHECK(table.find("s_mse") != std::string::npos);
  CHECK(report_to_json(rep).contains("per_window"));
}

TEST_CASE("flattened evaluation dimensionality") {
  CHECK(flattened_eval_dim(32, 29) == 928);   // face: 32-step, 29-dim coefficients
  CHECK(flattened_eval_dim(64, 64) == 4096);  // body: 64-step, 64-dim keypoints
}

TEST_CASE("aggregate statistics") {
  Aggregate a = aggregate({1.0, 2.0, 3.0, 4.0});
  CHECK(a.mean == doctest::Approx(2.5).epsilon(1e-15));
  // sample sd = sqrt(5/3), se = sd / 2
  CHECK(a.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0).epsilon(1e-12));
  CHECK(a.n == 4);
  CHECK(aggregate({7.0}).se == 0.0);
}

}  // TEST_SUITE

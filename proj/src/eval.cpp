// Copyright (c) 2026 the mtvae-lab authors
// SPDX-License-Identifier: Apache-2.0

#include "mtvae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mtvae {

using nlohmann::json;

std::vector<double> default_bandwidth_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 20; ++i) {
    grid.push_back(std::pow(10.0, -3.0 + 4.0 * static_cast<double>(i) / 19.0));
  }
  return grid;
}

std::int64_t flattened_eval_dim(std::int64_t future_len, std::int64_t dim) { return future_len * dim; }

double total_sq_error(const MotionSequence& a, const MotionSequence& b) {
  if (!a.frames.same_shape(b.frames)) {
    throw std::invalid_argument("total_sq_error: shape mismatch " + a.frames.shape_str() + " vs " +
                                b.frames.shape_str());
  }
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.frames.size(); ++i) {
    const double d = a.frames[i] - b.frames[i];
    acc += d * d;
  }
  return acc;
}

double min_total_sq_error(const std::vector<MotionSequence>& samples, const MotionSequence& target) {
  if (samples.empty()) throw std::invalid_argument("min_total_sq_error: empty sample set");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) best = std::min(best, total_sq_error(s, target));
  return best;
}

double parzen_log_density(const std::vector<MotionSequence>& samples, const MotionSequence& target,
                          double bandwidth) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("parzen_log_density: bandwidth must be positive");
  if (samples.empty()) throw std::invalid_argument("parzen_log_density: empty sample set");
  const auto n_dim = static_cast<double>(target.frames.size());
  const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
  std::vector<double> log_kernels;
  log_kernels.reserve(samples.size());
  for (const auto& s : samples) log_kernels.push_back(-total_sq_error(s, target) * inv2h2);
  const double m = *std::max_element(log_kernels.begin(), log_kernels.end());
  double acc = 0.0;
  for (double lk : log_kernels) acc += std::exp(lk - m);
  return m + std::log(acc) - std::log(static_cast<double>(samples.size())) -
         0.5 * n_dim * std::log(2.0 * M_PI * bandwidth * bandwidth);
}

std::vector<MotionSequence> sample_posterior_futures(const ModelParams& params, const ModelConfig& cfg,
                                                     const MotionSequence& s_a, const MotionSequence& s_b,
                                                     std::int64_t n, Rng& rng) {
  if (!cfg.is_vae()) throw std::invalid_argument("sample_posterior_futures: no recognition model in pred-lstm");
  const LatentGaussian q = posterior_gaussian(params, cfg, s_a, s_b);
  DenseArray zs({n, cfg.latent});
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < cfg.latent; ++j) {
      zs[i * cfg.latent + j] = q.mu[j] + std::exp(0.5 * q.log_var[j]) * rng.normal();
    }
  }
  return generate_futures(params, cfg, s_a, zs, s_b.length());
}

std::vector<MotionSequence> sample_prior_futures(const ModelParams& params, const ModelConfig& cfg,
                                                 const MotionSequence& s_a, std::int64_t n,
                                                 std::int64_t future_len, Rng& rng) {
  if (!cfg.is_vae()) throw std::invalid_argument("sample_prior_futures: no prior sampling in pred-lstm");
  return generate_futures(params, cfg, s_a, rng.normal_array({n, cfg.latent}), future_len);
}

std::optional<double> r_mse(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& s_a,
                            const MotionSequence& s_b, std::int64_t n, Rng& rng) {
  if (!cfg.is_vae()) return std::nullopt;
  return min_total_sq_error(sample_posterior_futures(params, cfg, s_a, s_b, n, rng), s_b);
}

double s_mse(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& s_a,
             const MotionSequence& s_b, std::int64_t n, Rng& rng) {
  if (!cfg.is_vae()) {
    const MotionSequence pred = predict_future(params, cfg, s_a, std::nullopt, s_b.length());
    return total_sq_error(pred, s_b);
  }
  return min_total_sq_error(sample_prior_futures(params, cfg, s_a, n, s_b.length(), rng), s_b);
}

double parzen_cll(const ModelParams& params, const ModelConfig& cfg, const MotionSequence& s_a,
                  const MotionSequence& s_b, std::int64_t n, double bandwidth, Rng& rng) {
  if (!cfg.is_vae()) {
    const std::vector<MotionSequence> one{predict_future(params, cfg, s_a, std::nullopt, s_b.length())};
    return parzen_log_density(one, s_b, bandwidth);
  }
  return parzen_log_density(sample_prior_futures(params, cfg, s_a, n, s_b.length(), rng), s_b, bandwidth);
}

namespace {

WindowPlan eval_windows(const SequenceDataset& ds, const ModelConfig& cfg, const EvalConfig& ecfg) {
  WindowPlan plan = ds.has_modes() ? aligned_windows(ds, cfg.obs_hi, cfg.future_len)
                                   : sample_windows(ds, cfg.obs_lo, cfg.obs_hi, cfg.future_len,
                                                    WindowMode::Stride, ecfg.stride, nullptr);
  if (ecfg.max_windows > 0 && static_cast<std::int64_t>(plan.windows.size()) > ecfg.max_windows) {
    // deterministic decimation
    std::vector<WindowRef> kept;
    const auto total = static_cast<std::int64_t>(plan.windows.size());
    for (std::int64_t k = 0; k < ecfg.max_windows; ++k) {
      kept.push_back(plan.windows[static_cast<std::size_t>(k * total / ecfg.max_windows)]);
    }
    plan.windows = std::move(kept);
  }
  return plan;
}

}  // namespace

BandwidthSelection select_bandwidth(const ModelParams& params, const ModelConfig& cfg,
                                    const SequenceDataset& validation, const EvalConfig& ecfg) {
  std::vector<double> grid = ecfg.bandwidth_grid.empty() ? default_bandwidth_grid() : ecfg.bandwidth_grid;
  if (grid.empty()) throw std::invalid_argument("select_bandwidth: empty grid");
  for (double h : grid) {
    if (!(h > 0.0)) throw std::invalid_argument("select_bandwidth: non-positive grid bandwidth");
  }
  EvalConfig wcfg = ecfg;
  wcfg.max_windows = ecfg.bandwidth_windows;
  const WindowPlan plan = eval_windows(validation, cfg, wcfg);

  // One sample set per window, shared across the grid.
  std::vector<std::vector<MotionSequence>> all_samples;
  std::vector<MotionSequence> targets;
  for (std::size_t wi = 0; wi < plan.windows.size(); ++wi) {
    Rng rng = Rng::derive(ecfg.seed, 0x5e1ec7 + wi);
    auto [s_a, s_b] = window_pair(validation, plan.windows[wi], cfg.future_len);
    if (cfg.is_vae()) {
      all_samples.push_back(sample_prior_futures(params, cfg, s_a, ecfg.samples_smse, cfg.future_len, rng));
    } else {
      all_samples.push_back({predict_future(params, cfg, s_a, std::nullopt, cfg.future_len)});
    }
    targets.push_back(std::move(s_b));
  }

  BandwidthSelection sel;
  double best_mean = -std::numeric_limits<double>::infinity();
  for (double h : grid) {
    double acc = 0.0;
    for (std::size_t wi = 0; wi < all_samples.size(); ++wi) {
      acc += parzen_log_density(all_samples[wi], targets[wi], h);
    }
    const double mean_cll = acc / static_cast<double>(all_samples.size());
    sel.table.emplace_back(h, mean_cll);
    if (mean_cll > best_mean) {
      best_mean = mean_cll;
      sel.best = h;
    }
  }
  return sel;
}

double mode_coverage_for_context(const ModelParams& params, const ModelConfig& cfg,
                                 const MotionSequence& context, std::int64_t n, const SyntheticSpec& spec,
                                 Rng& rng) {
  std::set<int> seen;
  if (cfg.is_vae()) {
    const auto futures = sample_prior_futures(params, cfg, context, n, cfg.future_len, rng);
    for (const auto& f : futures) seen.insert(mode_classify(context, f, spec).mode);
  } else {
    const MotionSequence pred = predict_future(params, cfg, context, std::nullopt, cfg.future_len);
    seen.insert(mode_classify(context, pred, spec).mode);
  }
  return static_cast<double>(seen.size()) / static_cast<double>(spec.modes);
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.n = static_cast<std::int64_t>(values.size());
  if (a.n == 0) return a;
  double acc = 0.0;
  for (double v : values) acc += v;
  a.mean = acc / static_cast<double>(a.n);
  if (a.n > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - a.mean) * (v - a.mean);
    a.se = std::sqrt(sq / static_cast<double>(a.n - 1)) / std::sqrt(static_cast<double>(a.n));
  }
  return a;
}

EvalReport evaluate(const ModelParams& params, const ModelConfig& cfg, const SequenceDataset& ds,
                    const EvalConfig& ecfg, const SyntheticSpec* spec) {
  if (ecfg.samples_rmse < 1 || ecfg.samples_smse < 1) throw std::invalid_argument("evaluate: sample counts >= 1");
  if (!(ecfg.bandwidth > 0.0)) {
    throw std::invalid_argument("evaluate: bandwidth unset; pass a value or select one on the validation set");
  }
  const double bandwidth = ecfg.bandwidth;
  const WindowPlan plan = eval_windows(ds, cfg, ecfg);
  const bool labeled = ds.has_modes() && spec != nullptr;

  EvalReport report;
  report.variant = variant_name(cfg.variant);
  report.split = ds.split;
  report.windows = static_cast<std::int64_t>(plan.windows.size());
  report.bandwidth = bandwidth;
  report.has_r = cfg.is_vae();
  report.has_coverage = labeled;

  std::vector<double> rs, ss, cs, covs;
  for (std::size_t wi = 0; wi < plan.windows.size(); ++wi) {
    Rng rng = Rng::derive(ecfg.seed, wi);
    auto [s_a, s_b] = window_pair(ds, plan.windows[wi], cfg.future_len);
    WindowMetrics m;
    if (cfg.is_vae()) {
      m.r_mse = min_total_sq_error(sample_posterior_futures(params, cfg, s_a, s_b, ecfg.samples_rmse, rng), s_b);
      m.has_r = true;
      rs.push_back(m.r_mse);
      const auto prior = sample_prior_futures(params, cfg, s_a, ecfg.samples_smse, cfg.future_len, rng);
      m.s_mse = min_total_sq_error(prior, s_b);
      m.cll = parzen_log_density(prior, s_b, bandwidth);
      if (labeled) {
        std::set<int> seen;
        const auto limit = static_cast<std::size_t>(std::min(ecfg.coverage_samples,
                                                             static_cast<std::int64_t>(prior.size())));
        for (std::size_t k = 0; k < limit; ++k) seen.insert(mode_classify(s_a, prior[k], *spec).mode);
        m.coverage = static_cast<double>(seen.size()) / static_cast<double>(spec->modes);
        m.has_coverage = true;
      }
    } else {
      const MotionSequence pred = predict_future(params, cfg, s_a, std::nullopt, cfg.future_len);
      m.s_mse = total_sq_error(pred, s_b);
      m.cll = parzen_log_density({pred}, s_b, bandwidth);
      if (labeled) {
        m.coverage = 1.0 / static_cast<double>(spec->modes);
        m.has_coverage = true;
      }
    }
    ss.push_back(m.s_mse);
    cs.push_back(m.cll);
    if (m.has_coverage) covs.push_back(m.coverage);
    report.per_window.push_back(m);
  }
  report.r_mse = aggregate(rs);
  report.s_mse = aggregate(ss);
  report.cll = aggregate(cs);
  report.coverage = aggregate(covs);
  report.config_echo = json{{"samples_rmse", ecfg.samples_rmse},
                            {"samples_smse", ecfg.samples_smse},
                            {"coverage_samples", ecfg.coverage_samples},
                            {"stride", ecfg.stride},
                            {"bandwidth", bandwidth},
                            {"seed", ecfg.seed},
                            {"max_windows", ecfg.max_windows}};
  return report;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  char line[256];
  os << "eval report: variant=" << report.variant << " split=" << report.split << " windows=" << report.windows
     << " bandwidth=" << report.bandwidth << "\n";
  os << "# errors are standard errors over evaluation windows\n";
  std::snprintf(line, sizeof(line), "%-10s %14s %14s\n", "metric", "mean", "stderr");
  os << line;
  auto put = [&](const char* name, const Aggregate& a, bool present) {
    if (!present) {
      std::snprintf(line, sizeof(line), "%-10s %14s %14s\n", name, "---", "---");
    } else {
      std::snprintf(line, sizeof(line), "%-10s %14.6g %14.6g\n", name, a.mean, a.se);
    }
    os << line;
  };
  put("r_mse", report.r_mse, report.has_r);
  put("s_mse", report.s_mse, true);
  put("cll", report.cll, true);
  put("coverage", report.coverage, report.has_coverage);
  return os.str();
}

json report_to_json(const EvalReport& report) {
  auto agg = [](const Aggregate& a) { return json{{"mean", a.mean}, {"se", a.se}, {"n", a.n}}; };
  json per = json::array();
  for (const auto& m : report.per_window) {
    json row{{"s_mse", m.s_mse}, {"cll", m.cll}};
    if (m.has_r) row["r_mse"] = m.r_mse;
    if (m.has_coverage) row["coverage"] = m.coverage;
    per.push_back(std::move(row));
  }
  json out{{"variant", report.variant},
           {"split", report.split},
           {"windows", report.windows},
           {"bandwidth", report.bandwidth},
           {"error_bars", "standard error over windows"},
           {"s_mse", agg(report.s_mse)},
           {"cll", agg(report.cll)},
           {"config", report.config_echo},
           {"per_window", std::move(per)}};
  if (report.has_r) out["r_mse"] = agg(report.r_mse);
  if (report.has_coverage) out["coverage"] = agg(report.coverage);
  return out;
}

}  // namespace mtvae

#include "borrowlab/bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "borrowlab/error.hpp"
#include "borrowlab/parallel.hpp"

namespace borrowlab {

namespace {

constexpr double kMaxFailureFraction = 0.05;
constexpr std::uint64_t kSubsampleStream = 0x5bd1e995ULL;

struct RowSpec {
  Method method;
  std::optional<std::size_t> k;
};

struct Outcome {
  double tau = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();
  double k = 0.0;
};

bool wants(const BenchConfig& cfg, Method m) {
  return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
}

std::vector<RowSpec> row_specs(const BenchConfig& cfg) {
  std::vector<RowSpec> specs;
  for (const Method m : cfg.methods) {
    // aipw and full do not depend on k: one row each.
    if (m == Method::Fused) {
      throw Error(ErrorCode::InvalidArgument, "benchmark methods are aipw, full, lasso and if", "bench");
    }
    if (m == Method::Aipw || m == Method::Full) {
      specs.push_back({m, std::nullopt});
      continue;
    }
    for (const auto k : cfg.k_list) specs.push_back({m, k});
    if (cfg.include_selected || cfg.k_list.empty()) specs.push_back({m, std::nullopt});
  }
  return specs;
}

Outcome outcome_of(const EstimateReport& rep) {
  return {rep.tau_hat, rep.se_hat, static_cast<double>(rep.k_borrowed)};
}

template <typename Fn>
void record(std::vector<Outcome>& out, const std::vector<RowSpec>& specs, Method m,
            std::optional<std::size_t> k, Fn&& compute) {
  for (std::size_t s = 0; s < specs.size(); ++s) {
    if (specs[s].method != m || specs[s].k != k) continue;
    try {
      out[s] = compute();
    } catch (const std::exception&) {
      out[s] = Outcome{};
    }
  }
}

// One replication on one dataset. The ranking methods share the trial-only
// fits (paired design).
std::vector<Outcome> replicate(const TrialDataset& trial, const ExternalPool& pool,
                               const std::vector<RowSpec>& specs, const BenchConfig& cfg) {
  std::vector<Outcome> out(specs.size());
  SelectionConfig sel = cfg.selection;
  sel.threads = 1;
  const NuisanceConfig& ncfg = sel.nuisance;

  BaseFits base;
  NuisanceSet trial_only;
  try {
    base = fit_base(trial, pool, ncfg);
    trial_only = fit_nuisances(trial, pool, {}, base, ncfg);
  } catch (const std::exception&) {
    return out;
  }

  if (wants(cfg, Method::Aipw)) {
    const EstimateReport aipw = tau_aipw(trial, trial_only);
    for (std::size_t s = 0; s < specs.size(); ++s)
      if (specs[s].method == Method::Aipw) out[s] = outcome_of(aipw);
  }

  if (wants(cfg, Method::Full)) {
    try {
      std::vector<std::size_t> all(pool.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      const NuisanceSet ns = fit_nuisances(trial, pool, all, base, ncfg);
      const EstimateReport full = tau_full(trial, pool, ns);
      for (std::size_t s = 0; s < specs.size(); ++s)
        if (specs[s].method == Method::Full) out[s] = outcome_of(full);
    } catch (const std::exception&) {
    }
  }

  if (wants(cfg, Method::Influence)) {
    try {
      const InfluenceRanking ranking = influence_ranking(trial, pool, base, sel);
      for (const auto k : cfg.k_list) {
        record(out, specs, Method::Influence, k, [&] {
          return outcome_of(estimate_at_k(trial, pool, ranking.order, std::min(k, pool.size()), base, ncfg));
        });
      }
      record(out, specs, Method::Influence, std::nullopt, [&] {
        const auto grid = sel.k_grid.empty() ? default_k_grid(pool.size(), sel.dense) : sel.k_grid;
        const MseProfile profile =
            mse_profile(trial, pool, ranking.order, RankingSource::Influence, grid, sel, &base);
        const Selection chosen = select_optimal(profile);
        return outcome_of(estimate_at_k(trial, pool, ranking.order, chosen.k_star, base, ncfg));
      });
    } catch (const std::exception&) {
    }
  }

  if (wants(cfg, Method::Lasso)) {
    try {
      const BiasVector bv = estimate_bias_vector(trial, pool, trial_only);
      const std::vector<std::size_t> order = lasso_rank(bv);
      for (const auto k : cfg.k_list) {
        record(out, specs, Method::Lasso, k, [&] {
          return outcome_of(estimate_at_k(trial, pool, order, std::min(k, pool.size()), base, ncfg));
        });
      }
      record(out, specs, Method::Lasso, std::nullopt,
             [&] { return outcome_of(select_lasso(trial, pool, base, sel).report); });
    } catch (const std::exception&) {
    }
  }
  return out;
}

MetricsRow summarize(const RowSpec& spec, const std::vector<std::vector<Outcome>>& results,
                     std::size_t s, double tau, BiasMode mode) {
  MetricsRow row;
  row.method = spec.method;
  row.k = spec.k;
  std::vector<double> taus;
  double se_sum = 0.0;
  double k_sum = 0.0;
  for (const auto& rep : results) {
    const Outcome& o = rep[s];
    row.estimates.push_back(o.tau);
    if (!std::isfinite(o.tau)) {
      ++row.n_failed;
      continue;
    }
    taus.push_back(o.tau);
    se_sum += o.se;
    k_sum += o.k;
  }
  row.n_reps = taus.size();
  const std::size_t total = results.size();
  row.aborted = static_cast<double>(row.n_failed) > kMaxFailureFraction * static_cast<double>(total) ||
                taus.size() < 2;
  if (taus.empty()) return row;

  const double n = static_cast<double>(taus.size());
  const double mean = std::accumulate(taus.begin(), taus.end(), 0.0) / n;
  double ss = 0.0;
  double sq_err = 0.0;
  double abs_err = 0.0;
  for (const double t : taus) {
    ss += (t - mean) * (t - mean);
    sq_err += (t - tau) * (t - tau);
    abs_err += std::abs(t - tau);
  }
  row.mc_bias = mode == BiasMode::AbsMean ? std::abs(mean - tau) : abs_err / n;
  row.mc_std = taus.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  row.mc_mse = sq_err / n;
  row.mc_se_of_bias = row.mc_std / std::sqrt(n);
  row.mean_se_hat = se_sum / n;
  row.mean_k = k_sum / n;
  return row;
}

MetricsTable run_replications(const std::function<SimData(std::size_t)>& draw, double tau,
                              const BenchConfig& cfg, std::string scenario) {
  if (cfg.reps < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 replications", "bench");
  const auto specs = row_specs(cfg);
  std::vector<std::vector<Outcome>> results(cfg.reps, std::vector<Outcome>(specs.size()));
  parallel_for(cfg.reps, cfg.threads, [&](std::size_t r) {
    try {
      const SimData data = draw(r);
      results[r] = replicate(data.trial, data.pool, specs, cfg);
    } catch (const std::exception&) {
      results[r] = std::vector<Outcome>(specs.size());
    }
  });

  MetricsTable table;
  table.scenario = std::move(scenario);
  table.tau_true = tau;
  table.bias_mode = cfg.bias_mode;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    table.rows.push_back(summarize(specs[s], results, s, tau, cfg.bias_mode));
  }
  return table;
}

}  // namespace

const char* to_string(BiasMode m) { return m == BiasMode::AbsMean ? "abs-mean" : "mean-abs"; }

BiasMode parse_bias_mode(const std::string& name) {
  if (name == "abs-mean") return BiasMode::AbsMean;
  if (name == "mean-abs") return BiasMode::MeanAbs;
  throw Error(ErrorCode::InvalidArgument, "unknown bias mode '" + name + "'", "bias-mode");
}

const MetricsRow& MetricsTable::find(Method method, std::optional<std::size_t> k) const {
  for (const auto& row : rows) {
    if (row.method == method && row.k == k) return row;
  }
  throw Error(ErrorCode::InvalidArgument,
              std::string("no row for method ") + to_string(method) +
                  (k ? " at k=" + std::to_string(*k) : " at selected k"),
              "MetricsTable::find");
}

TrialDataset subsample_controls(const TrialDataset& trial, std::size_t control_n, std::uint64_t seed) {
  const auto controls = trial.arm(0);
  if (control_n > controls.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "control-n " + std::to_string(control_n) + " exceeds the " +
                    std::to_string(controls.size()) + " available controls",
                "subsample_controls");
  }
  if (control_n == controls.size()) return trial;
  std::vector<std::size_t> picked = controls;
  std::mt19937_64 rng(seed ^ kSubsampleStream);
  std::shuffle(picked.begin(), picked.end(), rng);
  picked.resize(control_n);
  std::vector<std::size_t> rows = trial.arm(1);
  rows.insert(rows.end(), picked.begin(), picked.end());
  std::sort(rows.begin(), rows.end());
  return trial.subset(rows);
}

MetricsTable run_monte_carlo(const ScenarioConfig& scenario, const BenchConfig& cfg) {
  if (cfg.control_n && *cfg.control_n > scenario.params.n_control()) {
    throw Error(ErrorCode::InvalidArgument, "control-n exceeds the simulated control arm",
                "run_monte_carlo");
  }
  const double tau = true_tau(scenario).value;
  auto draw = [&](std::size_t r) {
    const std::uint64_t seed = cfg.base_seed + r;
    SimData data = generate(scenario, seed);
    if (cfg.control_n) data.trial = subsample_controls(data.trial, *cfg.control_n, seed);
    return data;
  };
  std::string tag = scenario.digest();
  if (cfg.control_n) tag += ";control_n=" + std::to_string(*cfg.control_n);
  return run_replications(draw, tau, cfg, std::move(tag));
}

std::vector<MetricsTable> sweep_shift(const ScenarioParams& params, const std::vector<double>& mu2_list,
                                      const BenchConfig& cfg) {
  std::vector<MetricsTable> out;
  for (const double mu2 : mu2_list) {
    ScenarioParams p = params;
    p.mu2 = mu2;
    out.push_back(run_monte_carlo(ScenarioConfig::build(p), cfg));
  }
  return out;
}

std::vector<MetricsTable> sweep_control_n(const ScenarioParams& params,
                                          const std::vector<std::size_t>& nc_list,
                                          const BenchConfig& cfg) {
  std::vector<MetricsTable> out;
  const ScenarioConfig scenario = ScenarioConfig::build(params);
  for (const auto nc : nc_list) {
    BenchConfig c = cfg;
    c.control_n = nc;
    out.push_back(run_monte_carlo(scenario, c));
  }
  return out;
}

MetricsTable run_real_data(const TrialDataset& trial, const ExternalPool& pool,
                           std::size_t control_n, const BenchConfig& cfg) {
  const NuisanceSet ns = fit_nuisances(trial, pool, {}, cfg.selection.nuisance);
  const double pseudo_truth = tau_aipw(trial, ns).tau_hat;
  auto draw = [&](std::size_t r) {
    return SimData{subsample_controls(trial, control_n, cfg.base_seed + r), pool, {}};
  };
  return run_replications(draw, pseudo_truth, cfg,
                          "real-data;n_trial=" + std::to_string(trial.size()) + ";n_pool=" +
                              std::to_string(pool.size()) + ";control_n=" + std::to_string(control_n));
}

}  // namespace borrowlab

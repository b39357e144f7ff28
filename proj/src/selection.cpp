#include "borrowlab/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "borrowlab/error.hpp"
#include "borrowlab/parallel.hpp"

namespace borrowlab {

const char* to_string(RankingSource s) {
  return s == RankingSource::Influence ? "influence" : "lasso-bias";
}

std::vector<std::size_t> default_k_grid(std::size_t pool_size, bool dense) {
  std::vector<std::size_t> grid{0};
  if (pool_size == 0) return grid;
  if (dense) {
    for (std::size_t k = 1; k <= pool_size; ++k) grid.push_back(k);
    return grid;
  }
  const std::size_t step = (pool_size + 49) / 50;
  grid.push_back(1);
  for (std::size_t k = step; k < pool_size; k += step) {
    if (k > 1) grid.push_back(k);
  }
  if (grid.back() != pool_size) grid.push_back(pool_size);
  return grid;
}

EstimateReport estimate_at_k(const TrialDataset& trial, const ExternalPool& pool,
                             std::span<const std::size_t> order, std::size_t k,
                             const BaseFits& base, const NuisanceConfig& cfg) {
  if (k > order.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "k exceeds ranking length", "estimate_at_k");
  }
  const auto borrowed = order.first(k);
  const NuisanceSet ns = fit_nuisances(trial, pool, borrowed, base, cfg);
  return tau_fused(trial, pool, borrowed, ns);
}

MseProfile mse_profile(const TrialDataset& trial, const ExternalPool& pool,
                       std::span<const std::size_t> order, RankingSource source,
                       std::span<const std::size_t> k_grid, const SelectionConfig& cfg,
                       const BaseFits* base) {
  std::optional<BaseFits> own;
  if (!base) {
    own = fit_base(trial, pool, cfg.nuisance);
    base = &*own;
  }
  std::vector<std::size_t> grid(k_grid.begin(), k_grid.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty() || grid.front() != 0) grid.insert(grid.begin(), 0);
  if (grid.back() > order.size()) {
    throw Error(ErrorCode::IndexOutOfRange, "k grid exceeds pool size", "mse_profile");
  }

  const NuisanceSet trial_only = fit_nuisances(trial, pool, {}, *base, cfg.nuisance);
  const EstimateReport aipw = tau_aipw(trial, trial_only);

  MseProfile profile;
  profile.k_grid = grid;
  profile.ranking_source = source;
  profile.order.assign(order.begin(), order.end());
  profile.rows.resize(grid.size());

  parallel_for(grid.size(), cfg.threads, [&](std::size_t g) {
    MseRow& row = profile.rows[g];
    row.k = grid[g];
    if (row.k == 0) {
      row.tau_hat = aipw.tau_hat;
      row.bias_hat = 0.0;
      row.var_hat = aipw.se_hat * aipw.se_hat;
      row.mse_hat = row.var_hat;
      return;
    }
    try {
      const EstimateReport rep = estimate_at_k(trial, pool, order, row.k, *base, cfg.nuisance);
      row.tau_hat = rep.tau_hat;
      row.bias_hat = rep.tau_hat - aipw.tau_hat;
      row.var_hat = sample_variance(rep.eif_values) / static_cast<double>(trial.size() + row.k);
      row.mse_hat = row.bias_hat * row.bias_hat + row.var_hat;
      if (!std::isfinite(row.mse_hat)) throw Error(ErrorCode::Numerical, "non-finite MSE", "mse_profile");
    } catch (const std::exception& e) {
      row.failed = true;
      row.error = e.what();
    }
  });

  profile.k_star = select_optimal(profile).k_star;
  return profile;
}

Selection select_optimal(const MseProfile& profile) {
  const MseRow* best = nullptr;
  for (const auto& row : profile.rows) {
    if (row.failed) continue;
    if (!best || row.mse_hat < best->mse_hat || (row.mse_hat == best->mse_hat && row.k < best->k)) {
      best = &row;
    }
  }
  if (!best) throw Error(ErrorCode::Selection, "every row of the MSE profile failed", "select_optimal");
  Selection sel;
  sel.k_star = best->k;
  if (best->k > profile.order.size()) {
    throw Error(ErrorCode::Selection, "profile ordering shorter than k_star", "select_optimal");
  }
  sel.indices.assign(profile.order.begin(), profile.order.begin() + static_cast<std::ptrdiff_t>(best->k));
  return sel;
}

InfluenceRanking influence_ranking(const TrialDataset& trial, const ExternalPool& pool,
                                   const BaseFits& base, const SelectionConfig& cfg) {
  const Eigen::MatrixXd cx = trial.arm_x(0);
  const Eigen::VectorXd cy = trial.arm_y(0);
  const HessianFactor h = hessian(base.mu0, cx, cfg.hessian_damping);
  return rank_pool(base.mu0, h, cx, cy, pool, cfg.threads);
}

PipelineResult estimate_full_pipeline(const TrialDataset& trial, const ExternalPool& pool,
                                      const SelectionConfig& cfg) {
  return estimate_full_pipeline(trial, pool, fit_base(trial, pool, cfg.nuisance), cfg);
}

PipelineResult estimate_full_pipeline(const TrialDataset& trial, const ExternalPool& pool,
                                      const BaseFits& base, const SelectionConfig& cfg) {
  PipelineResult result;
  if (pool.empty()) {
    result.profile.k_grid = {0};
    const NuisanceSet ns = fit_nuisances(trial, pool, {}, base, cfg.nuisance);
    result.report = tau_aipw(trial, ns);
    result.profile.rows.push_back(
        MseRow{0, result.report.tau_hat, 0.0, result.report.se_hat * result.report.se_hat,
               result.report.se_hat * result.report.se_hat, false, {}});
    return result;
  }
  result.ranking = influence_ranking(trial, pool, base, cfg);
  const auto grid = cfg.k_grid.empty() ? default_k_grid(pool.size(), cfg.dense) : cfg.k_grid;
  result.profile = mse_profile(trial, pool, result.ranking.order, RankingSource::Influence, grid,
                               cfg, &base);
  const Selection sel = select_optimal(result.profile);
  result.selected = sel.indices;
  result.report = estimate_at_k(trial, pool, result.ranking.order, sel.k_star, base, cfg.nuisance);
  result.report.method = Method::Influence;
  result.report.k_borrowed = sel.k_star;
  return result;
}

LassoSelection select_lasso(const TrialDataset& trial, const ExternalPool& pool,
                            const BaseFits& base, const SelectionConfig& cfg,
                            std::size_t grid_size, double nu) {
  const NuisanceSet trial_only = fit_nuisances(trial, pool, {}, base, cfg.nuisance);
  const EstimateReport aipw = tau_aipw(trial, trial_only);
  const BiasVector bv = estimate_bias_vector(trial, pool, trial_only);

  // lambda_j is the smallest penalty that zeroes b~_j.
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (Eigen::Index j = 0; j < bv.b_hat.size(); ++j) {
    const double crit = 2.0 * std::pow(std::abs(bv.b_hat[j]), nu + 1.0) / bv.sigma2_hat[j];
    if (crit > 0.0) {
      lo = std::min(lo, crit);
      hi = std::max(hi, crit);
    }
  }
  std::vector<double> grid;
  if (!(hi > 0.0)) {
    grid.push_back(0.0);
  } else if (grid_size <= 1 || lo == hi) {
    grid.push_back(hi);
  } else {
    const double step = std::log(hi / lo) / static_cast<double>(grid_size - 1);
    for (std::size_t g = 0; g < grid_size; ++g) {
      grid.push_back(g + 1 == grid_size ? hi : lo * std::exp(step * static_cast<double>(g)));
    }
  }

  LassoSelection best;
  best.nu = nu;
  best.mse_hat = std::numeric_limits<double>::infinity();
  bool found = false;
  std::vector<std::size_t> previous;
  for (const double lambda : grid) {
    BiasVector thresholded = adaptive_lasso_threshold(bv, lambda, nu);
    std::vector<std::size_t> borrowed = lasso_borrow_set(thresholded);
    if (found && borrowed == previous) continue;
    double mse = 0.0;
    EstimateReport rep;
    try {
      if (borrowed.empty()) {
        rep = aipw;
        mse = aipw.se_hat * aipw.se_hat;
      } else {
        const NuisanceSet ns = fit_nuisances(trial, pool, borrowed, base, cfg.nuisance);
        rep = tau_fused(trial, pool, borrowed, ns);
        const double bias = rep.tau_hat - aipw.tau_hat;
        mse = bias * bias +
              sample_variance(rep.eif_values) / static_cast<double>(trial.size() + borrowed.size());
      }
    } catch (const std::exception&) {
      continue;
    }
    previous = borrowed;
    if (!found || mse < best.mse_hat) {
      found = true;
      best.lambda = lambda;
      best.borrowed = std::move(borrowed);
      best.report = std::move(rep);
      best.mse_hat = mse;
      best.bias = std::move(thresholded);
    }
  }
  if (!found) throw Error(ErrorCode::Selection, "no lasso penalty produced a usable fit", "select_lasso");
  best.report.method = Method::Lasso;
  best.report.k_borrowed = best.borrowed.size();
  return best;
}

}  // namespace borrowlab

#include "borrowlab/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>

#include <json.hpp>

#include "borrowlab/bench.hpp"
#include "borrowlab/error.hpp"
#include "borrowlab/io.hpp"
#include "borrowlab/selection.hpp"
#include "borrowlab/simgen.hpp"

namespace borrowlab {

namespace fs = std::filesystem;

namespace {

struct Inputs {
  TrialDataset trial;
  ExternalPool pool;
  std::vector<std::size_t> outliers;
  bool real = false;
  std::optional<ScenarioConfig> scenario;
};

ScenarioConfig scenario_of(const RunConfig& cfg) {
  ScenarioParams p = ScenarioParams::defaults(parse_mechanism(cfg.scenario));
  if (cfg.mu2) p.mu2 = *cfg.mu2;
  return ScenarioConfig::build(p);
}

Inputs load_inputs(const RunConfig& cfg) {
  Inputs in;
  if (cfg.uses_files()) {
    if (cfg.external_path.empty()) {
      throw Error(ErrorCode::InvalidArgument, "--external is required with --rct", "cli");
    }
    const LoadedTrial trial = load_trial_csv(cfg.rct_path, cfg.outcome, cfg.treat);
    const LoadedPool pool = load_pool_csv(cfg.external_path, cfg.outcome, cfg.treat);
    check_schema(trial.covariates, pool.covariates);
    const Preprocessing prep = Preprocessing::fit(trial.data, !cfg.no_standardize, cfg.outcome_scale);
    in.trial = prep.apply(trial.data);
    in.pool = prep.apply(pool.data);
    in.real = true;
  } else {
    in.scenario = scenario_of(cfg);
    SimData data = generate(*in.scenario, cfg.seed);
    in.trial = std::move(data.trial);
    in.pool = std::move(data.pool);
    in.outliers = std::move(data.outliers);
  }
  if (cfg.control_n && cfg.command != Command::Benchmark) {
    in.trial = subsample_controls(in.trial, *cfg.control_n, cfg.seed);
  }
  const ValidationReport report = validate(in.trial, in.pool);
  if (!report.ok()) {
    std::string msg;
    for (const auto& v : report.violations) msg += (msg.empty() ? "" : "; ") + v;
    throw Error(ErrorCode::InvalidArgument, msg, "validate");
  }
  return in;
}

SelectionConfig selection_config(const RunConfig& cfg, std::size_t d) {
  SelectionConfig sel;
  int degree = cfg.degree;
  if (degree == 0) degree = (!cfg.uses_files() && cfg.scenario == "nonlinear") ? 2 : 1;
  sel.nuisance.fm = degree == 1 ? FeatureMap::linear(d) : FeatureMap::polynomial(d, degree);
  sel.dense = cfg.dense;
  sel.threads = cfg.threads;
  return sel;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot open for writing", path.string());
  f << std::setprecision(17);
  return f;
}

// Writes to --out when given, else to the command's stdout.
template <typename Fn>
void emit(const RunConfig& cfg, std::ostream& out, Fn&& write) {
  if (cfg.out.empty()) {
    write(out);
  } else {
    auto f = open_output(cfg.out);
    write(f);
  }
}

void write_estimate_csv(std::ostream& os, const EstimateReport& r) {
  os << std::setprecision(17) << "method,tau_hat,se_hat,n_used,k_borrowed\n"
     << to_string(r.method) << ',' << r.tau_hat << ',' << r.se_hat << ',' << r.n_used << ','
     << r.k_borrowed << '\n';
}

int do_simulate(const RunConfig& cfg, std::ostream& out) {
  if (cfg.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out DIR is required", "simulate");
  const ScenarioConfig scenario = scenario_of(cfg);
  const SimData data = generate(scenario, cfg.seed);
  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  write_trial_csv(dir / "rct.csv", data.trial);
  write_pool_csv(dir / "external.csv", data.pool);
  nlohmann::json meta = {{"scenario", scenario.digest()},
                         {"data_seed", cfg.seed},
                         {"tau_true", true_tau(scenario).value},
                         {"outliers", data.outliers}};
  open_output(dir / "scenario.json") << meta.dump(2) << '\n';
  out << meta.dump() << '\n';
  return 0;
}

int do_estimate(const RunConfig& cfg, std::ostream& out) {
  const Inputs in = load_inputs(cfg);
  const SelectionConfig sel = selection_config(cfg, in.trial.dim());
  const BaseFits base = fit_base(in.trial, in.pool, sel.nuisance);
  const Method method = parse_method(cfg.method);

  EstimateReport report;
  switch (method) {
    case Method::Aipw:
      report = tau_aipw(in.trial, fit_nuisances(in.trial, in.pool, {}, base, sel.nuisance));
      break;
    case Method::Fused:
    case Method::Full: {
      std::vector<std::size_t> all(in.pool.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      report = tau_full(in.trial, in.pool, fit_nuisances(in.trial, in.pool, all, base, sel.nuisance));
      break;
    }
    case Method::Lasso: {
      if (cfg.topk) {
        const NuisanceSet ns = fit_nuisances(in.trial, in.pool, {}, base, sel.nuisance);
        const auto order = lasso_rank(estimate_bias_vector(in.trial, in.pool, ns));
        report = estimate_at_k(in.trial, in.pool, order, *cfg.topk, base, sel.nuisance);
        report.k_borrowed = *cfg.topk;
      } else {
        report = select_lasso(in.trial, in.pool, base, sel).report;
      }
      report.method = Method::Lasso;
      break;
    }
    case Method::Influence: {
      if (cfg.topk) {
        const InfluenceRanking ranking = influence_ranking(in.trial, in.pool, base, sel);
        report = estimate_at_k(in.trial, in.pool, ranking.order, *cfg.topk, base, sel.nuisance);
        report.k_borrowed = *cfg.topk;
      } else {
        report = estimate_full_pipeline(in.trial, in.pool, base, sel).report;
      }
      report.method = Method::Influence;
      break;
    }
  }
  emit(cfg, out, [&](std::ostream& os) {
    if (cfg.format == "csv") {
      write_estimate_csv(os, report);
    } else {
      os << to_json(report).dump(2) << '\n';
    }
  });
  return 0;
}

int do_borrow(const RunConfig& cfg, std::ostream& out) {
  if (cfg.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out DIR is required", "borrow");
  const Inputs in = load_inputs(cfg);
  const SelectionConfig sel = selection_config(cfg, in.trial.dim());
  const PipelineResult result = estimate_full_pipeline(in.trial, in.pool, sel);

  const fs::path dir(cfg.out);
  fs::create_directories(dir);
  open_output(dir / "ranking.json") << to_json(result.ranking).dump(2) << '\n';
  {
    auto f = open_output(dir / "profile.csv");
    write_profile_csv(f, result.profile);
  }
  nlohmann::json selected = {{"k_star", result.profile.k_star},
                             {"selected", result.selected},
                             {"estimate", to_json(result.report)}};
  open_output(dir / "selected.json") << selected.dump(2) << '\n';
  out << selected["estimate"].dump() << '\n';
  return 0;
}

int do_benchmark(const RunConfig& cfg, std::ostream& out) {
  BenchConfig bench;
  bench.k_list = cfg.k_list;
  bench.reps = cfg.reps;
  bench.base_seed = cfg.seed;
  bench.bias_mode = parse_bias_mode(cfg.bias_mode);
  bench.threads = cfg.threads;
  if (!cfg.method.empty() && cfg.method != "all") bench.methods = {parse_method(cfg.method)};

  MetricsTable table;
  if (cfg.uses_files()) {
    const Inputs in = load_inputs(cfg);
    bench.selection = selection_config(cfg, in.trial.dim());
    table = run_real_data(in.trial, in.pool, cfg.control_n.value_or(80), bench);
  } else {
    const ScenarioConfig scenario = scenario_of(cfg);
    bench.selection = selection_config(cfg, scenario.params.d);
    bench.control_n = cfg.control_n;
    table = run_monte_carlo(scenario, bench);
  }
  emit(cfg, out, [&](std::ostream& os) {
    if (cfg.format == "csv") {
      write_metrics_csv(os, table);
    } else {
      os << to_json(table).dump(2) << '\n';
    }
  });
  if (cfg.plot_data) {
    const fs::path curves = cfg.out.empty() ? fs::path("curves.csv") : fs::path(cfg.out + ".curves.csv");
    auto f = open_output(curves);
    write_curve_csv(f, table);
  }
  return 0;
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "simulate") return Command::Simulate;
  if (name == "estimate") return Command::Estimate;
  if (name == "borrow") return Command::Borrow;
  if (name == "benchmark") return Command::Benchmark;
  throw Error(ErrorCode::InvalidArgument, "unknown command '" + name + "'", "command");
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    switch (cfg.command) {
      case Command::Simulate: return do_simulate(cfg, out);
      case Command::Estimate: return do_estimate(cfg, out);
      case Command::Borrow: return do_borrow(cfg, out);
      case Command::Benchmark: return do_benchmark(cfg, out);
    }
    return 1;
  } catch (const Error& e) {
    err << nlohmann::json{{"error", {{"code", to_string(e.code())}, {"message", e.what()}, {"locus", e.locus()}}}}.dump()
        << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << nlohmann::json{{"error", {{"code", "internal"}, {"message", e.what()}, {"locus", ""}}}}.dump()
        << '\n';
    return 1;
  }
}

}  // namespace borrowlab

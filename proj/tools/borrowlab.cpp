#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "borrowlab/cli.hpp"

int main(int argc, char** argv) {
  borrowlab::RunConfig cfg;
  CLI::App app{"borrowlab: influence-based borrowing of external controls"};
  app.set_config("--config", "", "flat key = value configuration file");
  app.require_subcommand(1);

  std::string topk = "auto";
  std::string scenario = cfg.scenario;
  double mu2 = 0.0;
  std::size_t control_n = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenario, "linear | nonlinear | oneD")->capture_default_str();
    sub->add_option("--rct", cfg.rct_path, "trial CSV");
    sub->add_option("--external", cfg.external_path, "external-control CSV");
    sub->add_option("--outcome", cfg.outcome, "outcome column")->capture_default_str();
    sub->add_option("--treat", cfg.treat, "treatment column")->capture_default_str();
    sub->add_option("--method", cfg.method, "aipw | full | lasso | if")->capture_default_str();
    sub->add_option("--topk", topk, "borrowed Top-K or 'auto'")->capture_default_str();
    sub->add_flag("--dense", cfg.dense, "evaluate every k");
    sub->add_option("--reps", cfg.reps, "Monte Carlo replications")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sub->add_option("--mu2", mu2, "external covariate mean");
    sub->add_option("--control-n", control_n, "subsample the trial control arm");
    sub->add_option("--k-list", cfg.k_list, "fixed Top-K values for benchmark")->delimiter(',');
    sub->add_option("--out", cfg.out, "output path");
    sub->add_option("--format", cfg.format, "csv | json")->capture_default_str();
    sub->add_option("--bias-mode", cfg.bias_mode, "abs-mean | mean-abs")->capture_default_str();
    sub->add_flag("--no-standardize", cfg.no_standardize, "keep raw covariates");
    sub->add_option("--outcome-scale", cfg.outcome_scale, "divide file outcomes by this")->capture_default_str();
    sub->add_option("--degree", cfg.degree, "polynomial degree (0 = default)");
    sub->add_flag("--plot-data", cfg.plot_data, "write per-k MSE curves");
    sub->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");
  };

  // Options live on the top-level app so a flat config file can set them;
  // subcommands fall through to them.
  add_common(&app);
  app.fallthrough();
  const char* names[] = {"simulate", "estimate", "borrow", "benchmark"};
  const char* help[] = {"generate a synthetic dataset", "estimate the treatment effect",
                        "rank and select external controls", "Monte Carlo benchmark"};
  for (int i = 0; i < 4; ++i) app.add_subcommand(names[i], help[i]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    cfg.command = borrowlab::parse_command(app.get_subcommands().front()->get_name());
    cfg.scenario = scenario;
    if (app.count("--mu2")) cfg.mu2 = mu2;
    if (app.count("--control-n")) cfg.control_n = control_n;
    if (topk != "auto") cfg.topk = std::stoul(topk);
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", {{"code", "invalid_argument"}, {"message", e.what()}, {"locus", "cli"}}}}.dump()
              << '\n';
    return 2;
  }
  return borrowlab::run(cfg, std::cout, std::cerr);
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace borrowlab {

enum class Command { Simulate, Estimate, Borrow, Benchmark };

struct RunConfig {
  Command command = Command::Estimate;
  std::string scenario = "linear";
  std::string rct_path;
  std::string external_path;
  std::string outcome = "y";
  std::string treat = "treat";
  std::string method = "if";
  /// nullopt selects k by estimated MSE.
  std::optional<std::size_t> topk;
  bool dense = false;
  std::size_t reps = 200;
  std::uint64_t seed = 7;
  std::optional<double> mu2;
  std::optional<std::size_t> control_n;
  std::vector<std::size_t> k_list{10, 50, 100, 150, 200, 250, 300};
  std::string out;
  std::string format = "json";
  std::string bias_mode = "abs-mean";
  bool no_standardize = false;
  double outcome_scale = 1e4;
  int degree = 0;  // 0: mechanism default
  bool plot_data = false;
  unsigned threads = 0;

  bool uses_files() const { return !rct_path.empty(); }
};

Command parse_command(const std::string& name);

/// Executes one command. Returns 0 on success; on failure writes a JSON error
/// record {"error": {code, message, locus}} to `err` and returns nonzero.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace borrowlab

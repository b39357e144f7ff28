#include "borrowlab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "borrowlab/error.hpp"

namespace borrowlab {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string locus(const std::string& source, std::size_t line, const std::string& column) {
  return source + ":" + std::to_string(line) + " column '" + column + "'";
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? "," : "") + names[i];
  return out;
}

struct Columns {
  std::size_t outcome;
  std::optional<std::size_t> treat;
  std::vector<std::size_t> covariates;
};

Columns pick_columns(const TabularFile& table, const std::string& path, const std::string& outcome_col,
                     const std::string& treat_col, bool treat_required) {
  Columns cols{};
  const auto y = table.column(outcome_col);
  if (!y) throw Error(ErrorCode::Parse, "missing outcome column '" + outcome_col + "'", path);
  cols.outcome = *y;
  cols.treat = table.column(treat_col);
  if (treat_required && !cols.treat) {
    throw Error(ErrorCode::Parse, "missing treatment column '" + treat_col + "'", path);
  }
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c != cols.outcome && (!cols.treat || c != *cols.treat)) cols.covariates.push_back(c);
  }
  return cols;
}

void write_row(std::ostream& out, int treat, const Eigen::Ref<const Eigen::RowVectorXd>& x, double y) {
  out << treat;
  for (Eigen::Index k = 0; k < x.size(); ++k) out << ',' << x[k];
  out << ',' << y << '\n';
}

void write_header(std::ostream& out, std::size_t d) {
  out << "treat";
  for (std::size_t k = 1; k <= d; ++k) out << ",x" << k;
  out << ",y\n";
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open for writing", path.string());
  out << std::setprecision(17);
  return out;
}

std::string k_label(const std::optional<std::size_t>& k) { return k ? std::to_string(*k) : "auto"; }

}  // namespace

std::optional<std::size_t> TabularFile::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return c;
  }
  return std::nullopt;
}

TabularFile parse_table(std::istream& in, const std::string& source) {
  TabularFile table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    table.header = split(line);
    break;
  }
  if (table.header.empty()) throw Error(ErrorCode::Parse, "no rows", source);

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != table.header.size()) {
      throw Error(ErrorCode::Parse,
                  "expected " + std::to_string(table.header.size()) + " cells, found " +
                      std::to_string(cells.size()),
                  source + ":" + std::to_string(line_no));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& cell = cells[c];
      if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") {
        throw Error(ErrorCode::Parse, "missing cell", locus(source, line_no, table.header[c]));
      }
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (*first == '+') ++first;
      const auto [ptr, ec] = std::from_chars(first, last, row[c]);
      if (ec != std::errc{} || ptr != last || !std::isfinite(row[c])) {
        throw Error(ErrorCode::Parse, "non-numeric cell '" + cell + "'",
                    locus(source, line_no, table.header[c]));
      }
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw Error(ErrorCode::Parse, "no rows", source);
  return table;
}

TabularFile read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open file", path.string());
  return parse_table(in, path.string());
}

LoadedTrial load_trial_csv(const std::filesystem::path& path, const std::string& outcome_col,
                           const std::string& treat_col) {
  const TabularFile table = read_table(path);
  const Columns cols = pick_columns(table, path.string(), outcome_col, treat_col, true);
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(cols.covariates.size()));
  Eigen::VectorXd y(n);
  std::vector<int> a(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const double t = row[*cols.treat];
    if (t != 0.0 && t != 1.0) {
      throw Error(ErrorCode::Parse, "treatment value must be 0 or 1",
                  locus(path.string(), i + 2, treat_col));
    }
    a[i] = static_cast<int>(t);
    y[static_cast<Eigen::Index>(i)] = row[cols.outcome];
    for (std::size_t k = 0; k < cols.covariates.size(); ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[cols.covariates[k]];
    }
  }
  LoadedTrial out{TrialDataset(std::move(x), std::move(a), std::move(y)), {}};
  for (const auto c : cols.covariates) out.covariates.push_back(table.header[c]);
  if (out.data.n_treated() == 0) throw Error(ErrorCode::Parse, "empty treated arm", path.string());
  if (out.data.n_control() == 0) throw Error(ErrorCode::Parse, "empty control arm", path.string());
  return out;
}

LoadedPool load_pool_csv(const std::filesystem::path& path, const std::string& outcome_col,
                         const std::string& treat_col) {
  const TabularFile table = read_table(path);
  const Columns cols = pick_columns(table, path.string(), outcome_col, treat_col, false);
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(cols.covariates.size()));
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (cols.treat && row[*cols.treat] != 0.0) {
      throw Error(ErrorCode::Parse, "external controls must be untreated",
                  locus(path.string(), i + 2, treat_col));
    }
    y[static_cast<Eigen::Index>(i)] = row[cols.outcome];
    for (std::size_t k = 0; k < cols.covariates.size(); ++k) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row[cols.covariates[k]];
    }
  }
  LoadedPool out{ExternalPool(std::move(x), std::move(y)), {}};
  for (const auto c : cols.covariates) out.covariates.push_back(table.header[c]);
  return out;
}

void check_schema(const std::vector<std::string>& trial_covariates,
                  const std::vector<std::string>& pool_covariates) {
  if (trial_covariates != pool_covariates) {
    throw Error(ErrorCode::Parse,
                "covariate columns differ: trial [" + join(trial_covariates) + "] vs external [" +
                    join(pool_covariates) + "]",
                "schema");
  }
}

Preprocessing Preprocessing::fit(const TrialDataset& trial, bool standardize, double outcome_scale) {
  Preprocessing p;
  const auto d = trial.x().cols();
  p.center = Eigen::VectorXd::Zero(d);
  p.scale = Eigen::VectorXd::Ones(d);
  p.outcome_scale = outcome_scale;
  if (standardize && trial.size() > 1) {
    p.center = trial.x().colwise().mean().transpose();
    for (Eigen::Index k = 0; k < d; ++k) {
      const double sd = std::sqrt((trial.x().col(k).array() - p.center[k]).square().sum() /
                                  static_cast<double>(trial.size() - 1));
      p.scale[k] = sd > 0.0 ? sd : 1.0;
    }
  }
  return p;
}

TrialDataset Preprocessing::apply(const TrialDataset& trial) const {
  Eigen::MatrixXd x = (trial.x().rowwise() - center.transpose()).array().rowwise() /
                      scale.transpose().array();
  return TrialDataset(std::move(x), trial.a(), trial.y() / outcome_scale);
}

ExternalPool Preprocessing::apply(const ExternalPool& pool) const {
  Eigen::MatrixXd x = (pool.x().rowwise() - center.transpose()).array().rowwise() /
                      scale.transpose().array();
  return ExternalPool(std::move(x), pool.y() / outcome_scale, pool.a());
}

void write_trial_csv(const std::filesystem::path& path, const TrialDataset& trial) {
  auto out = open_for_write(path);
  write_header(out, trial.dim());
  for (std::size_t i = 0; i < trial.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    write_row(out, trial.a()[i], trial.x().row(row), trial.y()[row]);
  }
}

void write_pool_csv(const std::filesystem::path& path, const ExternalPool& pool) {
  auto out = open_for_write(path);
  write_header(out, pool.dim());
  for (std::size_t j = 0; j < pool.size(); ++j) {
    const auto row = static_cast<Eigen::Index>(j);
    write_row(out, 0, pool.x().row(row), pool.y()[row]);
  }
}

nlohmann::json to_json(const EstimateReport& report, bool include_eif) {
  nlohmann::json j = {
      {"method", to_string(report.method)},
      {"tau_hat", report.tau_hat},
      {"se_hat", report.se_hat},
      {"n_used", report.n_used},
      {"k_borrowed", report.k_borrowed},
      {"diagnostics", {{"clipped_weights", report.diagnostics.clipped_weights}}},
  };
  if (include_eif) j["eif_values"] = report.eif_values;
  return j;
}

nlohmann::json to_json(const InfluenceRanking& ranking) {
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t pos = 0; pos < ranking.order.size(); ++pos) {
    const auto idx = ranking.order[pos];
    entries.push_back({{"rank", pos}, {"index", idx}, {"score", ranking.scores[idx]}});
  }
  return {{"ties_broken_by", ranking.ties_broken_by}, {"ranking", entries}};
}

nlohmann::json to_json(const MetricsTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"method", to_string(r.method)},
                    {"k", k_label(r.k)},
                    {"bias", r.mc_bias},
                    {"std", r.mc_std},
                    {"mse", r.mc_mse},
                    {"reps", r.n_reps},
                    {"failed", r.n_failed},
                    {"aborted", r.aborted},
                    {"mc_se_of_bias", r.mc_se_of_bias},
                    {"mean_se_hat", r.mean_se_hat},
                    {"mean_k", r.mean_k}});
  }
  return {{"scenario", table.scenario},
          {"tau_true", table.tau_true},
          {"bias_mode", to_string(table.bias_mode)},
          {"rows", rows}};
}

void write_profile_csv(std::ostream& out, const MseProfile& profile) {
  out << std::setprecision(17) << "k,tau,bias,var,mse,failed\n";
  for (const auto& row : profile.rows) {
    out << row.k << ',' << row.tau_hat << ',' << row.bias_hat << ',' << row.var_hat << ','
        << row.mse_hat << ',' << (row.failed ? 1 : 0) << '\n';
  }
}

void write_metrics_csv(std::ostream& out, const MetricsTable& table) {
  out << std::setprecision(17) << "method,k,bias,std,mse,reps,failed,mean_se_hat,mean_k\n";
  for (const auto& r : table.rows) {
    out << to_string(r.method) << ',' << k_label(r.k) << ',' << r.mc_bias << ',' << r.mc_std << ','
        << r.mc_mse << ',' << r.n_reps << ',' << r.n_failed << ',' << r.mean_se_hat << ','
        << r.mean_k << '\n';
  }
}

void write_curve_csv(std::ostream& out, const MetricsTable& table) {
  out << std::setprecision(17) << "method,k,mse\n";
  for (const auto& r : table.rows) {
    if (!r.k) continue;
    out << to_string(r.method) << ',' << *r.k << ',' << r.mc_mse << '\n';
  }
}

}  // namespace borrowlab

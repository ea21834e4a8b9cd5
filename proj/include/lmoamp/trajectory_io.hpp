#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmoamp/solvers.hpp"
#include "lmoamp/state_evolution.hpp"

namespace lmoamp {

using Json = nlohmann::ordered_json;

/// Frozen column orders.
inline const std::vector<std::string> kRunColumns = {
    "iteration", "v_suf_ba", "v_suf_ab", "v_post_a", "v_post_b", "xi_a",     "xi_b",
    "mse",       "se_pred",  "mse_stderr", "jitter_ba", "jitter_ab", "fallback_ba", "fallback_ab"};
inline const std::vector<std::string> kSEColumns = {
    "iteration", "v_suf_ba", "v_suf_ab", "v_post_a", "v_post_b", "xi_a", "xi_b",
    "v_ab",      "v_ba",     "offdiag_spread_a", "offdiag_spread_b"};
inline const std::vector<std::string> kAggregateColumns = {"iteration", "trials",   "mc_mean_mse",
                                                           "mc_stderr", "se_pred", "z"};

/// Shortest round-trip representation; empty string for an absent value.
std::string format_double(double x);
std::string format_optional(const std::optional<double>& x);

/// "# lmoamp <version>" and "# config: <compact json>" lines.
std::string header_block(const Json& config);

/// Minimal CSV table builder that keeps the header block and column order.
class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_row(std::vector<std::string> cells);
  std::string render(const Json& config) const;

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t rows() const { return rows_.size(); }

private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

/// Parsed CSV with comment lines stripped.
struct CsvData {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
};

CsvData parse_csv(const std::string& text);
CsvData read_csv(const std::filesystem::path& path);

/// se_pred may be shorter than the trajectory; missing entries stay empty.
CsvTable run_table(const RunTrajectory& traj, const std::vector<double>& se_pred);
Json run_json(const RunTrajectory& traj, const std::vector<double>& se_pred);

CsvTable se_table(const SETrajectory& se);
Json se_json(const SETrajectory& se);

Json equivalence_json(const EquivalenceReport& report);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);
/// Pretty JSON preceded by nothing; the config is embedded under "config".
void write_json(const std::filesystem::path& path, Json body, const Json& config);

}  // namespace lmoamp

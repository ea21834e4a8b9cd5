#include "lmoamp/trajectory_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lmoamp/errors.hpp"

namespace lmoamp {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string format_optional(const std::optional<double>& x) { return x ? format_double(*x) : std::string(); }

std::string header_block(const Json& config) {
  return std::string("# lmoamp ") + kVersion + "\n# config: " + config.dump() + "\n";
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) {
    throw DimensionError("CsvTable: row has " + std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(columns_.size()));
  }
  rows_.push_back(std::move(cells));
}

std::string CsvTable::render(const Json& config) const {
  std::string out = header_block(config);
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(columns_);
  for (const auto& r : rows_) line(r);
  return out;
}

std::size_t CsvData::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw DimensionError("CSV has no column '" + name + "'");
}

double CsvData::number(std::size_t row, const std::string& name) const {
  const std::string& cell = rows.at(row).at(column(name));
  if (cell.empty()) return std::nan("");
  return std::stod(cell);
}

CsvData parse_csv(const std::string& text) {
  CsvData data;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto pos = s.find(',', start);
      cells.push_back(s.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return cells;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      data.comments.push_back(line);
    } else if (data.columns.empty()) {
      data.columns = split(line);
    } else {
      data.rows.push_back(split(line));
    }
  }
  return data;
}

CsvData read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path)); }

CsvTable run_table(const RunTrajectory& traj, const std::vector<double>& se_pred) {
  CsvTable table(kRunColumns);
  const bool amp = traj.algorithm == Algorithm::Amp;
  for (const auto& r : traj.records) {
    const auto t = std::size_t(r.iteration);
    table.add_row({std::to_string(r.iteration), amp ? "" : format_double(r.v_suf_ba), format_double(r.v_suf_ab),
                   amp ? "" : format_double(r.v_post_a), format_double(r.v_post_b),
                   amp ? "" : format_double(r.xi_a), format_double(r.xi_b), format_double(r.mse),
                   t < se_pred.size() ? format_double(se_pred[t]) : "", format_double(r.mse_stderr),
                   format_double(r.jitter_ba), format_double(r.jitter_ab), r.fallback_ba ? "1" : "0",
                   r.fallback_ab ? "1" : "0"});
  }
  return table;
}

Json run_json(const RunTrajectory& traj, const std::vector<double>& se_pred) {
  Json j;
  j["algorithm"] = to_string(traj.algorithm);
  j["iterations"] = traj.records.size();
  j["diverged"] = traj.diverged;
  j["partial"] = traj.partial;
  if (!traj.error.empty()) {
    j["error"] = traj.error;
    j["error_iteration"] = traj.error_iteration;
  }
  j["warnings"] = traj.warnings;
  Json rows = Json::array();
  for (const auto& r : traj.records) {
    Json row;
    row["iteration"] = r.iteration;
    row["v_suf_ba"] = r.v_suf_ba;
    row["v_suf_ab"] = r.v_suf_ab;
    row["v_post_a"] = r.v_post_a;
    row["v_post_b"] = r.v_post_b;
    row["xi_a"] = r.xi_a;
    row["xi_b"] = r.xi_b;
    row["mse"] = r.mse;
    row["mse_stderr"] = r.mse_stderr;
    const auto t = std::size_t(r.iteration);
    row["se_pred"] = t < se_pred.size() ? Json(se_pred[t]) : Json(nullptr);
    row["jitter_ba"] = r.jitter_ba;
    row["jitter_ab"] = r.jitter_ab;
    row["fallback_ba"] = r.fallback_ba;
    row["fallback_ab"] = r.fallback_ab;
    rows.push_back(std::move(row));
  }
  j["records"] = std::move(rows);
  return j;
}

CsvTable se_table(const SETrajectory& se) {
  CsvTable table(kSEColumns);
  for (int t = 0; t < se.iterations(); ++t) {
    const auto i = std::size_t(t);
    table.add_row({std::to_string(t), format_double(se.v_suf_ba[i]), format_double(se.v_suf_ab[i]),
                   format_double(se.post_a[i]), format_double(se.post_b[i]), format_double(se.xi_a[i]),
                   format_double(se.xi_b[i]), format_double(se.v_ab[i]), format_double(se.v_ba[i]),
                   format_double(se.offdiag_spread_a[i]), format_double(se.offdiag_spread_b[i])});
  }
  return table;
}

namespace {

Json fixed_point_json(const std::optional<FixedPoint>& fp) {
  if (!fp) return nullptr;
  return Json{{"value", fp->value}, {"iteration", fp->iteration}};
}

}  // namespace

Json se_json(const SETrajectory& se) {
  Json j;
  j["kind"] = se.kind == SEKind::LongMemory ? "long_memory" : "conventional";
  j["iterations"] = se.iterations();
  j["sigma2"] = se.key.sigma2;
  j["delta"] = se.key.delta;
  j["prior"] = se.key.prior.describe();
  j["spectrum_digest"] = se.key.spectrum_digest;
  j["fixed_point"] = fixed_point_json(se.fixed_point);
  if (!se.fixed_point) j["note"] = "fixed point not reached within the iteration budget";
  j["v_suf_ba"] = se.v_suf_ba;
  j["v_suf_ab"] = se.v_suf_ab;
  j["v_post_a"] = se.post_a;
  j["v_post_b"] = se.post_b;
  j["xi_a"] = se.xi_a;
  j["xi_b"] = se.xi_b;
  j["v_ab"] = se.v_ab;
  j["v_ba"] = se.v_ba;
  j["offdiag_spread_a"] = se.offdiag_spread_a;
  j["offdiag_spread_b"] = se.offdiag_spread_b;
  return j;
}

Json equivalence_json(const EquivalenceReport& report) {
  Json j;
  j["result"] = report.pass ? "PASS" : "FAIL";
  j["tolerance"] = report.tolerance;
  j["config_mismatch"] = report.config_mismatch;
  j["max_gap"] = report.max_gap;
  j["max_offdiag_spread"] = report.max_offdiag_spread;
  j["lm_fixed_point"] = fixed_point_json(report.lm_fixed_point);
  j["oamp_fixed_point"] = fixed_point_json(report.oamp_fixed_point);
  j["fixed_point_gap"] = report.fixed_point_gap ? Json(*report.fixed_point_gap) : Json(nullptr);
  if (!report.lm_fixed_point || !report.oamp_fixed_point) {
    j["note"] = "fixed point absent: the recursion did not settle within the iteration budget";
  }
  j["gaps"] = report.gaps;
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::filesystem::path& path, Json body, const Json& config) {
  Json doc;
  doc["lmoamp_version"] = kVersion;
  doc["config"] = config;
  for (auto& [k, v] : body.items()) doc[k] = std::move(v);
  write_text(path, doc.dump(2) + "\n");
}

}  // namespace lmoamp

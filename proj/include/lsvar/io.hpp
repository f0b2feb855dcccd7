#pragma once

/// Data ingestion, preprocessing and serialization: CSV parsing, period
/// average detrending, JSON documents for models, fits and detection reports,
/// TSV objective curves and atomic file writes.

#include "lsvar/surrogate.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

namespace lsvar {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(cell.c_str(), &end);
  return end == cell.c_str() + cell.size() && errno != ERANGE && std::isfinite(out);
}

}  // namespace detail

/// Rows are time points and columns series. A first row with any
/// non-numeric cell is taken as a header. Blank lines are ignored.
inline TimeSeriesData parse_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0, width = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    std::vector<double> values(cells.size());
    std::size_t bad = cells.size();
    for (std::size_t c = 0; c < cells.size(); ++c)
      if (!detail::parse_number(cells[c], values[c])) {
        bad = c;
        break;
      }
    if (first) {
      first = false;
      width = cells.size();
      if (bad < cells.size()) continue;  // header
    }
    require(cells.size() == width, ErrorCode::parse_error,
            "row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) + " columns, expected " +
                std::to_string(width));
    if (bad < cells.size())
      throw Error(ErrorCode::parse_error, "row " + std::to_string(line_no) + ", column " + std::to_string(bad + 1) +
                                              ": '" + cells[bad] + "' is not a finite number");
    rows.push_back(std::move(values));
  }
  require(!rows.empty(), ErrorCode::parse_error, "CSV input has no data rows");
  require(rows.size() >= 2, ErrorCode::parse_error, "CSV input needs at least 2 data rows");
  Matrix X(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c) X(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  return TimeSeriesData(std::move(X));
}

inline TimeSeriesData ingest_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io_error, "cannot open '" + path.string() + "'");
  return parse_csv(in);
}

inline std::string to_csv(const TimeSeriesData& data) {
  std::ostringstream out;
  out.precision(17);
  for (Index t = 0; t < data.T(); ++t) {
    for (Index j = 0; j < data.p(); ++j) out << (j ? "," : "") << data.values()(t, j);
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Preprocessing

/// Y_l = X_l - (1/d) sum_{t=1..d} X_{l+t} for l = 0 .. T-d-1; rows without a
/// full forward window are dropped.
inline TimeSeriesData detrend_period_average(const TimeSeriesData& data, Index d) {
  Index T = data.T();
  require(d >= 1 && d < T, ErrorCode::invalid_argument,
          "detrending period " + std::to_string(d) + " must lie in [1, T)");
  require(T - d >= 2, ErrorCode::invalid_argument, "detrended series would have fewer than 2 rows");
  const auto& X = data.values();
  Matrix Y(T - d, data.p());
  Eigen::RowVectorXd window = X.middleRows(1, d).colwise().sum();
  for (Index l = 0; l < T - d; ++l) {
    if (l > 0) window += X.row(l + d) - X.row(l);
    Y.row(l) = X.row(l) - window / static_cast<double>(d);
  }
  return TimeSeriesData(std::move(Y));
}

/// Every k-th row starting with the first.
inline TimeSeriesData stride(const TimeSeriesData& data, Index k) {
  require(k >= 1, ErrorCode::invalid_argument, "stride must be positive");
  Index n = (data.T() + k - 1) / k;
  require(n >= 2, ErrorCode::invalid_argument, "strided series would have fewer than 2 rows");
  Matrix Y(n, data.p());
  for (Index i = 0; i < n; ++i) Y.row(i) = data.values().row(i * k);
  return TimeSeriesData(std::move(Y));
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json row_major(const Matrix& M) {
  Json a = Json::array();
  for (Index i = 0; i < M.rows(); ++i)
    for (Index j = 0; j < M.cols(); ++j) a.push_back(M(i, j));
  return a;
}

/// Accepts a flat row-major array of p*p numbers or an array of p rows.
inline Matrix matrix_from_json(const Json& j, Index p, const std::string& what) {
  require(j.is_array(), ErrorCode::parse_error, what + " must be an array");
  Matrix M(p, p);
  if (!j.empty() && j.front().is_array()) {
    require(static_cast<Index>(j.size()) == p, ErrorCode::parse_error, what + " must have p rows");
    for (Index i = 0; i < p; ++i) {
      const auto& row = j[static_cast<std::size_t>(i)];
      require(row.is_array() && static_cast<Index>(row.size()) == p, ErrorCode::parse_error,
              what + " row " + std::to_string(i) + " must have p entries");
      for (Index k = 0; k < p; ++k) M(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    return M;
  }
  require(static_cast<Index>(j.size()) == p * p, ErrorCode::parse_error,
          what + " must hold p*p = " + std::to_string(p * p) + " numbers");
  for (Index i = 0; i < p; ++i)
    for (Index k = 0; k < p; ++k) M(i, k) = j[static_cast<std::size_t>(i * p + k)].get<double>();
  return M;
}

}  // namespace detail

inline Json model_to_json(const PiecewiseVarModel& model) {
  double alpha = 0.0;
  for (const auto& s : model.segments) alpha = std::max(alpha, s.alpha_L);
  Json j;
  j["p"] = model.p();
  j["sigma"] = model.noise_std;
  j["change_points"] = model.change_points;
  Json segs = Json::array();
  for (const auto& s : model.segments) segs.push_back({{"L", detail::row_major(s.L)}, {"S", detail::row_major(s.S)}});
  j["segments"] = segs;
  j["alpha_L"] = detail::number(alpha);
  j["max_sparse_magnitude"] = detail::number(model.max_sparse_magnitude);
  return j;
}

inline PiecewiseVarModel model_from_json(const Json& j) {
  try {
    PiecewiseVarModel m;
    Index p = j.at("p").get<Index>();
    require(p >= 1, ErrorCode::parse_error, "model p must be positive");
    m.noise_std = j.at("sigma").get<double>();
    m.change_points = j.at("change_points").get<std::vector<Index>>();
    double alpha = j.contains("alpha_L") && !j["alpha_L"].is_null() ? j["alpha_L"].get<double>()
                                                                    : std::numeric_limits<double>::infinity();
    if (j.contains("max_sparse_magnitude") && !j["max_sparse_magnitude"].is_null())
      m.max_sparse_magnitude = j["max_sparse_magnitude"].get<double>();
    for (const auto& s : j.at("segments"))
      m.segments.push_back({detail::matrix_from_json(s.at("L"), p, "L"), detail::matrix_from_json(s.at("S"), p, "S"),
                            alpha});
    validate_model(m);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed model document: ") + e.what());
  }
}

inline Json fit_to_json(const FitResult& fit) {
  return {{"L", detail::row_major(fit.L_hat)},
          {"S", detail::row_major(fit.S_hat)},
          {"objective", detail::number(fit.objective)},
          {"iterations", fit.iterations},
          {"converged", fit.converged},
          {"rank_estimate", estimate_rank(fit.L_hat)},
          {"sparse_support_size", sparse_support_size(fit.S_hat)}};
}

inline Json curve_to_json(const std::vector<CurvePoint>& curve) {
  Json a = Json::array();
  for (const auto& c : curve) a.push_back({c.tau, detail::number(c.objective)});
  return a;
}

inline Json window_plan_to_json(const WindowPlan& plan) {
  Json windows = Json::array();
  for (const auto& w : plan.windows) windows.push_back({w.begin, w.end});
  return {{"h", plan.h}, {"l", plan.l}, {"windows", windows}};
}

inline Json segments_to_json(const std::vector<Interval>& segments, const std::vector<FitResult>& fits) {
  Json a = Json::array();
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& f = fits[i];
    a.push_back({{"interval", {segments[i].begin, segments[i].end}},
                 {"rank_estimate", estimate_rank(f.L_hat)},
                 {"sparse_support_size", sparse_support_size(f.S_hat)},
                 {"relative_objective", detail::number(f.rss / static_cast<double>(std::max<Index>(f.n, 1)))}});
  }
  return a;
}

inline Json trace_to_json(const ScreeningTrace& trace) {
  Json steps = Json::array();
  for (const auto& s : trace.steps)
    steps.push_back({{"retained", s.retained}, {"loss", detail::number(s.loss)}, {"ic", detail::number(s.ic)}});
  return steps;
}

inline Json detection_to_json(const MultiDetection& d) {
  Json j;
  j["method"] = d.method;
  j["change_points"] = d.change_points;
  j["m_hat"] = d.m_hat;
  j["omega_T"] = detail::number(d.trace.omega_T);
  j["per_segment"] = segments_to_json(d.segments, d.segment_fits);
  j["trace"] = trace_to_json(d.trace);
  return j;
}

inline Json single_detection_to_json(const SingleDetection& d, Index T) {
  Json skipped = Json::array();
  for (const auto& s : d.skipped) skipped.push_back({{"tau", s.tau}, {"reason", s.reason}});
  return {{"method", "single"},
          {"tau_hat", d.tau_hat},
          {"relative_location", static_cast<double>(d.tau_hat) / static_cast<double>(T)},
          {"objective", detail::number(d.objective)},
          {"curve_relative_range", curve_relative_range(d.objective_curve)},
          {"skipped", skipped},
          {"left_fit", fit_to_json(d.left_fit)},
          {"right_fit", fit_to_json(d.right_fit)}};
}

inline Json applicability_to_json(const SurrogateApplicability& a) {
  return {{"q", a.q},
          {"R_q", detail::number(a.R_q)},
          {"radius_lower_bound", detail::number(a.radius_lower_bound)},
          {"applicable", a.applicable}};
}

// ---------------------------------------------------------------------------
// Files

/// Writes `content` next to `path` and renames it into place.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), ErrorCode::io_error, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    require(static_cast<bool>(out), ErrorCode::io_error, "failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  require(!ec, ErrorCode::io_error, "cannot move '" + tmp.string() + "' into place: " + ec.message());
}

inline std::string curve_to_tsv(const std::vector<CurvePoint>& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "tau\tobjective\n";
  for (const auto& c : curve) out << c.tau << '\t' << c.objective << '\n';
  return out.str();
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace lsvar

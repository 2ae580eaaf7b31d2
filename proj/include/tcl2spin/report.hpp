#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcl2spin/divisibility.hpp"
#include "tcl2spin/errors.hpp"
#include "tcl2spin/evolution.hpp"
#include "tcl2spin/simulation.hpp"

namespace tcl2spin {

/// Named columns of doubles; the unit of CSV output.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct TrajectorySummary {
  std::size_t steps = 0;
  double t_max = 0.0;
  double max_trace_error = 0.0;
  double max_hermiticity_defect = 0.0;
  double min_eigenvalue = 0.0;
};

/// Everything a run reports besides its table.
struct ReportBundle {
  int schema_version = 1;
  std::string kind;
  nlohmann::json config;
  std::optional<TrajectorySummary> trajectory;
  std::optional<DivisibilityReport> divisibility;
  std::vector<std::string> warnings;
  std::optional<Table> table;
};

/// Locale-independent rendering with 17 significant digits.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  if (ec != std::errc{}) throw error("format_double: conversion failed");
  return std::string(buf, end);
}

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (i) out += ',';
    out += t.header[i];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    if (row.size() != t.header.size()) throw dimension_mismatch("to_csv: row width differs from header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

namespace detail {

// JSON has no NaN or infinity; they travel as null and come back as NaN.
inline nlohmann::json number_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); }
inline double number_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline nlohmann::json doubles_to_json(const std::vector<double>& v) {
  auto out = nlohmann::json::array();
  for (double x : v) out.push_back(number_or_null(x));
  return out;
}
inline std::vector<double> doubles_from(const nlohmann::json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(number_from(x));
  return v;
}

inline bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }
inline bool same(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same(a[i], b[i])) return false;
  return true;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error(path.string(), "cannot open for writing");
  out << text;
  out.close();
  if (!out) throw io_error(path.string(), "write failed");
}

}  // namespace detail

inline bool operator==(const Table& a, const Table& b) {
  if (a.header != b.header || a.rows.size() != b.rows.size()) return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i)
    if (!detail::same(a.rows[i], b.rows[i])) return false;
  return true;
}

inline bool operator==(const TrajectorySummary& a, const TrajectorySummary& b) {
  return a.steps == b.steps && detail::same(a.t_max, b.t_max) && detail::same(a.max_trace_error, b.max_trace_error) &&
         detail::same(a.max_hermiticity_defect, b.max_hermiticity_defect) &&
         detail::same(a.min_eigenvalue, b.min_eigenvalue);
}

inline bool same_report(const DivisibilityReport& a, const DivisibilityReport& b) {
  return detail::same(a.t_samples, b.t_samples) && detail::same(a.g_values, b.g_values) &&
         detail::same(a.integral_I, b.integral_I) && detail::same(a.n_rhp, b.n_rhp) &&
         detail::same(a.min_rate_seen, b.min_rate_seen) && a.truncation_flag == b.truncation_flag;
}

inline bool operator==(const ReportBundle& a, const ReportBundle& b) {
  if (a.divisibility.has_value() != b.divisibility.has_value()) return false;
  if (a.divisibility && !same_report(*a.divisibility, *b.divisibility)) return false;
  return a.schema_version == b.schema_version && a.kind == b.kind && a.config == b.config &&
         a.trajectory == b.trajectory && a.warnings == b.warnings && a.table == b.table;
}

inline nlohmann::json to_json(const ReportBundle& r) {
  using detail::number_or_null;
  nlohmann::json j;
  j["schema_version"] = r.schema_version;
  j["kind"] = r.kind;
  j["config"] = r.config;
  j["warnings"] = r.warnings;
  if (r.trajectory) {
    const auto& t = *r.trajectory;
    j["trajectory"] = {{"steps", t.steps},
                       {"t_max", number_or_null(t.t_max)},
                       {"max_trace_error", number_or_null(t.max_trace_error)},
                       {"max_hermiticity_defect", number_or_null(t.max_hermiticity_defect)},
                       {"min_eigenvalue", number_or_null(t.min_eigenvalue)}};
  }
  if (r.divisibility) {
    const auto& d = *r.divisibility;
    j["divisibility"] = {{"t", detail::doubles_to_json(d.t_samples)},
                         {"g", detail::doubles_to_json(d.g_values)},
                         {"integral_I", number_or_null(d.integral_I)},
                         {"n_rhp", number_or_null(d.n_rhp)},
                         {"min_rate_seen", number_or_null(d.min_rate_seen)},
                         {"truncation_flag", d.truncation_flag}};
  }
  if (r.table) {
    auto rows = nlohmann::json::array();
    for (const auto& row : r.table->rows) rows.push_back(detail::doubles_to_json(row));
    j["table"] = {{"columns", r.table->header}, {"rows", rows}};
  }
  return j;
}

inline ReportBundle bundle_from_json(const nlohmann::json& j) {
  try {
    ReportBundle r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != 1) throw error("unsupported schema_version " + std::to_string(r.schema_version));
    r.kind = j.at("kind").get<std::string>();
    r.config = j.at("config");
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("trajectory")) {
      const auto& t = j.at("trajectory");
      r.trajectory = TrajectorySummary{t.at("steps").get<std::size_t>(), detail::number_from(t.at("t_max")),
                                       detail::number_from(t.at("max_trace_error")),
                                       detail::number_from(t.at("max_hermiticity_defect")),
                                       detail::number_from(t.at("min_eigenvalue"))};
    }
    if (j.contains("divisibility")) {
      const auto& d = j.at("divisibility");
      DivisibilityReport rep;
      rep.t_samples = detail::doubles_from(d.at("t"));
      rep.g_values = detail::doubles_from(d.at("g"));
      rep.integral_I = detail::number_from(d.at("integral_I"));
      rep.n_rhp = detail::number_from(d.at("n_rhp"));
      rep.min_rate_seen = detail::number_from(d.at("min_rate_seen"));
      rep.truncation_flag = d.at("truncation_flag").get<bool>();
      r.divisibility = std::move(rep);
    }
    if (j.contains("table")) {
      Table t;
      t.header = j.at("table").at("columns").get<std::vector<std::string>>();
      for (const auto& row : j.at("table").at("rows")) t.rows.push_back(detail::doubles_from(row));
      r.table = std::move(t);
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw error(std::string("report JSON does not match schema 1: ") + e.what());
  }
}

inline std::string dump(const ReportBundle& r) { return to_json(r).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Tables

inline std::string q_suffix(int q) { return q < 0 ? "m" + std::to_string(-q) : std::to_string(q); }

/// t, then per q: re/im Lambda, re/im Lambda~, Gamma, Gamma~.
inline Table rates_table(const RateTable& rates) {
  Table t;
  t.header.push_back("t");
  const int qm = rates.q_max();
  for (int q = -qm; q <= qm; ++q) {
    const std::string s = "_q" + q_suffix(q);
    for (const char* name : {"re_lambda", "im_lambda", "re_lambda_tilde", "im_lambda_tilde", "gamma", "gamma_tilde"})
      t.header.push_back(name + s);
  }
  for (std::size_t i = 0; i < rates.size(); ++i) {
    std::vector<double> row{rates.times()[i]};
    for (int q = -qm; q <= qm; ++q) {
      const complex l = rates.lambda(q, i), lt = rates.lambda_tilde(q, i);
      row.insert(row.end(), {l.real(), l.imag(), lt.real(), lt.imag(), rates.gamma(q, i), rates.gamma_tilde(q, i)});
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// t, re_rho_i_j..., im_rho_i_j..., min_eig, trace_err (row-major i, j).
inline Table trajectory_table(const Trajectory& traj, std::size_t d) {
  Table t;
  t.header.push_back("t");
  for (const char* part : {"re", "im"})
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        t.header.push_back(std::string(part) + "_rho_" + std::to_string(i) + "_" + std::to_string(j));
  t.header.push_back("min_eig");
  t.header.push_back("trace_err");
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    std::vector<double> row{traj.times[k]};
    const auto& rho = traj.states[k];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) row.push_back(rho(i, j).real());
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) row.push_back(rho(i, j).imag());
    row.push_back(traj.min_eigenvalue[k]);
    row.push_back(traj.trace_error[k]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// t, g, gamma_q..., gamma_tilde_q..., min_rate on the output grid.
/// `g`, `min_rate` and the grid rows of `rates` (every `stride`-th) align.
inline Table measure_table(std::span<const double> times, std::span<const double> g, std::span<const double> min_rate,
                           const RateTable& rates, std::size_t stride) {
  if (g.size() != times.size() || min_rate.size() != times.size())
    throw dimension_mismatch("measure_table: columns differ in length");
  Table t;
  const int qm = rates.q_max();
  t.header = {"t", "g"};
  for (int q = -qm; q <= qm; ++q) t.header.push_back("gamma_q" + q_suffix(q));
  for (int q = -qm; q <= qm; ++q) t.header.push_back("gamma_tilde_q" + q_suffix(q));
  t.header.push_back("min_rate");
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> row{times[k], g[k]};
    for (int q = -qm; q <= qm; ++q) row.push_back(rates.gamma(q, stride * k));
    for (int q = -qm; q <= qm; ++q) row.push_back(rates.gamma_tilde(q, stride * k));
    row.push_back(min_rate[k]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline TrajectorySummary summarize(const Trajectory& traj, const TimeGrid& grid) {
  return TrajectorySummary{grid.steps, grid.t_max, traj.max_trace_error(), traj.max_hermiticity_defect(),
                           traj.lowest_eigenvalue()};
}

/// Writes `report` to `path`. CSV writes the table; a bundle that also carries
/// a divisibility report gets a `<path>.report.json` sidecar. JSON writes the
/// whole bundle.
inline void emit(const ReportBundle& report, const std::string& format, const std::filesystem::path& path) {
  if (format == "json") {
    detail::write_text(path, dump(report));
    return;
  }
  if (format != "csv") throw error("emit: unknown format '" + format + "'");
  if (!report.table) throw error("emit: report has no table to write as CSV");
  detail::write_text(path, to_csv(*report.table));
  if (report.divisibility) {
    ReportBundle side = report;
    side.table.reset();
    detail::write_text(path.string() + ".report.json", dump(side));
  }
}

}  // namespace tcl2spin

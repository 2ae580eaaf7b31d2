#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcl2spin/errors.hpp"
#include "tcl2spin/simulation.hpp"

namespace tcl2spin {

using json = nlohmann::json;

struct OutputSpec {
  std::string format = "csv";        // csv | json
  std::string path;                  // may be overridden on the command line
  std::string frame = "interaction";  // interaction | schrodinger (evolve only)
};

struct SweepSpec {
  std::string parameter;
  std::vector<double> values;
};

/// Parameters that a sweep may vary.
inline const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> names = {"alpha",      "phi",     "omega_s",    "eta",
                                                 "exponent_s", "omega_c", "temperature"};
  return names;
}

/// A parsed run configuration. Every key is documented in README.md.
struct RunConfig {
  std::string spin = "1";
  DriveParameters drive;
  std::string coupling = "sz";
  CouplingSpec coupling_spec;
  SpectralDensity bath_j;
  BathState bath;
  std::optional<double> t_max;         // default 20 / omega_s
  std::optional<std::size_t> steps;    // default: 2000, raised to satisfy the step limit
  double max_step_factor = 0.05;
  QuadratureOptions quadrature;
  double t1_rel = 1e-6;
  InitialState initial = InitialState::pure(0);
  OutputSpec output;
  std::optional<SweepSpec> sweep;
  unsigned threads = 1;
  json source;  // the document as read, echoed into reports

  TimeGrid grid() const {
    TimeGrid g;
    g.t_max = t_max ? *t_max : 20.0 / drive.omega_s;
    if (steps) {
      g.steps = *steps;
    } else {
      g.steps = 2000;
      if (max_step_factor > 0.0) {
        const double limit = max_step_factor / std::max(drive.omega_s, bath_j.omega_c);
        g.steps = std::max<std::size_t>(g.steps, static_cast<std::size_t>(std::ceil(g.t_max / limit - 1e-9)));
      }
    }
    return g;
  }

  ModelSpec model() const {
    ModelSpec m;
    m.spin = SpinQuantumNumber::parse(spin);
    m.drive = drive;
    m.coupling = coupling_spec;
    m.bath_j = bath_j;
    m.bath = bath;
    m.grid = grid();
    m.quadrature = quadrature;
    m.t1_rel = t1_rel;
    m.max_step_factor = max_step_factor;
    m.initial = initial;
    return m;
  }
};

namespace detail {

inline std::string join_key(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline void reject_unknown(const json& obj, const std::string& prefix, std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }))
      throw config_error(join_key(prefix, it.key()), "unknown key");
  }
}

inline const json& require_object(const json& obj, const std::string& key) {
  if (!obj.is_object()) throw config_error(key, "must be an object");
  return obj;
}

inline std::optional<double> number(const json& obj, const std::string& prefix, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if (!v.is_number()) throw config_error(join_key(prefix, key), "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw config_error(join_key(prefix, key), "must be finite");
  return x;
}

inline double required_number(const json& obj, const std::string& prefix, const char* key) {
  auto v = number(obj, prefix, key);
  if (!v) throw config_error(join_key(prefix, key), "is required");
  return *v;
}

inline std::optional<std::int64_t> integer(const json& obj, const std::string& prefix, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw config_error(join_key(prefix, key), "must be an integer");
  return v.get<std::int64_t>();
}

inline std::optional<std::string> string(const json& obj, const std::string& prefix, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  const json& v = obj.at(key);
  if (!v.is_string()) throw config_error(join_key(prefix, key), "must be a string");
  return v.get<std::string>();
}

inline ComplexMatrix read_matrix(const json& obj, const std::string& key) {
  require_object(obj, key);
  reject_unknown(obj, key, {"re", "im"});
  if (!obj.contains("re")) throw config_error(key + ".re", "is required");
  auto rows_of = [&](const char* part) -> std::vector<std::vector<double>> {
    const std::string k = key + "." + part;
    const json& m = obj.at(part);
    if (!m.is_array() || m.empty()) throw config_error(k, "must be a non-empty array of rows");
    std::vector<std::vector<double>> out;
    for (const auto& row : m) {
      if (!row.is_array() || row.size() != m.size()) throw config_error(k, "must be a square array of rows");
      std::vector<double> r;
      for (const auto& x : row) {
        if (!x.is_number()) throw config_error(k, "entries must be numbers");
        r.push_back(x.get<double>());
      }
      out.push_back(std::move(r));
    }
    return out;
  };
  const auto re = rows_of("re");
  std::vector<std::vector<double>> im;
  if (obj.contains("im")) {
    im = rows_of("im");
    if (im.size() != re.size()) throw config_error(key + ".im", "must match the size of re");
  }
  ComplexMatrix m(re.size(), re.size());
  for (std::size_t i = 0; i < re.size(); ++i)
    for (std::size_t j = 0; j < re.size(); ++j) m(i, j) = complex(re[i][j], im.empty() ? 0.0 : im[i][j]);
  return m;
}

inline json read_json_file(const std::filesystem::path& path, const std::string& key) {
  std::ifstream in(path);
  if (!in) throw config_error(key, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error(key, "'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

inline InitialState read_initial(const json& obj) {
  const std::string key = "initial_state";
  require_object(obj, key);
  const auto kind = string(obj, key, "kind");
  if (!kind) throw config_error(key + ".kind", "is required");
  if (*kind == "pure") {
    reject_unknown(obj, key, {"kind", "index"});
    const auto idx = integer(obj, key, "index").value_or(0);
    if (idx < 0) throw config_error(key + ".index", "must be non-negative");
    return InitialState::pure(static_cast<std::size_t>(idx));
  }
  if (*kind == "mixed") {
    reject_unknown(obj, key, {"kind"});
    return InitialState::mixed();
  }
  if (*kind == "superposition") {
    reject_unknown(obj, key, {"kind", "indices", "amplitudes"});
    if (!obj.contains("indices") || !obj.at("indices").is_array())
      throw config_error(key + ".indices", "must be an array of integers");
    if (!obj.contains("amplitudes") || !obj.at("amplitudes").is_array())
      throw config_error(key + ".amplitudes", "must be an array of [re, im] pairs");
    std::vector<std::size_t> idx;
    for (const auto& v : obj.at("indices")) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw config_error(key + ".indices", "entries must be non-negative integers");
      idx.push_back(v.get<std::size_t>());
    }
    std::vector<complex> amp;
    for (const auto& v : obj.at("amplitudes")) {
      if (v.is_number()) {
        amp.emplace_back(v.get<double>(), 0.0);
      } else if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        amp.emplace_back(v[0].get<double>(), v[1].get<double>());
      } else {
        throw config_error(key + ".amplitudes", "entries must be numbers or [re, im] pairs");
      }
    }
    if (idx.empty() || idx.size() != amp.size())
      throw config_error(key + ".amplitudes", "must be non-empty and match indices in length");
    return InitialState::superposition(std::move(idx), std::move(amp));
  }
  if (*kind == "custom") {
    reject_unknown(obj, key, {"kind", "re", "im"});
    json m = json::object();
    m["re"] = obj.value("re", json());
    if (obj.contains("im")) m["im"] = obj.at("im");
    return InitialState::custom(read_matrix(m, key));
  }
  throw config_error(key + ".kind", "must be one of pure, mixed, superposition, custom");
}

}  // namespace detail

/// Checks the physical and numerical ranges; the error names the offending key.
inline void validate(const RunConfig& c) {
  constexpr double pi = std::numbers::pi;
  try {
    SpinQuantumNumber::parse(c.spin);
  } catch (const error& e) {
    throw config_error("spin", e.what());
  }
  if (!(c.drive.omega_s > 0.0)) throw config_error("omega_s", "must be > 0");
  if (!(c.drive.alpha >= 0.0 && c.drive.alpha < pi)) throw config_error("alpha", "must lie in [0, pi)");
  if (!(c.drive.phi >= 0.0 && c.drive.phi < 2.0 * pi)) throw config_error("phi", "must lie in [0, 2 pi)");
  if (!(c.bath_j.eta >= 0.0)) throw config_error("bath.eta", "must be >= 0");
  if (!(c.bath_j.exponent_s > 0.0)) throw config_error("bath.exponent_s", "must be > 0");
  if (!(c.bath_j.omega_c > 0.0)) throw config_error("bath.omega_c", "must be > 0");
  if (!(c.bath.temperature >= 0.0)) throw config_error("bath.temperature", "must be >= 0");
  if (c.t_max && !(*c.t_max > 0.0)) throw config_error("grid.t_max", "must be > 0");
  if (c.steps && *c.steps == 0) throw config_error("grid.steps", "must be >= 1");
  if (!(c.max_step_factor >= 0.0)) throw config_error("grid.max_step_factor", "must be >= 0 (0 disables the limit)");
  if (c.quadrature.nodes_per_panel < 2 || c.quadrature.nodes_per_panel > 1024)
    throw config_error("quadrature.nodes_per_panel", "must lie in [2, 1024]");
  if (!(c.quadrature.panel_width_factor > 0.0)) throw config_error("quadrature.panel_width_factor", "must be > 0");
  if (!(c.quadrature.tail_cut > 0.0 && c.quadrature.tail_cut < 1.0))
    throw config_error("quadrature.tail_cut", "must lie in (0, 1)");
  if (!(c.t1_rel > 0.0 && c.t1_rel < 1.0)) throw config_error("g.t1_rel", "must lie in (0, 1)");
  if (c.output.format != "csv" && c.output.format != "json")
    throw config_error("output.format", "must be csv or json");
  if (c.output.frame != "interaction" && c.output.frame != "schrodinger")
    throw config_error("output.frame", "must be interaction or schrodinger");
  if (c.threads == 0) throw config_error("threads", "must be >= 1");
  if (c.coupling_spec.kind == CouplingKind::custom) {
    const auto d = SpinQuantumNumber::parse(c.spin).dim();
    if (!c.coupling_spec.custom_matrix || c.coupling_spec.custom_matrix->rows() != d)
      throw config_error("coupling", "custom matrix must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  if (c.initial.kind == InitialStateKind::eigenbasis_pure && c.initial.index >= SpinQuantumNumber::parse(c.spin).dim())
    throw config_error("initial_state.index", "exceeds the Hilbert space dimension");
  if (c.sweep) {
    const auto& names = sweepable_parameters();
    if (std::find(names.begin(), names.end(), c.sweep->parameter) == names.end())
      throw config_error("sweep.parameter", "cannot sweep '" + c.sweep->parameter + "'");
    if (c.sweep->values.empty()) throw config_error("sweep.values", "must be non-empty");
  }
}

/// Copy of `c` with one sweepable parameter replaced.
inline RunConfig with_parameter(RunConfig c, const std::string& name, double value) {
  if (name == "alpha") c.drive.alpha = value;
  else if (name == "phi") c.drive.phi = value;
  else if (name == "omega_s") c.drive.omega_s = value;
  else if (name == "eta") c.bath_j.eta = value;
  else if (name == "exponent_s") c.bath_j.exponent_s = value;
  else if (name == "omega_c") c.bath_j.omega_c = value;
  else if (name == "temperature") c.bath.temperature = value;
  else throw config_error("sweep.parameter", "cannot sweep '" + name + "'");
  return c;
}

/// Builds a RunConfig from a JSON document. Relative paths inside it
/// (custom couplings) resolve against `base_dir`.
inline RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir = {}) {
  using detail::number;
  using detail::required_number;
  if (!doc.is_object()) throw config_error("<root>", "configuration must be a JSON object");
  detail::reject_unknown(doc, "", {"spin", "omega_s", "alpha", "phi", "coupling", "bath", "grid", "quadrature", "g",
                                   "initial_state", "output", "sweep", "threads"});
  RunConfig c;
  c.source = doc;

  c.spin = detail::string(doc, "", "spin").value_or(c.spin);
  c.drive.omega_s = required_number(doc, "", "omega_s");
  c.drive.alpha = required_number(doc, "", "alpha");
  c.drive.phi = number(doc, "", "phi").value_or(0.0);

  c.coupling = detail::string(doc, "", "coupling").value_or("sz");
  if (c.coupling == "sz") {
    c.coupling_spec.kind = CouplingKind::sz;
  } else if (c.coupling == "sminus") {
    c.coupling_spec.kind = CouplingKind::sminus;
  } else if (c.coupling.starts_with("custom:")) {
    std::filesystem::path p = c.coupling.substr(7);
    if (p.empty()) throw config_error("coupling", "custom coupling needs a file path");
    if (p.is_relative()) p = base_dir / p;
    c.coupling_spec.kind = CouplingKind::custom;
    c.coupling_spec.custom_matrix = detail::read_matrix(detail::read_json_file(p, "coupling"), "coupling");
  } else {
    throw config_error("coupling", "must be sz, sminus or custom:<path>");
  }

  if (!doc.contains("bath")) throw config_error("bath", "is required");
  {
    const json& b = detail::require_object(doc.at("bath"), "bath");
    detail::reject_unknown(b, "bath", {"eta", "exponent_s", "omega_c", "temperature"});
    c.bath_j.eta = required_number(b, "bath", "eta");
    c.bath_j.exponent_s = number(b, "bath", "exponent_s").value_or(1.0);
    c.bath_j.omega_c = required_number(b, "bath", "omega_c");
    c.bath.temperature = required_number(b, "bath", "temperature");
  }

  if (doc.contains("grid")) {
    const json& g = detail::require_object(doc.at("grid"), "grid");
    detail::reject_unknown(g, "grid", {"t_max", "steps", "max_step_factor"});
    c.t_max = number(g, "grid", "t_max");
    if (auto s = detail::integer(g, "grid", "steps")) {
      if (*s < 1) throw config_error("grid.steps", "must be >= 1");
      c.steps = static_cast<std::size_t>(*s);
    }
    c.max_step_factor = number(g, "grid", "max_step_factor").value_or(c.max_step_factor);
  }

  if (doc.contains("quadrature")) {
    const json& q = detail::require_object(doc.at("quadrature"), "quadrature");
    detail::reject_unknown(q, "quadrature", {"nodes_per_panel", "panel_width_factor", "tail_cut"});
    if (auto n = detail::integer(q, "quadrature", "nodes_per_panel")) {
      if (*n < 2 || *n > 1024) throw config_error("quadrature.nodes_per_panel", "must lie in [2, 1024]");
      c.quadrature.nodes_per_panel = static_cast<int>(*n);
    }
    c.quadrature.panel_width_factor =
        number(q, "quadrature", "panel_width_factor").value_or(c.quadrature.panel_width_factor);
    c.quadrature.tail_cut = number(q, "quadrature", "tail_cut").value_or(c.quadrature.tail_cut);
  }

  if (doc.contains("g")) {
    const json& g = detail::require_object(doc.at("g"), "g");
    detail::reject_unknown(g, "g", {"t1_rel"});
    c.t1_rel = number(g, "g", "t1_rel").value_or(c.t1_rel);
  }

  if (doc.contains("initial_state")) c.initial = detail::read_initial(doc.at("initial_state"));

  if (doc.contains("output")) {
    const json& o = detail::require_object(doc.at("output"), "output");
    detail::reject_unknown(o, "output", {"format", "path", "frame"});
    c.output.format = detail::string(o, "output", "format").value_or(c.output.format);
    c.output.path = detail::string(o, "output", "path").value_or("");
    c.output.frame = detail::string(o, "output", "frame").value_or(c.output.frame);
  }

  if (doc.contains("sweep")) {
    const json& s = detail::require_object(doc.at("sweep"), "sweep");
    detail::reject_unknown(s, "sweep", {"parameter", "values"});
    SweepSpec sw;
    auto name = detail::string(s, "sweep", "parameter");
    if (!name) throw config_error("sweep.parameter", "is required");
    sw.parameter = *name;
    if (!s.contains("values") || !s.at("values").is_array()) throw config_error("sweep.values", "must be an array");
    for (const auto& v : s.at("values")) {
      if (!v.is_number() || !std::isfinite(v.get<double>()))
        throw config_error("sweep.values", "entries must be finite numbers");
      sw.values.push_back(v.get<double>());
    }
    c.sweep = std::move(sw);
  }

  if (auto t = detail::integer(doc, "", "threads")) {
    if (*t < 1) throw config_error("threads", "must be >= 1");
    c.threads = static_cast<unsigned>(*t);
  }

  validate(c);
  if (c.sweep)
    for (std::size_t k = 0; k < c.sweep->values.size(); ++k) {
      try {
        validate(with_parameter(c, c.sweep->parameter, c.sweep->values[k]));
      } catch (const config_error& e) {
        throw config_error("sweep.values[" + std::to_string(k) + "]", e.what());
      }
    }
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(detail::read_json_file(path, "--config"), path.parent_path());
}

}  // namespace tcl2spin

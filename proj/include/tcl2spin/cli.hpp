#pragma once

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tcl2spin/config.hpp"
#include "tcl2spin/report.hpp"
#include "tcl2spin/simulation.hpp"
#include "tcl2spin/validation.hpp"

namespace tcl2spin::cli {

enum exit_code : int { ok = 0, config_failure = 1, numeric_failure = 2, validation_failure = 3 };

namespace detail {

inline std::string output_path(const RunConfig& cfg, const std::string& override_path) {
  if (!override_path.empty()) return override_path;
  if (!cfg.output.path.empty()) return cfg.output.path;
  throw config_error("output.path", "is required (or pass --out)");
}

inline ReportBundle base_bundle(const std::string& kind, const RunConfig& cfg) {
  ReportBundle b;
  b.kind = kind;
  b.config = cfg.source;
  return b;
}

inline void run_rates(const RunConfig& cfg, const std::string& path) {
  const auto spec = cfg.model();
  const auto times = spec.grid.times();
  const auto rates = rate_table(spec.spin, spec.drive, spec.bath_j, spec.bath, times, spec.quadrature);
  auto bundle = base_bundle("rates", cfg);
  bundle.table = rates_table(rates);
  emit(bundle, cfg.output.format, path);
}

inline void run_evolve(const RunConfig& cfg, const std::string& path) {
  const auto spec = cfg.model();
  const auto model = prepare(spec);
  auto traj = evolve(spec.initial, model.c, stage_rates(spec), spec.grid, evolve_options(spec));
  if (cfg.output.frame == "schrodinger") traj = schrodinger_frame(traj, model.frame, spec.drive);
  auto bundle = base_bundle("evolve", cfg);
  bundle.trajectory = summarize(traj, spec.grid);
  bundle.warnings = traj.warnings;
  bundle.table = trajectory_table(traj, spec.spin.dim());
  emit(bundle, cfg.output.format, path);
}

inline void run_measure(const RunConfig& cfg, const std::string& path) {
  const auto spec = cfg.model();
  const auto res = measure(spec);
  auto bundle = base_bundle("measure", cfg);
  bundle.trajectory = summarize(res.trajectory, spec.grid);
  bundle.divisibility = res.report;
  bundle.warnings = res.trajectory.warnings;
  if (res.report.truncation_flag)
    bundle.warnings.push_back("truncation: g has not decayed over the last " +
                              std::to_string(default_convergence_window(spec.grid)) + " steps; extend grid.t_max");
  const auto times = spec.grid.times();
  bundle.table = measure_table(times, res.g, res.min_rate, res.rates, 2);
  emit(bundle, cfg.output.format, path);
}

inline void run_sweep(const RunConfig& cfg, const std::string& path, unsigned threads) {
  if (!cfg.sweep) throw config_error("sweep", "is required for the sweep subcommand");
  const auto& sw = *cfg.sweep;
  const std::size_t n = sw.values.size();
  std::vector<DivisibilityReport> reports(n);
  std::vector<std::exception_ptr> failures(n);
  auto work = [&](std::size_t k) {
    try {
      reports[k] = measure(with_parameter(cfg, sw.parameter, sw.values[k]).model()).report;
    } catch (...) {
      failures[k] = std::current_exception();
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    for (std::size_t k = 0; k < n; ++k) work(k);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < n; k += threads) work(k);
      });
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  auto bundle = base_bundle("sweep", cfg);
  Table t;
  t.header = {sw.parameter, "n_rhp", "integral_I", "min_rate", "truncated"};
  for (std::size_t k = 0; k < n; ++k) {
    const auto& r = reports[k];
    t.rows.push_back({sw.values[k], r.n_rhp, r.integral_I, r.min_rate_seen, r.truncation_flag ? 1.0 : 0.0});
    if (r.truncation_flag)
      bundle.warnings.push_back("truncation at " + sw.parameter + "=" + format_double(sw.values[k]));
  }
  bundle.table = std::move(t);
  emit(bundle, cfg.output.format, path);
}

inline int run_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  const auto results = run_validation();
  bool all = true;
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    if (!r.passed) err << "validation failed: " << r.name << '\n';
    all = all && r.passed;
    checks.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
  }
  if (!path.empty()) {
    nlohmann::json doc{{"schema_version", 1}, {"kind", "validate"}, {"checks", checks}};
    tcl2spin::detail::write_text(path, doc.dump(2) + "\n");
  }
  return all ? ok : validation_failure;
}

}  // namespace detail

/// Entry point of the command-line tool.
///   <binary> <subcommand> --config <path> [--out <path>] [--threads N]
/// Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure,
/// 3 validation failure.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"TCL2 secular master equation for a driven spin-S system and its RHP non-Markovianity"};
  app.require_subcommand(1);
  std::string config_path, out_path;
  std::optional<unsigned> threads;

  auto add = [&](const char* name, const char* help, bool needs_config) {
    auto* sub = app.add_subcommand(name, help);
    auto* opt = sub->add_option("--config", config_path, "JSON run configuration");
    if (needs_config) opt->required();
    sub->add_option("--out", out_path, "output file (overrides output.path)");
    sub->add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    return sub;
  };
  add("rates", "tabulate the decay rates on the time grid", true);
  add("evolve", "propagate the reduced density matrix", true);
  add("measure", "witness g(t) and the RHP measure", true);
  add("sweep", "RHP measure over one swept parameter", true);
  auto* validate_cmd = add("validate", "run the built-in cross-checks", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? ok : config_failure;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    if (app.got_subcommand(validate_cmd)) return detail::run_validate(out_path, out, err);
    const RunConfig cfg = load_config(config_path);
    const std::string path = detail::output_path(cfg, out_path);
    if (sub == "rates") detail::run_rates(cfg, path);
    else if (sub == "evolve") detail::run_evolve(cfg, path);
    else if (sub == "measure") detail::run_measure(cfg, path);
    else detail::run_sweep(cfg, path, threads.value_or(cfg.threads));
    return ok;
  } catch (const config_error& e) {
    err << "config error: " << e.what() << '\n';
    return config_failure;
  } catch (const io_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return config_failure;
  } catch (const std::exception& e) {
    err << "numeric failure in " << sub << ": " << e.what() << '\n';
    return numeric_failure;
  }
}

}  // namespace tcl2spin::cli

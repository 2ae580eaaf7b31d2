#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "tcl2spin/bath_rates.hpp"
#include "tcl2spin/divisibility.hpp"
#include "tcl2spin/evolution.hpp"
#include "tcl2spin/spin_model.hpp"

namespace tcl2spin {

/// Everything needed to run one trajectory and its divisibility analysis.
struct ModelSpec {
  SpinQuantumNumber spin{1};
  DriveParameters drive;
  CouplingSpec coupling;
  SpectralDensity bath_j;
  BathState bath;
  TimeGrid grid;
  QuadratureOptions quadrature;
  double t1_rel = 1e-6;
  double max_step_factor = 0.05;  // step limit is factor / max(omega_s, omega_c); <= 0 disables
  InitialState initial = InitialState::pure(0);
  unsigned threads = 1;
};

struct PreparedModel {
  EigenFrame frame;
  CouplingCoefficients c;
};

inline PreparedModel prepare(const ModelSpec& spec) {
  auto frame = eigenframe(spec.spin, spec.drive);
  auto c = coupling_coefficients(frame, spec.coupling);
  return PreparedModel{std::move(frame), std::move(c)};
}

/// Rates on the RK4 stage grid (2 * steps + 1 times).
inline RateTable stage_rates(const ModelSpec& spec) {
  const auto times = spec.grid.stage_times();
  return rate_table(spec.spin, spec.drive, spec.bath_j, spec.bath, times, spec.quadrature, spec.threads);
}

inline EvolveOptions evolve_options(const ModelSpec& spec) {
  EvolveOptions opt;
  if (spec.max_step_factor > 0.0)
    opt.max_step = spec.max_step_factor / std::max(spec.drive.omega_s, spec.bath_j.omega_c);
  return opt;
}

struct MeasureResult {
  PreparedModel model;
  RateTable rates;  // stage grid
  Trajectory trajectory;
  std::vector<double> g;         // one per grid point
  std::vector<double> min_rate;  // one per grid point
  DivisibilityReport report;
};

/// Witness samples g(t_k) and channel minima at every grid point of `rates`
/// (the stage table; grid point k is row 2k).
inline void witness_samples(const RateTable& rates, const CouplingCoefficients& c, const TimeGrid& grid,
                            double t1_rel, std::vector<double>& g, std::vector<double>& min_rate) {
  g.resize(grid.steps + 1);
  min_rate.resize(grid.steps + 1);
  for (std::size_t k = 0; k <= grid.steps; ++k) {
    const auto snap = with_superoperator(make_snapshot(rates, 2 * k, c));
    g[k] = g_numeric(snap, t1_rel);
    min_rate[k] = min_channel_rate(snap);
  }
}

inline std::size_t default_convergence_window(const TimeGrid& grid) {
  return std::max<std::size_t>(1, grid.steps / 10);
}

inline MeasureResult measure(const ModelSpec& spec) {
  MeasureResult out{prepare(spec), stage_rates(spec), {}, {}, {}, {}};
  out.trajectory = evolve(spec.initial, out.model.c, out.rates, spec.grid, evolve_options(spec));
  witness_samples(out.rates, out.model.c, spec.grid, spec.t1_rel, out.g, out.min_rate);
  const double lowest = out.min_rate.empty() ? 0.0 : *std::min_element(out.min_rate.begin(), out.min_rate.end());
  const auto times = spec.grid.times();
  out.report = n_rhp(out.g, times, default_convergence_window(spec.grid), lowest);
  return out;
}

}  // namespace tcl2spin

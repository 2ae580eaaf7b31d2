#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "tcl2spin/eigen.hpp"
#include "tcl2spin/generator.hpp"

namespace tcl2spin {

/// Uniform grid t_k = k * t_max / steps, k = 0..steps.
struct TimeGrid {
  double t_max = 20.0;
  std::size_t steps = 2000;

  double step() const { return t_max / static_cast<double>(steps); }
  double at(std::size_t k) const { return t_max * static_cast<double>(k) / static_cast<double>(steps); }

  std::vector<double> times() const {
    std::vector<double> t(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) t[k] = at(k);
    return t;
  }

  /// Grid points plus RK4 midpoints: 2 * steps + 1 times.
  std::vector<double> stage_times() const {
    std::vector<double> t(2 * steps + 1);
    for (std::size_t k = 0; k <= 2 * steps; ++k)
      t[k] = t_max * static_cast<double>(k) / static_cast<double>(2 * steps);
    return t;
  }
};

enum class InitialStateKind { eigenbasis_pure, maximally_mixed, coherent_superposition, custom };

struct InitialState {
  InitialStateKind kind = InitialStateKind::eigenbasis_pure;
  std::size_t index = 0;
  std::vector<std::size_t> indices;
  std::vector<complex> amplitudes;
  ComplexMatrix matrix;

  static InitialState pure(std::size_t index) { return {InitialStateKind::eigenbasis_pure, index, {}, {}, {}}; }
  static InitialState mixed() { return {InitialStateKind::maximally_mixed, 0, {}, {}, {}}; }
  static InitialState superposition(std::vector<std::size_t> idx, std::vector<complex> amp) {
    return {InitialStateKind::coherent_superposition, 0, std::move(idx), std::move(amp), {}};
  }
  static InitialState custom(ComplexMatrix m) { return {InitialStateKind::custom, 0, {}, {}, std::move(m)}; }

  /// Density matrix in the eigenbasis of H_S.
  ComplexMatrix resolve(std::size_t d) const {
    ComplexMatrix rho(d, d);
    switch (kind) {
      case InitialStateKind::eigenbasis_pure:
        if (index >= d) throw dimension_mismatch("initial state: eigenbasis index out of range");
        rho(index, index) = 1.0;
        break;
      case InitialStateKind::maximally_mixed:
        for (std::size_t k = 0; k < d; ++k) rho(k, k) = 1.0 / static_cast<double>(d);
        break;
      case InitialStateKind::coherent_superposition: {
        if (indices.empty() || indices.size() != amplitudes.size())
          throw error("initial state: indices and amplitudes must be non-empty and of equal length");
        std::vector<complex> psi(d);
        for (std::size_t k = 0; k < indices.size(); ++k) {
          if (indices[k] >= d) throw dimension_mismatch("initial state: superposition index out of range");
          psi[indices[k]] += amplitudes[k];
        }
        double norm = 0.0;
        for (const auto& a : psi) norm += std::norm(a);
        if (!(norm > 0.0)) throw error("initial state: superposition has zero norm");
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) rho(i, j) = psi[i] * std::conj(psi[j]) / norm;
        break;
      }
      case InitialStateKind::custom:
        if (matrix.rows() != d || matrix.cols() != d)
          throw dimension_mismatch("initial state: custom matrix has wrong size");
        rho = matrix;
        break;
    }
    if (rho.hermiticity_defect() > 1e-12) throw error("initial state: not Hermitian");
    if (std::abs(rho.trace() - 1.0) > 1e-12) throw error("initial state: trace differs from 1");
    if (hermitian_eigen(rho).eigenvalues.back() < -1e-12) throw error("initial state: not positive semidefinite");
    return rho;
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<ComplexMatrix> states;
  std::vector<double> min_eigenvalue;
  std::vector<double> trace_error;
  std::vector<double> hermiticity_defect;
  std::vector<std::string> warnings;

  double max_trace_error() const {
    return trace_error.empty() ? 0.0 : *std::max_element(trace_error.begin(), trace_error.end());
  }
  double max_hermiticity_defect() const {
    return hermiticity_defect.empty() ? 0.0 : *std::max_element(hermiticity_defect.begin(), hermiticity_defect.end());
  }
  double lowest_eigenvalue() const {
    return min_eigenvalue.empty() ? 0.0 : *std::min_element(min_eigenvalue.begin(), min_eigenvalue.end());
  }
};

struct EvolveOptions {
  double max_step = std::numeric_limits<double>::infinity();
  double trace_drift_limit = 1e-6;
  double positivity_warning = -1e-6;
};

namespace detail {

inline void record_diagnostics(Trajectory& traj, const ComplexMatrix& rho, double t, const EvolveOptions& opt) {
  const double lowest = hermitian_eigen(0.5 * (rho + rho.adjoint())).eigenvalues.back();
  traj.times.push_back(t);
  traj.states.push_back(rho);
  traj.min_eigenvalue.push_back(lowest);
  traj.trace_error.push_back(std::abs(rho.trace() - 1.0));
  traj.hermiticity_defect.push_back(rho.hermiticity_defect());
  if (lowest < opt.positivity_warning)
    traj.warnings.push_back("positivity breach at t=" + std::to_string(t) + ": min eigenvalue " +
                            std::to_string(lowest));
}

}  // namespace detail

/// Classic RK4 in the interaction picture. `rates` must be tabulated on
/// `grid.stage_times()` so every stage sees rates at its exact time.
inline Trajectory evolve(const InitialState& rho0, const CouplingCoefficients& c, const RateTable& rates,
                         const TimeGrid& grid, const EvolveOptions& opt = {}) {
  if (grid.steps == 0 || !(grid.t_max > 0.0)) throw error("evolve: grid needs positive t_max and steps");
  const double h = grid.step();
  if (h > opt.max_step)
    throw step_too_large("evolve: step " + std::to_string(h) + " exceeds limit " + std::to_string(opt.max_step));
  const auto stages = grid.stage_times();
  if (rates.size() != stages.size())
    throw dimension_mismatch("evolve: rate table must hold the 2*steps+1 stage times");
  for (std::size_t k = 0; k < stages.size(); ++k)
    if (std::abs(rates.times()[k] - stages[k]) > 1e-12 * std::max(1.0, grid.t_max))
      throw dimension_mismatch("evolve: rate table times do not match the stage grid");

  const std::size_t d = c.dim();
  ComplexMatrix rho = rho0.resolve(d);

  Trajectory traj;
  detail::record_diagnostics(traj, rho, 0.0, opt);

  GeneratorSnapshot next = make_snapshot(rates, 0, c);
  for (std::size_t n = 0; n < grid.steps; ++n) {
    const GeneratorSnapshot start = std::move(next);
    const GeneratorSnapshot mid = make_snapshot(rates, 2 * n + 1, c);
    next = make_snapshot(rates, 2 * n + 2, c);

    const ComplexMatrix k1 = apply_generator(rho, start);
    const ComplexMatrix k2 = apply_generator(rho + (0.5 * h) * k1, mid);
    const ComplexMatrix k3 = apply_generator(rho + (0.5 * h) * k2, mid);
    const ComplexMatrix k4 = apply_generator(rho + h * k3, next);
    rho.axpy(h / 6.0, k1);
    rho.axpy(h / 3.0, k2);
    rho.axpy(h / 3.0, k3);
    rho.axpy(h / 6.0, k4);

    detail::record_diagnostics(traj, rho, grid.at(n + 1), opt);
    if (traj.trace_error.back() > opt.trace_drift_limit)
      throw step_too_large("evolve: trace drift " + std::to_string(traj.trace_error.back()) + " at t=" +
                           std::to_string(grid.at(n + 1)) + "; halve the step");
  }
  return traj;
}

/// rho_S(t) = e^{-i H~ t} rho~(t) e^{i H~ t} with H~ = diag(omega_s m).
inline Trajectory schrodinger_frame(const Trajectory& traj, const EigenFrame& frame, const DriveParameters& drive) {
  Trajectory out = traj;
  const std::size_t d = frame.spin.dim();
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const double t = traj.times[k];
    ComplexMatrix& rho = out.states[k];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        rho(i, j) *= std::polar(1.0, -drive.omega_s * (frame.spin.m(i) - frame.spin.m(j)) * t);
  }
  return out;
}

}  // namespace tcl2spin

#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tcl2spin/bath_rates.hpp"
#include "tcl2spin/divisibility.hpp"
#include "tcl2spin/evolution.hpp"
#include "tcl2spin/generator.hpp"
#include "tcl2spin/simulation.hpp"
#include "tcl2spin/spin_model.hpp"

namespace tcl2spin {

struct ValidationResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::string describe(double worst, double tol) {
  std::ostringstream os;
  os.precision(3);
  os << "worst " << worst << " (tolerance " << tol << ")";
  return os.str();
}

inline DriveParameters random_drive(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(0.0, std::numbers::pi), p(0.0, 2.0 * std::numbers::pi), w(0.5, 2.0);
  const double omega_s = w(rng), alpha = a(rng), phi = p(rng);
  return DriveParameters{omega_s, alpha, phi};
}

inline ComplexMatrix random_density(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  ComplexMatrix a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) = complex(n(rng), n(rng));
  ComplexMatrix rho = a * a.adjoint();
  rho *= complex(1.0 / rho.trace().real());
  return rho;
}

inline GeneratorSnapshot random_snapshot(const CouplingCoefficients& c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GeneratorSnapshot s;
  s.c = c;
  s.q_max = static_cast<int>(c.dim()) - 1;
  s.lambda0 = complex(0.5 * u(rng), u(rng));
  s.lambda_tilde0 = complex(0.5 * u(rng), u(rng));
  for (int q = -s.q_max; q <= s.q_max; ++q) {
    s.gamma.push_back(q == 0 ? 2.0 * s.lambda0.real() : u(rng));
    s.gamma_tilde.push_back(q == 0 ? 2.0 * s.lambda_tilde0.real() : u(rng));
  }
  return s;
}

inline ValidationResult check_ladder() {
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int twice_s = 1; twice_s <= 6; ++twice_s) {
    const SpinQuantumNumber s(twice_s);
    for (int k = 0; k < 20; ++k) {
      const auto drive = random_drive(rng);
      const auto eig = hermitian_eigen(build_hs(s, drive));
      for (std::size_t i = 0; i < s.dim(); ++i)
        worst = std::max(worst, std::abs(eig.eigenvalues[i] - drive.omega_s * s.m(i)));
    }
  }
  return {"spectrum_ladder", worst <= 1e-10, describe(worst, 1e-10)};
}

inline ValidationResult check_coefficients() {
  std::mt19937_64 rng(12);
  double worst = 0.0;
  auto cmp = [&](complex c, double expected) { worst = std::max(worst, std::abs(std::abs(c) - expected)); };
  for (int k = 0; k < 50; ++k) {
    const auto drive = random_drive(rng);
    const double ca = std::cos(drive.alpha), sa = std::sin(drive.alpha);
    const double s2 = std::sin(0.5 * drive.alpha), c2 = std::cos(0.5 * drive.alpha);

    const auto half = eigenframe(SpinQuantumNumber(1), drive);
    const auto z = coupling_coefficients(half, {CouplingKind::sz, {}});
    cmp(z(0, 0), std::abs(ca) / 2);
    cmp(z(1, 1), std::abs(ca) / 2);
    cmp(z(0, 1), std::abs(sa) / 2);
    cmp(z(1, 0), std::abs(sa) / 2);
    const auto m = coupling_coefficients(half, {CouplingKind::sminus, {}});
    cmp(m(0, 0), std::abs(sa) / 2);
    cmp(m(1, 1), std::abs(sa) / 2);
    cmp(m(0, 1), s2 * s2);  // <+1/2| S_- |-1/2>
    cmp(m(1, 0), c2 * c2);

    const auto one = coupling_coefficients(eigenframe(SpinQuantumNumber(2), drive), {CouplingKind::sz, {}});
    cmp(one(0, 0), std::abs(ca));
    cmp(one(2, 2), std::abs(ca));
    cmp(one(1, 1), 0.0);
    cmp(one(0, 2), 0.0);
    cmp(one(2, 0), 0.0);
    for (std::size_t l : {0u, 2u}) {
      cmp(one(l, 1), std::numbers::sqrt2 / 2 * std::abs(sa));
      cmp(one(1, l), std::numbers::sqrt2 / 2 * std::abs(sa));
    }
  }
  return {"coupling_closed_forms", worst <= 1e-12, describe(worst, 1e-12)};
}

inline ValidationResult check_spin1_generator() {
  std::mt19937_64 rng(13);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto c = coupling_coefficients(eigenframe(SpinQuantumNumber(2), random_drive(rng)), {CouplingKind::sz, {}});
    const auto snap = random_snapshot(c, rng);
    const auto rho = random_density(3, rng);
    worst = std::max(worst, max_abs_diff(apply_generator(rho, snap), spin1_generator(rho, spin1_rates(snap))));
  }
  return {"spin1_generator_equivalence", worst <= 1e-12, describe(worst, 1e-12)};
}

inline ValidationResult check_choi_forms() {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> t1(1e-3, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto c = coupling_coefficients(eigenframe(SpinQuantumNumber(2), random_drive(rng)), {CouplingKind::sz, {}});
    const auto snap = with_superoperator(random_snapshot(c, rng));
    const double h = t1(rng);
    const auto general = epsilon_general(snap, h).epsilon;
    worst = std::max(worst, max_abs_diff(general, epsilon_spin1_closed_form(spin1_rates(snap), h).epsilon));
    worst = std::max(worst, max_abs_diff(general, epsilon_expanded(snap, h).epsilon));
  }
  for (int twice_s = 1; twice_s <= 4; ++twice_s)
    for (auto kind : {CouplingKind::sz, CouplingKind::sminus}) {
      const auto c = coupling_coefficients(eigenframe(SpinQuantumNumber(twice_s), random_drive(rng)), {kind, {}});
      const auto snap = with_superoperator(random_snapshot(c, rng));
      const double h = t1(rng);
      worst = std::max(worst, max_abs_diff(epsilon_general(snap, h).epsilon, epsilon_expanded(snap, h).epsilon));
    }
  return {"choi_matrix_forms", worst <= 1e-12, describe(worst, 1e-12)};
}

inline ValidationResult check_f_dim() {
  bool ok = f_dim(2) == 1 && f_dim(3) == 4 && f_dim(4) == 10;
  for (int d = 2; d <= 30; ++d) ok = ok && f_dim(d) == static_cast<std::int64_t>(d + 1) * d * (d - 1) / 6;
  for (int d = 2; d < 10; ++d)
    ok = ok && static_cast<double>(f_dim(d + 1)) / (d + 1) > static_cast<double>(f_dim(d)) / d;
  return {"dimension_factor", ok, ok ? "seeds, closed form and monotonicity hold" : "mismatch"};
}

// Pure dephasing (alpha = 0, Pi = S_z) with a negative dephasing weight.
inline ValidationResult check_degenerate_witness() {
  double worst = 0.0;
  for (int twice_s = 1; twice_s <= 4; ++twice_s) {
    const int d = twice_s + 1;
    const auto c =
        coupling_coefficients(eigenframe(SpinQuantumNumber(twice_s), DriveParameters{1.0, 0.0, 0.0}), {CouplingKind::sz, {}});
    GeneratorSnapshot s;
    s.c = c;
    s.q_max = twice_s;
    s.lambda0 = complex(-0.15, 0.2);
    s.lambda_tilde0 = complex(-0.05, -0.1);
    for (int q = -twice_s; q <= twice_s; ++q) {
      s.gamma.push_back(q == 0 ? -0.3 : 0.4);
      s.gamma_tilde.push_back(q == 0 ? -0.1 : 0.4);
    }
    const double expected = g_analytic_degenerate(d, 0.0, -0.3, -0.1);
    worst = std::max(worst, std::abs(g_numeric(s) - expected) / expected);
  }
  return {"degenerate_witness", worst <= 1e-4, describe(worst, 1e-4)};
}

// Half-line integral of J(w) r(w) (e^{iDt} - 1)/(iD) by the trapezoid rule in
// both w and the inner time variable, one Richardson step.
inline complex brute_force_lambda(int q, double t, const SpectralDensity& j, const BathState& bath, double omega_s,
                                  double omega_max, int n) {
  auto trapezoid = [&](int m) {
    const double hw = omega_max / m, ht = t / m;
    complex sum{};
    for (int a = 0; a <= m; ++a) {
      const double w = a * hw;
      const double f = w > 0.0 ? j(w) * thermal_occupation(w, bath) : j.eta * bath.temperature;
      if (f == 0.0) continue;
      complex inner{};
      for (int b = 0; b <= m; ++b) {
        const double tau = b * ht;
        inner += ((b == 0 || b == m) ? 0.5 : 1.0) * std::polar(1.0, (w - q * omega_s) * tau);
      }
      sum += ((a == 0 || a == m) ? 0.5 : 1.0) * f * inner * ht;
    }
    return sum * hw;
  };
  const complex coarse = trapezoid(n / 2), fine = trapezoid(n);
  return (4.0 * fine - coarse) / 3.0;
}

inline ValidationResult check_rate_quadrature() {
  const SpectralDensity j{0.05, 1.0, 10.0};
  const BathState bath{1.0};
  double worst = 0.0;
  for (auto [q, t] : {std::pair{1, 0.7}, std::pair{-1, 1.3}}) {
    const complex ref = brute_force_lambda(q, t, j, bath, 1.0, 30.0, 2000);
    const complex got = lambda_rate(q, t, j, bath, 1.0, RateWeight::r);
    worst = std::max(worst, std::abs(got - ref) / std::abs(ref));
  }
  return {"rate_quadrature", worst <= 1e-6, describe(worst, 1e-6)};
}

inline ValidationResult check_markov_limits() {
  const double omega_s = 1.0, omega_c = 10.0, eta = 0.05, temp = 1.0;
  const SpectralDensity j{eta, 1.0, omega_c};
  const BathState bath{temp};
  const double t = 200.0 / omega_c;
  const double up = 2.0 * lambda_rate(1, t, j, bath, omega_s, RateWeight::r_plus_one).real();
  const double up_ref = 2.0 * std::numbers::pi * j(omega_s) * (thermal_occupation(omega_s, bath) + 1.0);
  const double deph = 2.0 * lambda_rate(0, t, j, bath, omega_s, RateWeight::r).real();
  const double deph_ref = std::numbers::pi * eta * temp;  // half-line sinc integral
  const double off = std::abs(2.0 * lambda_rate(-1, 2000.0 / omega_c, j, bath, omega_s, RateWeight::r).real());
  const double off_vac = std::abs(2.0 * lambda_rate(-1, t, j, BathState{0.0}, omega_s, RateWeight::r_plus_one).real());
  const double e1 = std::abs(up / up_ref - 1.0), e2 = std::abs(deph / deph_ref - 1.0);
  const bool ok = e1 <= 0.01 && e2 <= 0.02 && off <= 1e-2 * eta * omega_s && off_vac <= 1e-2 * eta * omega_s;
  std::ostringstream os;
  os.precision(3);
  os << "emission " << e1 << ", dephasing " << e2 << ", off-resonant " << std::max(off, off_vac);
  return {"markov_limits", ok, os.str()};
}

// One spin-1 trajectory feeding the closed-form witness, the biconditional
// and the map-sanity checks.
inline std::vector<ValidationResult> check_trajectory() {
  ModelSpec spec;
  spec.spin = SpinQuantumNumber(2);
  spec.drive = DriveParameters{1.0, 1.0, 0.4};
  spec.bath_j = SpectralDensity{0.05, 3.0, 10.0};
  spec.bath = BathState{1.0};
  spec.grid = TimeGrid{5.0, 1000};
  spec.initial = InitialState::superposition({0, 1, 2}, {1.0, complex(0.0, 1.0), 0.5});
  const auto res = measure(spec);

  double worst_rel = 0.0, worst_excess = 0.0, peak = 0.0;
  bool witness = true;
  for (std::size_t k = 0; k <= spec.grid.steps; ++k) {
    const auto snap = make_snapshot(res.rates, 2 * k, res.model.c);
    const auto g = spin1_rates(snap);
    const double expected = g_analytic_spin1(g);
    const double diff = std::abs(res.g[k] - expected);
    peak = std::max(peak, res.g[k]);
    if (diff > 1e-9) worst_rel = std::max(worst_rel, diff / std::abs(expected));
    witness = witness && ((res.g[k] > 1e-9) == (g.min() < -1e-9));
    if (g.min() >= 0.0) worst_excess = std::max(worst_excess, res.g[k]);
  }
  const auto& traj = res.trajectory;
  const bool sane = traj.max_trace_error() <= 1e-8 && traj.max_hermiticity_defect() <= 1e-10 && worst_excess <= 1e-9;
  std::ostringstream os;
  os.precision(3);
  os << "trace drift " << traj.max_trace_error() << ", hermiticity " << traj.max_hermiticity_defect()
     << ", g with non-negative rates " << worst_excess;
  return {{"closed_form_witness", worst_rel <= 1e-5 && peak > 0.0,
           describe(worst_rel, 1e-5) + ", peak g " + std::to_string(peak)},
          {"witness_biconditional", witness, witness ? "holds at every grid point" : "violated"},
          {"map_sanity", sane, os.str()}};
}

}  // namespace detail

/// Runs every built-in cross-check; needs no input files.
inline std::vector<ValidationResult> run_validation() {
  std::vector<ValidationResult> out;
  for (auto check : {detail::check_ladder, detail::check_coefficients, detail::check_spin1_generator,
                     detail::check_choi_forms, detail::check_f_dim, detail::check_degenerate_witness,
                     detail::check_rate_quadrature, detail::check_markov_limits}) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({"(check raised)", false, e.what()});
    }
  }
  try {
    for (auto& r : detail::check_trajectory()) out.push_back(std::move(r));
  } catch (const std::exception& e) {
    out.push_back({"trajectory", false, e.what()});
  }
  return out;
}

}  // namespace tcl2spin

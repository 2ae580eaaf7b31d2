// Acceptance runner: `tcl2spin_acceptance [N]` checks criterion N (all when
// omitted), prints one line per criterion and exits non-zero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "tcl2spin/config.hpp"
#include "tcl2spin/simulation.hpp"
#include "test_support.hpp"

using namespace tcl2spin;
using namespace tcl2spin::testing;

namespace {

constexpr double pi = std::numbers::pi;

struct Verdict {
  bool passed = false;
  std::string detail;
};

struct Detail {
  std::ostringstream os;
  Detail() { os.precision(3); }
  template <class T>
  Detail& operator<<(const T& x) {
    os << x;
    return *this;
  }
  std::string str() const { return os.str(); }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double phi_neg(double x) { return x < 0.0 ? x : 0.0; }

std::mt19937_64& rng() {
  static std::mt19937_64 r(20240611);
  return r;
}

// Spin-1, Pi = S_z channel rates from the tabulated decay rates and the
// closed-form coefficients |c_{1,1}|^2 = cos^2 a, |c_{0,+-1}|^2 = sin^2 a / 2.
Spin1Rates channel_rates(const RateTable& rates, std::size_t row, double alpha) {
  const double c2 = std::cos(alpha) * std::cos(alpha), s2 = 0.5 * std::sin(alpha) * std::sin(alpha);
  return {c2 * (rates.gamma(0, row) + rates.gamma_tilde(0, row)),
          s2 * (rates.gamma(-1, row) + rates.gamma_tilde(1, row)),
          s2 * (rates.gamma(1, row) + rates.gamma_tilde(-1, row))};
}

ModelSpec spin1_spec(double exponent_s, double temperature, double t_max, std::size_t steps) {
  ModelSpec spec;
  spec.spin = SpinQuantumNumber(2);
  spec.drive = DriveParameters{1.0, 1.0, 0.4};
  spec.bath_j = SpectralDensity{0.05, exponent_s, 10.0};
  spec.bath = BathState{temperature};
  spec.grid = TimeGrid{t_max, steps};
  spec.initial = InitialState::superposition({0, 1, 2}, {1.0, complex(0.0, 1.0), 0.5});
  return spec;
}

// ---------------------------------------------------------------------------

Verdict spectrum_ladder() {
  const auto start = std::chrono::steady_clock::now();
  std::uniform_real_distribution<double> a(0.0, pi), p(0.0, 2.0 * pi), w(0.2, 5.0);
  double worst = 0.0, worst_build = 0.0;
  for (int twice_s = 1; twice_s <= 6; ++twice_s) {
    const SpinQuantumNumber s(twice_s);
    for (int k = 0; k < 100; ++k) {
      const DriveParameters drive{w(rng()), a(rng()), p(rng())};
      const auto hs = build_hs(s, drive);
      worst_build = std::max(worst_build, max_abs_diff(hs, from_eigen(independent_hs(twice_s, drive))));
      const auto eig = hermitian_eigen(hs);
      for (std::size_t i = 0; i < s.dim(); ++i) {
        const double m = 0.5 * twice_s - static_cast<double>(i);
        worst = std::max(worst, std::abs(eig.eigenvalues[i] - drive.omega_s * m) / drive.omega_s);
      }
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-10 && worst_build <= 1e-14 && elapsed < 1.0,
          (Detail() << "eigenvalue error " << worst << ", operator mismatch " << worst_build << ", " << elapsed << " s")
              .str()};
}

Verdict coefficient_closed_forms() {
  const auto start = std::chrono::steady_clock::now();
  std::uniform_real_distribution<double> a(0.0, pi), p(0.0, 2.0 * pi), w(0.2, 5.0);
  double sz_half = 0.0, sm_diag = 0.0, sm_off = 0.0, sz_one = 0.0;
  auto err = [](complex c, double expected) { return std::abs(std::abs(c) - expected); };
  for (int k = 0; k < 50; ++k) {
    const DriveParameters drive{w(rng()), a(rng()), p(rng())};
    const double ca = std::abs(std::cos(drive.alpha)), sa = std::abs(std::sin(drive.alpha));
    const double h2 = std::cos(0.5 * drive.alpha) * std::cos(0.5 * drive.alpha);
    const double l2 = std::sin(0.5 * drive.alpha) * std::sin(0.5 * drive.alpha);

    const auto half = eigenframe(SpinQuantumNumber(1), drive);
    const auto z = coupling_coefficients(half, {CouplingKind::sz, {}});
    for (auto [l, m, e] : {std::tuple{0, 0, ca / 2}, {1, 1, ca / 2}, {0, 1, sa / 2}, {1, 0, sa / 2}})
      sz_half = std::max(sz_half, err(z(l, m), e));

    // index 0 is m = +1/2: |c_{1/2,-1/2}| = cos^2(a/2), |c_{-1/2,1/2}| = sin^2(a/2)
    const auto s = coupling_coefficients(half, {CouplingKind::sminus, {}});
    sm_diag = std::max({sm_diag, err(s(0, 0), sa / 2), err(s(1, 1), sa / 2)});
    sm_off = std::max({sm_off, err(s(0, 1), h2), err(s(1, 0), l2)});

    // index 0, 1, 2 is m = 1, 0, -1
    const auto one = coupling_coefficients(eigenframe(SpinQuantumNumber(2), drive), {CouplingKind::sz, {}});
    const double r = std::numbers::sqrt2 / 2 * sa;
    for (auto [l, m, e] : {std::tuple{0, 0, ca}, {2, 2, ca}, {1, 1, 0.0}, {0, 2, 0.0}, {2, 0, 0.0}, {0, 1, r},
                           {1, 0, r}, {2, 1, r}, {1, 2, r}})
      sz_one = std::max(sz_one, err(one(l, m), e));
  }
  const double elapsed = seconds_since(start);
  const bool ok = std::max({sz_half, sm_diag, sm_off, sz_one}) <= 1e-12 && elapsed < 1.0;
  return {ok, (Detail() << "spin-1/2 Sz " << sz_half << ", spin-1/2 S- diagonal " << sm_diag
                        << ", spin-1/2 S- off-diagonal " << sm_off << ", spin-1 Sz " << sz_one << ", " << elapsed
                        << " s")
                  .str()};
}

Verdict generator_equivalence() {
  std::uniform_real_distribution<double> a(0.0, pi), p(0.0, 2.0 * pi), w(0.2, 5.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto c = coupling_coefficients(eigenframe(SpinQuantumNumber(2), DriveParameters{w(rng()), a(rng()), p(rng())}),
                                         {CouplingKind::sz, {}});
    const auto snap = random_snapshot(c, rng());
    const auto rho = random_density(3, rng());
    worst = std::max(worst, max_abs_diff(apply_generator(rho, snap), spin1_generator(rho, spin1_rates(snap))));
  }
  return {worst <= 1e-12, (Detail() << "worst elementwise difference " << worst << " over 50 states").str()};
}

// The 9x9 spin-1 probe written out entry by entry.
Eigen::MatrixXd spin1_probe(double g0, double gp, double gm, double t1) {
  const double y = g0 / 2 + gp / 2 + gm, v = gp / 2 + gm / 2 + 2 * g0, w = g0 / 2 + gm / 2 + gp;
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(9, 9);
  e(0, 0) = 1 - t1 * gm;
  e(0, 4) = e(4, 0) = 1 - t1 * y;
  e(0, 8) = e(8, 0) = 1 - t1 * v;
  e(1, 1) = e(5, 5) = t1 * gp;
  e(3, 3) = e(7, 7) = t1 * gm;
  e(4, 4) = 1 - t1 * (gp + gm);
  e(4, 8) = e(8, 4) = 1 - t1 * w;
  e(8, 8) = 1 - t1 * gp;
  return e / 3.0;
}

Verdict choi_closed_form() {
  std::uniform_real_distribution<double> a(0.0, pi), p(0.0, 2.0 * pi), t1(1e-4, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const auto c = coupling_coefficients(eigenframe(SpinQuantumNumber(2), DriveParameters{1.0, a(rng()), p(rng())}),
                                         {CouplingKind::sz, {}});
    const auto snap = with_superoperator(random_snapshot(c, rng()));
    const auto g = spin1_rates(snap);
    const double h = t1(rng());
    const auto expected = spin1_probe(g.gamma_0, g.gamma_plus, g.gamma_minus, h);
    worst = std::max(worst, (to_eigen(epsilon_general(snap, h).epsilon) - expected.cast<complex>()).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, (Detail() << "worst entry difference " << worst << " over 50 draws").str()};
}

Verdict spin1_witness() {
  const auto start = std::chrono::steady_clock::now();
  Detail d;
  bool ok = true;
  for (double temperature : {0.0, 1.0}) {
    const auto spec = spin1_spec(1.0, temperature, 20.0, 4000);
    const auto res = measure(spec);
    double worst = 0.0, peak = 0.0;
    std::size_t failures = 0;
    for (std::size_t k = 0; k <= spec.grid.steps; ++k) {
      const auto g = channel_rates(res.rates, 2 * k, spec.drive.alpha);
      const double expected = -(4.0 / 3.0) * (phi_neg(g.gamma_0) + phi_neg(g.gamma_plus) + phi_neg(g.gamma_minus));
      const double diff = std::abs(res.g[k] - expected);
      if (diff > std::max(1e-9, 1e-5 * std::abs(expected))) ++failures;
      if (diff > 1e-9) worst = std::max(worst, diff / std::abs(expected));
      peak = std::max(peak, expected);
    }
    ok = ok && failures == 0;
    d << "T=" << temperature << ": " << failures << " failures, worst relative " << worst << ", peak g " << peak
      << "; ";
  }
  const double elapsed = seconds_since(start);
  d << elapsed << " s";
  return {ok && elapsed < 30.0, d.str()};
}

// Same sign includes Gamma_0 = 0 (zero temperature, where only the vacuum
// part survives); both rates negative does not occur for this bath family.
Verdict degenerate_witness() {
  const double alpha = 0.01;
  Detail d;
  bool ok = true;
  for (int dim : {2, 3, 4}) {
    std::size_t negative = 0, positive = 0, mixed = 0, failures = 0;
    double worst = 0.0;
    for (double temperature : {0.0, 1.0}) {
      ModelSpec spec;
      spec.spin = SpinQuantumNumber(dim - 1);
      spec.drive = DriveParameters{1.0, alpha, 0.0};
      spec.bath_j = SpectralDensity{0.05, 3.0, 10.0};
      spec.bath = BathState{temperature};
      spec.grid = TimeGrid{20.0, 4000};
      const auto model = prepare(spec);
      const auto rates = stage_rates(spec);
      const double f = (dim + 1.0) * dim * (dim - 1.0) / 6.0;
      const double ca2 = std::cos(alpha) * std::cos(alpha);
      for (std::size_t k = 1; k <= spec.grid.steps; ++k) {
        const double g0 = rates.gamma(0, 2 * k), gt0 = rates.gamma_tilde(0, 2 * k);
        if (g0 * gt0 < 0.0) {
          ++mixed;
          continue;
        }
        const double expected = -(f / dim) * ca2 * (phi_neg(g0) + phi_neg(gt0));
        const double got = g_numeric(make_snapshot(rates, 2 * k, model.c), spec.t1_rel);
        const double scale = (f / dim) * std::abs(g0 + gt0);
        const double err = std::abs(got - expected);
        (expected > 0.0 ? negative : positive) += 1;
        if (err > 0.05 * (expected > 0.0 ? expected : scale)) ++failures;
        if (scale > 0.0) worst = std::max(worst, err / (expected > 0.0 ? expected : scale));
      }
    }
    ok = ok && failures == 0 && negative > 0;
    d << "d=" << dim << ": " << negative << " negative, " << positive << " non-negative, " << mixed
      << " mixed-sign points skipped, " << failures << " failures, worst relative " << worst << "; ";
  }
  return {ok, d.str()};
}

Verdict dimension_factor() {
  bool ok = f_dim(2) == 1 && f_dim(3) == 4 && f_dim(4) == 10;
  for (int d = 2; d <= 30; ++d) ok = ok && f_dim(d) == static_cast<std::int64_t>(d + 1) * d * (d - 1) / 6;
  for (int d = 2; d < 10; ++d) ok = ok && static_cast<double>(f_dim(d + 1)) / (d + 1) > static_cast<double>(f_dim(d)) / d;
  return {ok, ok ? "seeds exact, recurrence equals closed form for d <= 30, f(d)/d increasing for d = 2..10"
                 : "mismatch"};
}

// Double integral int_0^wmax dw J r int_0^t dtau e^{i (w - q ws) tau} by the
// trapezoid rule in both variables, n and n/2 points, one Richardson step.
complex brute_force_lambda(int q, double t, const SpectralDensity& j, double temperature, double omega_max, int n) {
  auto trapezoid = [&](int m) {
    const double hw = omega_max / m, ht = t / m;
    complex sum{};
    for (int a = 0; a <= m; ++a) {
      const double w = a * hw;
      const double f = w > 0.0 ? j(w) / std::expm1(w / temperature) : j.eta * temperature;  // s = 1 limit at w = 0
      complex inner{};
      const double delta = w - q;
      for (int b = 0; b <= m; ++b) {
        const double c = (b == 0 || b == m) ? 0.5 : 1.0;
        inner += c * complex(std::cos(delta * b * ht), std::sin(delta * b * ht));
      }
      sum += ((a == 0 || a == m) ? 0.5 : 1.0) * f * inner;
    }
    return sum * hw * ht;
  };
  return (4.0 * trapezoid(n) - trapezoid(n / 2)) / 3.0;
}

Verdict rate_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const SpectralDensity j{0.05, 1.0, 10.0};
  double worst = 0.0;
  int count = 0;
  for (int q : {-2, -1, 0, 1, 2})
    for (double t : {0.6, 2.5}) {
      const complex ref = brute_force_lambda(q, t, j, 1.0, 30.0, 4000);
      const complex got = lambda_rate(q, t, j, BathState{1.0}, 1.0, RateWeight::r);
      worst = std::max(worst, std::abs(got - ref) / std::abs(ref));
      ++count;
    }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-6 && elapsed < 60.0,
          (Detail() << "worst relative difference " << worst << " over " << count << " points, " << elapsed << " s")
              .str()};
}

Verdict markov_limits() {
  const double eta = 0.05, omega_c = 10.0, omega_s = 1.0, temperature = 1.0;
  const SpectralDensity j{eta, 1.0, omega_c};
  const BathState bath{temperature};
  const double t = 200.0 / omega_c;
  const double emission = 2.0 * lambda_rate(1, t, j, bath, omega_s, RateWeight::r_plus_one).real();
  const double emission_ref = 2.0 * pi * j(omega_s) * (1.0 / std::expm1(omega_s / temperature) + 1.0);
  const double e1 = std::abs(emission / emission_ref - 1.0);
  const double dephasing = 2.0 * lambda_rate(0, t, j, bath, omega_s, RateWeight::r).real();
  const double e2 = std::abs(dephasing / (2.0 * pi * eta * temperature) - 1.0);
  double off = 0.0;
  for (int q : {-1, -2}) {
    off = std::max(off, std::abs(2.0 * lambda_rate(q, 2000.0 / omega_c, j, bath, omega_s, RateWeight::r).real()));
    off = std::max(off, std::abs(2.0 * lambda_rate(q, t, j, BathState{0.0}, omega_s, RateWeight::r_plus_one).real()));
  }
  const bool ok = e1 <= 0.01 && e2 <= 0.02 && off <= 1e-2 * eta * omega_s;
  return {ok, (Detail() << "emission relative error " << e1 << ", dephasing relative error " << e2
                        << " (Gamma_0/(2 pi eta T) = " << dephasing / (2.0 * pi * eta * temperature)
                        << "), off-resonant |Gamma_q| " << off)
                  .str()};
}

// Trajectories used by the map-sanity criterion.
std::vector<ModelSpec> acceptance_trajectories() {
  std::vector<ModelSpec> out;
  for (double temperature : {0.0, 1.0}) out.push_back(spin1_spec(1.0, temperature, 20.0, 4000));
  for (double s : {0.5, 1.0, 3.0})
    for (double temperature : {0.0, 1.0}) out.push_back(spin1_spec(s, temperature, 10.0, 2000));
  return out;
}

Verdict map_sanity() {
  double trace = 0.0, herm = 0.0, eps_trace = 0.0, g_excess = 0.0, lowest = 0.0;
  std::size_t nonneg_points = 0;
  for (const auto& spec : acceptance_trajectories()) {
    const auto res = measure(spec);
    trace = std::max(trace, res.trajectory.max_trace_error());
    herm = std::max(herm, res.trajectory.max_hermiticity_defect());
    for (std::size_t k = 0; k <= spec.grid.steps; ++k) {
      const auto snap = with_superoperator(make_snapshot(res.rates, 2 * k, res.model.c));
      const double scale = snap.superop->max_abs();
      const double t1 = scale > 0.0 ? spec.t1_rel / scale : spec.t1_rel;
      const auto eps = epsilon_general(snap, t1).epsilon;
      eps_trace = std::max(eps_trace, std::abs(eps.trace() - 1.0));
      if (min_channel_rate(snap) >= 0.0 && spin1_rates(snap).min() >= 0.0) {
        ++nonneg_points;
        g_excess = std::max(g_excess, res.g[k]);
        lowest = std::min(lowest, hermitian_eigen(eps).eigenvalues.back());
      }
    }
  }
  const bool ok = trace <= 1e-8 && herm <= 1e-10 && eps_trace <= 1e-10 && g_excess <= 1e-9 && lowest >= -1e-12;
  return {ok, (Detail() << "trace drift " << trace << ", hermiticity " << herm << ", |tr eps - 1| " << eps_trace
                        << ", over " << nonneg_points << " non-negative-rate points: max g " << g_excess
                        << ", min eig(eps) " << lowest)
                  .str()};
}

Verdict witness_biconditional() {
  Detail d;
  bool ok = true;
  std::size_t indivisible = 0, total = 0;
  for (double s : {0.5, 1.0, 3.0})
    for (double temperature : {0.0, 1.0}) {
      const auto spec = spin1_spec(s, temperature, 10.0, 2000);
      const auto res = measure(spec);
      std::size_t violations = 0;
      for (std::size_t k = 0; k <= spec.grid.steps; ++k) {
        const auto g = channel_rates(res.rates, 2 * k, spec.drive.alpha);
        const bool negative = g.min() < -1e-9, positive = res.g[k] > 1e-9;
        if (negative != positive) ++violations;
        indivisible += positive;
        ++total;
      }
      ok = ok && violations == 0;
      if (violations) d << "violations at s=" << s << ", T=" << temperature << ": " << violations << "; ";
    }
  d << indivisible << " of " << total << " points indivisible";
  return {ok, d.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism() {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / ("tcl2spin_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const json doc = json::parse(R"({
    "spin": "1", "omega_s": 1.0, "alpha": 1.0, "phi": 0.4, "coupling": "sz",
    "bath": {"eta": 0.05, "exponent_s": 3.0, "omega_c": 10.0, "temperature": 1.0},
    "grid": {"t_max": 5.0, "steps": 1000},
    "initial_state": {"kind": "pure", "index": 0}
  })");
  std::ofstream(dir / "measure.json") << doc.dump(2);
  bool ok = true;
  Detail d;
  for (const std::string format : {"csv", "json"}) {
    auto cfg = doc;
    cfg["output"] = {{"format", format}};
    std::ofstream(dir / ("measure_" + format + ".json")) << cfg.dump(2);
    std::vector<fs::path> outs;
    for (int run = 0; run < 2; ++run) {
      const auto out = dir / ("run" + std::to_string(run) + "." + format);
      const std::string cmd = std::string("\"") + TCL2SPIN_CLI + "\" measure --config \"" +
                              (dir / ("measure_" + format + ".json")).string() + "\" --out \"" + out.string() + "\"";
      if (std::system(cmd.c_str()) != 0) {
        ok = false;
        d << format << " run " << run << " failed; ";
      }
      outs.push_back(out);
    }
    const bool same = fs::exists(outs[0]) && slurp(outs[0]) == slurp(outs[1]);
    bool sidecar = true;
    if (format == "csv")
      sidecar = fs::exists(outs[0].string() + ".report.json") &&
                slurp(outs[0].string() + ".report.json") == slurp(outs[1].string() + ".report.json");
    ok = ok && same && sidecar;
    d << format << (same && sidecar ? " identical" : " differs") << " (" << slurp(outs[0]).size() << " bytes); ";
  }
  fs::remove_all(dir);
  return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Verdict (*)()> criteria{spectrum_ladder,       coefficient_closed_forms, generator_equivalence,
                                            choi_closed_form,      spin1_witness,            degenerate_witness,
                                            dimension_factor,      rate_oracle,              markov_limits,
                                            map_sanity,            witness_biconditional,    determinism};
  std::size_t first = 1, last = criteria.size();
  if (argc > 1) {
    const long n = std::strtol(argv[1], nullptr, 10);
    if (n < 1 || n > static_cast<long>(criteria.size())) {
      std::cerr << "usage: " << argv[0] << " [1-" << criteria.size() << "]\n";
      return 2;
    }
    first = last = static_cast<std::size_t>(n);
  }
  bool all = true;
  for (std::size_t n = first; n <= last; ++n) {
    Verdict v;
    try {
      v = criteria[n - 1]();
    } catch (const std::exception& e) {
      v = {false, std::string("raised: ") + e.what()};
    }
    std::cout << "criterion " << n << ": " << (v.passed ? "PASS" : "FAIL") << " " << v.detail << std::endl;
    all = all && v.passed;
  }
  return all ? 0 : 1;
}

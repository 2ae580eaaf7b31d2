#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "tcl2spin/eigen.hpp"
#include "tcl2spin/generator.hpp"

namespace tcl2spin {

/// x for x < 0, otherwise 0.
inline double negative_part(double x) { return x < 0.0 ? x : 0.0; }

/// P_d^+ = (1/d) sum_{j,n} |j><n| (x) |j><n|
inline ComplexMatrix max_entangled(std::size_t d) {
  if (d < 2) throw error("max_entangled: dimension must be at least 2");
  ComplexMatrix p(d * d, d * d);
  const double w = 1.0 / static_cast<double>(d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t n = 0; n < d; ++n) p(j * d + j, n * d + n) = w;
  return p;
}

/// [(1 + t1 L_t) (x) 1] P_d^+ together with its arguments.
struct ChoiProbe {
  ComplexMatrix epsilon;
  double t = 0.0;
  double t1 = 0.0;
};

namespace detail {

inline void check_probe(const ChoiProbe& probe) {
  if (!probe.epsilon.is_hermitian(1e-9)) throw not_hermitian("choi probe is not Hermitian");
  if (std::abs(probe.epsilon.trace() - 1.0) > 1e-10) throw error("choi probe trace differs from 1");
}

}  // namespace detail

/// (L_t (x) 1) P_d^+, block by block: entry (a d + j, c d + n) = L[sigma_jn]_{ac} / d.
inline ComplexMatrix choi_generator_part(const GeneratorSnapshot& snap) {
  const std::size_t d = snap.dim();
  if (snap.superop && snap.superop->rows() != d * d)
    throw dimension_mismatch("choi_generator_part: superoperator has wrong size");
  ComplexMatrix y(d * d, d * d);
  const double w = 1.0 / static_cast<double>(d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t n = 0; n < d; ++n) {
      ComplexMatrix x(d, d);
      if (snap.superop) {
        const ComplexMatrix& m = *snap.superop;
        for (std::size_t r = 0; r < d * d; ++r) x(r % d, r / d) = m(r, n * d + j);
      } else {
        x = apply_generator(ComplexMatrix::unit(d, j, n), snap);
      }
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t c = 0; c < d; ++c) y(a * d + j, c * d + n) = w * x(a, c);
    }
  return y;
}

/// Applies (1 + t1 L_t) to the first tensor factor of P_d^+.
inline ChoiProbe epsilon_general(const GeneratorSnapshot& snap, double t1) {
  ChoiProbe probe{max_entangled(snap.dim()), snap.time, t1};
  probe.epsilon.axpy(t1, choi_generator_part(snap));
  detail::check_probe(probe);
  return probe;
}

/// The same matrix assembled term by term from the rates and coefficients,
/// without going through the generator.
inline ChoiProbe epsilon_expanded(const GeneratorSnapshot& snap, double t1) {
  const std::size_t d = snap.dim();
  // blocks[j][n] is the factor-1 operator multiplying |j><n| on factor 2
  std::vector<std::vector<ComplexMatrix>> blocks(d, std::vector<ComplexMatrix>(d, ComplexMatrix(d, d)));
  auto add = [&](std::size_t j, std::size_t n, std::size_t r, std::size_t c, complex v) { blocks[j][n](r, c) += v; };

  const double dephasing = snap.dephasing_rate();
  for (std::size_t l = 0; l < d; ++l) {
    const double a = dephasing * snap.c.abs2(l, l);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t n = 0; n < d; ++n) {
        if (l == j && n == l) add(j, n, l, l, a);
        if (l == j) add(j, n, l, n, -0.5 * a);
        if (n == l) add(j, n, j, l, -0.5 * a);
      }
  }

  // cross terms, then their Hermitian conjugate on the full matrix
  ComplexMatrix cross(d * d, d * d);
  const complex lam = snap.lambda0 + std::conj(snap.lambda_tilde0);
  for (std::size_t l = 0; l < d; ++l)
    for (std::size_t k = 0; k < d; ++k)
      if (l != k) cross(l * d + l, k * d + k) += lam * std::conj(snap.c(l, l)) * snap.c(k, k);

  for (std::size_t l = 0; l < d; ++l)
    for (std::size_t m = 0; m < d; ++m) {
      if (l == m) continue;
      const int q = static_cast<int>(m) - static_cast<int>(l);  // label difference l~ - m~
      const double down = snap.c.abs2(l, m) * snap.gamma_q(q);
      const double up = snap.c.abs2(l, m) * snap.gamma_tilde_q(q);
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t n = 0; n < d; ++n) {
          if (l == j && n == l) add(j, n, m, m, down);
          if (l == j) add(j, n, l, n, -0.5 * down);
          if (n == l) add(j, n, j, l, -0.5 * down);
          if (m == j && n == m) add(j, n, l, l, up);
          if (m == j) add(j, n, m, n, -0.5 * up);
          if (n == m) add(j, n, j, m, -0.5 * up);
        }
    }

  ComplexMatrix body = cross + cross.adjoint();
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t n = 0; n < d; ++n) body += kron(blocks[j][n], ComplexMatrix::unit(d, j, n));

  ChoiProbe probe{max_entangled(d), snap.time, t1};
  probe.epsilon.axpy(t1 / static_cast<double>(d), body);
  detail::check_probe(probe);
  return probe;
}

/// Closed-form 9x9 probe for spin 1 with Pi = S_z.
inline ChoiProbe epsilon_spin1_closed_form(const Spin1Rates& g, double t1) {
  const double y = 0.5 * g.gamma_0 + 0.5 * g.gamma_plus + g.gamma_minus;
  const double v = 0.5 * g.gamma_plus + 0.5 * g.gamma_minus + 2.0 * g.gamma_0;
  const double w = 0.5 * g.gamma_0 + 0.5 * g.gamma_minus + g.gamma_plus;

  ComplexMatrix e(9, 9);
  auto set = [&](int r, int c, double x) { e(r - 1, c - 1) = x / 3.0; };  // 1-indexed
  set(1, 1, 1.0 - t1 * g.gamma_minus);
  set(1, 5, 1.0 - t1 * y);
  set(1, 9, 1.0 - t1 * v);
  set(2, 2, t1 * g.gamma_plus);
  set(4, 4, t1 * g.gamma_minus);
  set(5, 1, 1.0 - t1 * y);
  set(5, 5, 1.0 - t1 * (g.gamma_plus + g.gamma_minus));
  set(5, 9, 1.0 - t1 * w);
  set(6, 6, t1 * g.gamma_plus);
  set(8, 8, t1 * g.gamma_minus);
  set(9, 1, 1.0 - t1 * v);
  set(9, 5, 1.0 - t1 * w);
  set(9, 9, 1.0 - t1 * g.gamma_plus);
  return ChoiProbe{std::move(e), 0.0, t1};
}

/// (||eps||_1 - tr eps) / t1, summed eigenvalue by eigenvalue so the O(1)
/// parts cancel exactly.
inline double normalized_excess(const ChoiProbe& probe) {
  const auto eig = hermitian_eigen(probe.epsilon);
  double excess = 0.0;
  for (double x : eig.eigenvalues) excess += std::abs(x) - x;
  return excess / probe.t1;
}

namespace detail {

/// Householder reflection H = 1 - 2 u u^T with H e_0 = |phi>, the
/// maximally entangled vector; H P_d^+ H = e_0 e_0^T.
inline ComplexMatrix entangled_reflection(std::size_t d) {
  const std::size_t n = d * d;
  std::vector<double> u(n, 0.0);
  const double amp = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t j = 0; j < d; ++j) u[j * d + j] = -amp;
  u[0] += 1.0;
  double norm = 0.0;
  for (double x : u) norm += x * x;
  ComplexMatrix h = ComplexMatrix::identity(n);
  if (norm == 0.0) return h;  // d = 1
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) h(r, c) -= 2.0 * u[r] * u[c] / norm;
  return h;
}

/// (||P + t1 Y||_1 - 1) / t1 evaluated as (||e_0 e_0^T + t1 H Y H||_1 - 1) / t1,
/// so the O(t1) block never shares storage with the O(1) projector.
inline double rotated_excess(const ComplexMatrix& rotated_y, double t1) {
  ComplexMatrix e = rotated_y;
  e *= complex(t1);
  e(0, 0) += 1.0;
  const auto eig = hermitian_eigen(0.5 * (e + e.adjoint()));
  double excess = 0.0;
  for (double x : eig.eigenvalues) excess += std::abs(x) - x;
  return excess / t1;
}

}  // namespace detail

/// g(t) as the t1 -> 0+ limit of (||eps(t, t1)||_1 - 1) / t1, evaluated at
/// t1 = t1_rel / ||M||_max and t1 / 2 and Richardson-extrapolated.
inline double g_numeric(const GeneratorSnapshot& snap, double t1_rel = 1e-6) {
  if (!(t1_rel > 0.0)) throw error("g_numeric: t1_rel must be positive");
  const GeneratorSnapshot s = snap.superop ? snap : with_superoperator(snap);
  const double scale = s.superop->max_abs();
  if (!std::isfinite(scale)) throw error("g_numeric: generator norm is not finite");
  if (scale == 0.0) return 0.0;
  const double t1 = t1_rel / scale;
  const auto h = detail::entangled_reflection(s.dim());
  const ComplexMatrix y = h * choi_generator_part(s) * h;
  const double coarse = detail::rotated_excess(y, t1);
  const double fine = detail::rotated_excess(y, 0.5 * t1);
  return std::max(0.0, 2.0 * fine - coarse);
}

/// -(4/3) [Phi(gamma_0) + Phi(gamma_+) + Phi(gamma_-)]
inline double g_analytic_spin1(const Spin1Rates& g) {
  return -(4.0 / 3.0) * (negative_part(g.gamma_0) + negative_part(g.gamma_plus) + negative_part(g.gamma_minus));
}

/// f(2) = 1, f(3) = 4, f(4) = 10, f(d+3) = 3 [f(d+2) - f(d+1)] + f(d) + 1.
inline std::int64_t f_dim(int d) {
  if (d < 2) throw error("f_dim: dimension must be at least 2");
  std::int64_t f[3] = {1, 4, 10};
  if (d <= 4) return f[d - 2];
  for (int k = 5; k <= d; ++k) {
    const std::int64_t next = 3 * (f[2] - f[1]) + f[0] + 1;
    f[0] = f[1];
    f[1] = f[2];
    f[2] = next;
  }
  return f[2];
}

/// Small-tunnelling (alpha ~ 0) witness for Pi = S_z:
/// -(f(d)/d) cos^2(alpha) [Phi(Gamma_0) + Phi(Gamma~_0)].
inline double g_analytic_degenerate(int d, double alpha, double gamma0, double gamma0_tilde) {
  const double ca = std::cos(alpha);
  return -(static_cast<double>(f_dim(d)) / d) * ca * ca * (negative_part(gamma0) + negative_part(gamma0_tilde));
}

struct DivisibilityReport {
  std::vector<double> t_samples;
  std::vector<double> g_values;
  double integral_I = 0.0;
  double n_rhp = 0.0;
  double min_rate_seen = 0.0;
  bool truncation_flag = false;
};

/// Trapezoidal I = int g dt over the sampled horizon and N = I / (I + 1).
/// The truncation flag is raised when the last `convergence_window` intervals
/// contribute more than 1e-4 I.
inline DivisibilityReport n_rhp(std::span<const double> g_samples, std::span<const double> times,
                                std::size_t convergence_window,
                                double min_rate_seen = std::numeric_limits<double>::quiet_NaN()) {
  if (g_samples.size() != times.size()) throw dimension_mismatch("n_rhp: one g sample per time required");
  DivisibilityReport rep;
  rep.t_samples.assign(times.begin(), times.end());
  rep.g_values.reserve(g_samples.size());
  for (double g : g_samples) {
    if (g < 0.0) throw error("n_rhp: g samples must be non-negative");
    rep.g_values.push_back(g);
  }
  rep.min_rate_seen = min_rate_seen;

  const std::size_t n = times.size();
  if (n >= 3) {
    const double h = times[1] - times[0];
    for (std::size_t k = 2; k < n; ++k)
      if (std::abs((times[k] - times[k - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h)))
        throw error("n_rhp: time grid must be uniform");
  }
  std::vector<double> piece(n > 0 ? n - 1 : 0);
  for (std::size_t k = 0; k + 1 < n; ++k)
    piece[k] = 0.5 * (times[k + 1] - times[k]) * (g_samples[k] + g_samples[k + 1]);
  double total = 0.0, tail = 0.0;
  for (std::size_t k = 0; k < piece.size(); ++k) {
    total += piece[k];
    if (k + convergence_window >= piece.size()) tail += piece[k];
  }
  rep.integral_I = total;
  rep.n_rhp = total / (total + 1.0);
  rep.truncation_flag = tail > 1e-4 * total;
  return rep;
}

}  // namespace tcl2spin

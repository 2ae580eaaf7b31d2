#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

#include "tcl2spin/bath_rates.hpp"
#include "tcl2spin/matrix.hpp"
#include "tcl2spin/spin_model.hpp"

namespace tcl2spin {

/// The secular TCL2 generator L_t frozen at one time.
///
/// Basis index k labels the eigenstate m~ = S - k, so a transition from
/// index l to index m carries q = m~_l - m~_m = m - l.
struct GeneratorSnapshot {
  double time = 0.0;
  CouplingCoefficients c;
  int q_max = 0;
  complex lambda0{};
  complex lambda_tilde0{};
  std::vector<double> gamma;        // index q + q_max
  std::vector<double> gamma_tilde;  // index q + q_max
  std::optional<ComplexMatrix> superop;

  std::size_t dim() const noexcept { return c.dim(); }
  double gamma_q(int q) const { return gamma.at(static_cast<std::size_t>(q + q_max)); }
  double gamma_tilde_q(int q) const { return gamma_tilde.at(static_cast<std::size_t>(q + q_max)); }

  /// Rate of the incoherent jump from basis index l to basis index m (l != m).
  double transition_rate(std::size_t l, std::size_t m) const {
    const int q = static_cast<int>(m) - static_cast<int>(l);
    return gamma_q(q) * c.abs2(l, m) + gamma_tilde_q(-q) * c.abs2(m, l);
  }

  /// Weight of the pure-dephasing channel, Gamma_0 + Gamma~_0.
  double dephasing_rate() const { return gamma_q(0) + gamma_tilde_q(0); }
};

inline GeneratorSnapshot make_snapshot(const RateTable& table, std::size_t row, const CouplingCoefficients& c) {
  const int q_max = table.q_max();
  if (c.dim() != static_cast<std::size_t>(q_max) + 1)
    throw dimension_mismatch("make_snapshot: coupling dimension does not match the rate table");
  GeneratorSnapshot snap;
  snap.time = table.times().at(row);
  snap.c = c;
  snap.q_max = q_max;
  snap.lambda0 = table.lambda(0, row);
  snap.lambda_tilde0 = table.lambda_tilde(0, row);
  for (int q = -q_max; q <= q_max; ++q) {
    snap.gamma.push_back(table.gamma(q, row));
    snap.gamma_tilde.push_back(table.gamma_tilde(q, row));
  }
  return snap;
}

/// d rho / dt from the secular master equation: dephasing, the coherent
/// cross terms between diagonal couplings, and incoherent transitions.
inline ComplexMatrix apply_generator(const ComplexMatrix& rho, const GeneratorSnapshot& snap) {
  const std::size_t d = snap.dim();
  if (rho.rows() != d || rho.cols() != d) throw dimension_mismatch("apply_generator: state has wrong size");

  ComplexMatrix out(d, d);
  auto anticommute_projector = [&](std::size_t l, double rate) {
    // out -= rate/2 {sigma_ll, rho}
    for (std::size_t k = 0; k < d; ++k) {
      out(l, k) -= 0.5 * rate * rho(l, k);
      out(k, l) -= 0.5 * rate * rho(k, l);
    }
  };

  const double dephasing = snap.dephasing_rate();
  for (std::size_t l = 0; l < d; ++l) {
    const double a = dephasing * snap.c.abs2(l, l);
    if (a == 0.0) continue;
    out(l, l) += a * rho(l, l);
    anticommute_projector(l, a);
  }

  const complex cross = snap.lambda0 + std::conj(snap.lambda_tilde0);
  for (std::size_t l = 0; l < d; ++l)
    for (std::size_t k = 0; k < d; ++k) {
      if (l == k) continue;
      const complex coef = cross * snap.c(k, k) * std::conj(snap.c(l, l));
      out(l, k) += coef * rho(l, k);             // sigma_ll rho sigma_kk
      out(k, l) += std::conj(coef) * rho(k, l);  // h.c.
    }

  for (std::size_t l = 0; l < d; ++l)
    for (std::size_t m = 0; m < d; ++m) {
      if (l == m) continue;
      const double rate = snap.transition_rate(l, m);
      if (rate == 0.0) continue;
      out(m, m) += rate * rho(l, l);  // sigma_ml rho sigma_lm
      anticommute_projector(l, rate);
    }
  return out;
}

/// M with vec(L[X]) = M vec(X) under column stacking.
inline ComplexMatrix superoperator_matrix(const GeneratorSnapshot& snap) {
  const std::size_t d = snap.dim();
  ComplexMatrix m(d * d, d * d);
  for (std::size_t n = 0; n < d; ++n)
    for (std::size_t j = 0; j < d; ++j) {
      const auto col = vec(apply_generator(ComplexMatrix::unit(d, j, n), snap));
      for (std::size_t r = 0; r < col.size(); ++r) m(r, n * d + j) = col[r];
    }
  return m;
}

inline GeneratorSnapshot with_superoperator(GeneratorSnapshot snap) {
  snap.superop = superoperator_matrix(snap);
  return snap;
}

/// Smallest rate among the Lindblad channels of the snapshot: the dephasing
/// channel (weighted by max |c_ll|^2) and every transition l -> m.
inline double min_channel_rate(const GeneratorSnapshot& snap) {
  const std::size_t d = snap.dim();
  double diag = 0.0;
  for (std::size_t l = 0; l < d; ++l) diag = std::max(diag, snap.c.abs2(l, l));
  double best = std::numeric_limits<double>::infinity();
  if (diag > 0.0) best = snap.dephasing_rate() * diag;
  for (std::size_t l = 0; l < d; ++l)
    for (std::size_t m = 0; m < d; ++m)
      if (l != m && (snap.c.abs2(l, m) > 0.0 || snap.c.abs2(m, l) > 0.0))
        best = std::min(best, snap.transition_rate(l, m));
  return std::isfinite(best) ? best : 0.0;
}

// ---------------------------------------------------------------------------
// Spin-1 specialization for Pi = S_z.

struct Spin1Rates {
  double gamma_0 = 0.0;
  double gamma_plus = 0.0;
  double gamma_minus = 0.0;

  double min() const { return std::min({gamma_0, gamma_plus, gamma_minus}); }
};

/// gamma_0 = |c_{1,1}|^2 (Gamma_0 + Gamma~_0)
/// gamma_+ = |c_{0,1}|^2 (Gamma_{-1} + Gamma~_{+1})
/// gamma_- = |c_{1,0}|^2 (Gamma_{+1} + Gamma~_{-1})
inline Spin1Rates spin1_rates(const GeneratorSnapshot& snap) {
  if (snap.dim() != 3) throw dimension_mismatch("spin1_rates: snapshot is not spin-1");
  // labels 1, 0, -1 sit at indices 0, 1, 2
  return Spin1Rates{
      snap.c.abs2(0, 0) * (snap.gamma_q(0) + snap.gamma_tilde_q(0)),
      snap.c.abs2(1, 0) * (snap.gamma_q(-1) + snap.gamma_tilde_q(1)),
      snap.c.abs2(0, 1) * (snap.gamma_q(1) + snap.gamma_tilde_q(-1)),
  };
}

namespace detail {

// L rho L^H - 1/2 {L^H L, rho}
inline ComplexMatrix dissipator(const ComplexMatrix& jump, const ComplexMatrix& rho) {
  const ComplexMatrix jd = jump.adjoint();
  const ComplexMatrix jdj = jd * jump;
  ComplexMatrix out = jump * rho * jd;
  out.axpy(-0.5, jdj * rho);
  out.axpy(-0.5, rho * jdj);
  return out;
}

}  // namespace detail

/// Closed-form spin-1 generator: collective dephasing on sigma_{1,1} - sigma_{-1,-1}
/// plus raising (gamma_+) and lowering (gamma_-) ladders.
inline ComplexMatrix spin1_generator(const ComplexMatrix& rho, const Spin1Rates& rates) {
  if (rho.rows() != 3 || rho.cols() != 3) throw dimension_mismatch("spin1_generator: state must be 3x3");
  // index 0 <-> m~ = 1, 1 <-> 0, 2 <-> -1
  auto sigma = [](std::size_t a, std::size_t b) { return ComplexMatrix::unit(3, a, b); };
  const ComplexMatrix collective = sigma(0, 0) - sigma(2, 2);

  ComplexMatrix out = rates.gamma_0 * detail::dissipator(collective, rho);
  out.axpy(rates.gamma_plus, detail::dissipator(sigma(0, 1), rho));   // sigma_{1,0}
  out.axpy(rates.gamma_plus, detail::dissipator(sigma(1, 2), rho));   // sigma_{0,-1}
  out.axpy(rates.gamma_minus, detail::dissipator(sigma(1, 0), rho));  // sigma_{0,1}
  out.axpy(rates.gamma_minus, detail::dissipator(sigma(2, 1), rho));  // sigma_{-1,0}
  return out;
}

}  // namespace tcl2spin

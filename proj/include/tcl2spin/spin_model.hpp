#pragma once

#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "tcl2spin/eigen.hpp"
#include "tcl2spin/matrix.hpp"

namespace tcl2spin {

/// Spin quantum number stored as the integer 2S.
class SpinQuantumNumber {
 public:
  explicit SpinQuantumNumber(int twice_s) : twice_s_(twice_s) {
    if (twice_s < 1) throw error("SpinQuantumNumber: 2S must be a positive integer");
  }

  /// Parses "1/2", "3/2", "1", "2", ...
  static SpinQuantumNumber parse(std::string_view text) {
    auto to_int = [&](std::string_view s) {
      int v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc{} || ptr != s.data() + s.size())
        throw error("invalid spin '" + std::string(text) + "'");
      return v;
    };
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      if (to_int(text.substr(slash + 1)) != 2)
        throw error("invalid spin '" + std::string(text) + "': denominator must be 2");
      const int num = to_int(text.substr(0, slash));
      if (num % 2 == 0) throw error("invalid spin '" + std::string(text) + "': use integer form");
      return SpinQuantumNumber(num);
    }
    return SpinQuantumNumber(2 * to_int(text));
  }

  int twice_s() const noexcept { return twice_s_; }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(twice_s_ + 1); }
  double value() const noexcept { return 0.5 * twice_s_; }
  /// Magnetic quantum number of basis index k (k = 0 is m = S).
  double m(std::size_t k) const noexcept { return value() - static_cast<double>(k); }

  std::string label() const {
    return twice_s_ % 2 ? std::to_string(twice_s_) + "/2" : std::to_string(twice_s_ / 2);
  }

  friend bool operator==(const SpinQuantumNumber&, const SpinQuantumNumber&) = default;

 private:
  int twice_s_;
};

struct DriveParameters {
  double omega_s = 1.0;
  double alpha = 0.0;  // [0, pi)
  double phi = 0.0;    // [0, 2 pi)
};

struct SpinOperators {
  ComplexMatrix sx, sy, sz, splus, sminus;
};

/// Spin matrices in the S_z eigenbasis ordered m = S, S-1, ..., -S.
inline SpinOperators spin_operators(const SpinQuantumNumber& s) {
  const std::size_t d = s.dim();
  const double S = s.value();
  SpinOperators ops;
  ops.sz = ComplexMatrix(d, d);
  ops.splus = ComplexMatrix(d, d);
  for (std::size_t k = 0; k < d; ++k) {
    const double m = s.m(k);
    ops.sz(k, k) = m;
    // S+ |m> = sqrt((S - m)(S + m + 1)) |m + 1>, and |m + 1> sits at index k - 1.
    if (k > 0) ops.splus(k - 1, k) = std::sqrt((S - m) * (S + m + 1.0));
  }
  ops.sminus = ops.splus.adjoint();
  ops.sx = 0.5 * (ops.splus + ops.sminus);
  ops.sy = complex(0.0, -0.5) * (ops.splus - ops.sminus);
  return ops;
}

/// H_S = (omega_s / 2) [sin(alpha) (S+ e^{-i phi} + S- e^{i phi}) + 2 cos(alpha) S_z]
inline ComplexMatrix build_hs(const SpinQuantumNumber& s, const DriveParameters& drive) {
  const auto ops = spin_operators(s);
  const double sa = std::sin(drive.alpha), ca = std::cos(drive.alpha);
  ComplexMatrix h = std::polar(sa, -drive.phi) * ops.splus;
  h.axpy(std::polar(sa, drive.phi), ops.sminus);
  h.axpy(2.0 * ca, ops.sz);
  return (0.5 * drive.omega_s) * h;
}

/// Unitary whose columns are the eigenvectors of H_S, ordered by descending
/// eigenvalue omega_s * m for m = S ... -S.
struct EigenFrame {
  SpinQuantumNumber spin;
  ComplexMatrix u;
  std::vector<double> eigenvalues;
};

inline EigenFrame eigenframe(const ComplexMatrix& hs, const DriveParameters& drive) {
  if (!hs.square()) throw dimension_mismatch("eigenframe: H_S is not square");
  const auto eig = hermitian_eigen(hs);
  const std::size_t d = hs.rows();
  SpinQuantumNumber spin(static_cast<int>(d) - 1);

  for (std::size_t k = 0; k < d; ++k)
    if (std::abs(eig.eigenvalues[k] - drive.omega_s * spin.m(k)) > 1e-9 * std::max(1.0, drive.omega_s))
      throw error("eigenframe: spectrum is not the equally spaced ladder omega_s * m");

  // Largest-magnitude component of each column made real and positive,
  // lowest row index on ties.
  ComplexMatrix u = eig.eigenvectors;
  for (std::size_t k = 0; k < d; ++k) {
    double best = 0.0;
    for (std::size_t i = 0; i < d; ++i) best = std::max(best, std::abs(u(i, k)));
    std::size_t pivot = 0;
    for (std::size_t i = 0; i < d; ++i)
      if (std::abs(u(i, k)) >= best - 1e-12) {
        pivot = i;
        break;
      }
    const complex fix = std::conj(u(pivot, k)) / std::abs(u(pivot, k));
    for (std::size_t i = 0; i < d; ++i) u(i, k) *= fix;
  }
  return EigenFrame{spin, std::move(u), eig.eigenvalues};
}

inline EigenFrame eigenframe(const SpinQuantumNumber& s, const DriveParameters& drive) {
  return eigenframe(build_hs(s, drive), drive);
}

enum class CouplingKind { sz, sminus, custom };

struct CouplingSpec {
  CouplingKind kind = CouplingKind::sz;
  std::optional<ComplexMatrix> custom_matrix;
};

/// c(l, m) = <psi_l| Pi |psi_m>, indices ordered m~ = S ... -S.
struct CouplingCoefficients {
  ComplexMatrix c;

  std::size_t dim() const noexcept { return c.rows(); }
  complex operator()(std::size_t l, std::size_t m) const { return c(l, m); }
  double abs2(std::size_t l, std::size_t m) const { return std::norm(c(l, m)); }
};

inline ComplexMatrix resolve_coupling(const CouplingSpec& spec, const SpinQuantumNumber& s) {
  switch (spec.kind) {
    case CouplingKind::sz:
      return spin_operators(s).sz;
    case CouplingKind::sminus:
      return spin_operators(s).sminus;
    case CouplingKind::custom:
      if (!spec.custom_matrix) throw error("custom coupling requires a matrix");
      if (spec.custom_matrix->rows() != s.dim() || spec.custom_matrix->cols() != s.dim())
        throw dimension_mismatch("custom coupling matrix must be " + std::to_string(s.dim()) + "x" +
                                 std::to_string(s.dim()));
      return *spec.custom_matrix;
  }
  throw error("unknown coupling kind");
}

inline CouplingCoefficients coupling_coefficients(const EigenFrame& frame, const CouplingSpec& spec) {
  const ComplexMatrix pi = resolve_coupling(spec, frame.spin);
  return CouplingCoefficients{frame.u.adjoint() * pi * frame.u};
}

}  // namespace tcl2spin

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tcl2spin/matrix.hpp"

namespace tcl2spin {

struct HermitianEigenDecomposition {
  std::vector<double> eigenvalues;  // descending
  ComplexMatrix eigenvectors;       // columns
};

namespace detail {

inline double off_diagonal_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (std::size_t p = 0; p < a.rows(); ++p)
    for (std::size_t q = p + 1; q < a.cols(); ++q) s += std::norm(a(p, q));
  return std::sqrt(2.0 * s);
}

inline double frobenius_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (const auto& x : a.data()) s += std::norm(x);
  return std::sqrt(s);
}

// Zero a(p,q) with the unitary J = diag-phase * real Givens rotation acting on
// columns p,q: A <- J^H A J, V <- V J.
inline void jacobi_rotate(ComplexMatrix& a, ComplexMatrix& v, std::size_t p, std::size_t q) {
  const complex apq = a(p, q);
  const double mag = std::abs(apq);
  const complex phase = apq / mag;  // e^{i theta}
  const double app = a(p, p).real();
  const double aqq = a(q, q).real();

  const double theta = (aqq - app) / (2.0 * mag);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  const complex jpp = c;
  const complex jpq = s;
  const complex jqp = -s * std::conj(phase);
  const complex jqq = c * std::conj(phase);

  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const complex akp = a(k, p), akq = a(k, q);
    a(k, p) = akp * jpp + akq * jqp;
    a(k, q) = akp * jpq + akq * jqq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const complex apk = a(p, k), aqk = a(q, k);
    a(p, k) = std::conj(jpp) * apk + std::conj(jqp) * aqk;
    a(q, k) = std::conj(jpq) * apk + std::conj(jqq) * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  a(p, p) = a(p, p).real();
  a(q, q) = a(q, q).real();

  for (std::size_t k = 0; k < n; ++k) {
    const complex vkp = v(k, p), vkq = v(k, q);
    v(k, p) = vkp * jpp + vkq * jqp;
    v(k, q) = vkp * jpq + vkq * jqq;
  }
}

}  // namespace detail

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// Eigenvalues come out sorted descending. Each eigenvector is rephased so
/// that its first non-negligible component is real and positive.
inline HermitianEigenDecomposition hermitian_eigen(const ComplexMatrix& in, int max_sweeps = 100) {
  if (!in.square()) throw not_hermitian("hermitian_eigen: matrix is not square");
  if (!in.is_hermitian(1e-9)) throw not_hermitian("hermitian_eigen: matrix is not Hermitian");

  const std::size_t n = in.rows();
  ComplexMatrix a = 0.5 * (in + in.adjoint());
  ComplexMatrix v = ComplexMatrix::identity(n);

  const double scale = detail::frobenius_norm(a);
  if (scale > 0.0) {
    int sweep = 0;
    while (detail::off_diagonal_norm(a) > 1e-15 * scale) {
      if (sweep++ >= max_sweeps)
        throw no_convergence("hermitian_eigen: sweep budget exhausted");
      for (std::size_t p = 0; p + 1 < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q)
          if (std::abs(a(p, q)) > 1e-300) detail::jacobi_rotate(a, v, p, q);
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x).real() > a(y, y).real(); });

  HermitianEigenDecomposition out;
  out.eigenvalues.resize(n);
  out.eigenvectors = ComplexMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.eigenvalues[k] = a(src, src).real();
    double colmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) colmax = std::max(colmax, std::abs(v(i, src)));
    complex fix = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(v(i, src)) > 1e-12 * colmax) {
        fix = std::conj(v(i, src)) / std::abs(v(i, src));
        break;
      }
    }
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, src) * fix;
  }
  return out;
}

/// Sum of singular values.
inline double trace_norm(const ComplexMatrix& a) {
  if (!a.square()) throw dimension_mismatch("trace_norm: matrix is not square");
  if (a.is_hermitian(1e-9)) {
    const auto eig = hermitian_eigen(a);
    double s = 0.0;
    for (double x : eig.eigenvalues) s += std::abs(x);
    return s;
  }
  const auto eig = hermitian_eigen(a.adjoint() * a);
  double s = 0.0;
  for (double x : eig.eigenvalues) s += std::sqrt(std::max(x, 0.0));
  return s;
}

}  // namespace tcl2spin

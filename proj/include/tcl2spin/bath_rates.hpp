#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <span>
#include <thread>
#include <unordered_map>
#include <vector>

#include "tcl2spin/matrix.hpp"
#include "tcl2spin/quadrature.hpp"
#include "tcl2spin/spin_model.hpp"

namespace tcl2spin {

/// Ohmic-family spectral density J(w) = eta * w^s * wc^(1-s) * exp(-w / wc).
struct SpectralDensity {
  double eta = 0.0;
  double exponent_s = 1.0;
  double omega_c = 1.0;

  double operator()(double omega) const {
    if (omega <= 0.0) return 0.0;
    return eta * std::pow(omega, exponent_s) * std::pow(omega_c, 1.0 - exponent_s) *
           std::exp(-omega / omega_c);
  }
};

struct BathState {
  double temperature = 0.0;  // k_B = 1
};

/// Bose occupation 1 / (exp(w / T) - 1); identically zero at T = 0.
inline double thermal_occupation(double omega, const BathState& bath) {
  if (!(omega > 0.0)) throw non_positive_frequency("thermal_occupation: frequency must be positive");
  if (bath.temperature <= 0.0) return 0.0;
  return 1.0 / std::expm1(omega / bath.temperature);
}

/// Which occupation factor multiplies J(w) inside the frequency integral.
enum class RateWeight {
  r,           // Lambda
  r_plus_one,  // Lambda-tilde
  vacuum,      // weight 1: the temperature-independent part of Lambda-tilde
};

struct QuadratureOptions {
  int nodes_per_panel = 64;
  double panel_width_factor = 0.25;  // panel width in units of omega_c
  double tail_cut = 1e-14;           // relative integrand magnitude at the cutoff
  int resonance_refinement = 4;
  double resonance_window = 10.0;    // half-width of refined band is window / t
  double max_phase_per_panel = 16.0 * std::numbers::pi;
  std::size_t max_panels = 1'000'000;
  int max_cutoff_multiples = 2000;
};

namespace detail {

// Upper frequency limit: smallest multiple of omega_c where J (r + 1) drops
// below tail_cut times its peak.
inline double frequency_cutoff(const SpectralDensity& j, const BathState& bath, const QuadratureOptions& opt) {
  auto envelope = [&](double w) { return j(w) * (thermal_occupation(w, bath) + 1.0); };
  double peak = 0.0;
  for (int k = 1; k <= 4096; ++k) peak = std::max(peak, envelope(j.omega_c * k / 64.0));
  if (!(peak > 0.0)) return j.omega_c;
  for (int n = 1; n <= opt.max_cutoff_multiples; ++n)
    if (envelope(n * j.omega_c) < opt.tail_cut * peak) return n * j.omega_c;
  throw quadrature_failure("rate quadrature: spectral tail does not decay below the cutoff criterion");
}

// Quadrature nodes of one panel with the spectral factors already applied.
struct PanelNodes {
  std::vector<double> omega;
  std::vector<double> weighted_j;  // quadrature weight * J(w)
  std::vector<double> occupation;  // r(w)
};

struct RateContext {
  SpectralDensity j;
  BathState bath;
  double omega_s;
  QuadratureOptions opt;
  GaussLegendreRule rule;
  double omega_max;
};

inline RateContext make_context(const SpectralDensity& j, const BathState& bath, double omega_s,
                                const QuadratureOptions& opt) {
  return RateContext{j, bath, omega_s, opt, gauss_legendre(opt.nodes_per_panel), frequency_cutoff(j, bath, opt)};
}

// Composite Gauss-Legendre layout on [0, omega_max]. Panels have width
// panel_width_factor * omega_c, capped so that w t advances at most
// max_phase_per_panel across one panel. The first panel uses w = b x^2 to
// absorb the w^(s-1) endpoint behaviour; panels meeting a resonance band
// |w - q omega_s| < window / t are split into `resonance_refinement` pieces.
// Panel contents depend only on (panel count, index, split), so they are
// memoized across times.
class NodeCache {
 public:
  explicit NodeCache(const RateContext& ctx) : ctx_(&ctx) {}

  template <typename Fn>
  void for_each_panel(double t, std::span<const double> resonances, Fn&& fn) {
    const auto& opt = ctx_->opt;
    double width = opt.panel_width_factor * ctx_->j.omega_c;
    if (t > 0.0) width = std::min(width, opt.max_phase_per_panel / t);
    const auto panels = static_cast<std::size_t>(std::ceil(ctx_->omega_max / width - 1e-12));
    if (panels == 0 || panels > opt.max_panels)
      throw quadrature_failure("rate quadrature: panel budget exhausted");
    width = ctx_->omega_max / static_cast<double>(panels);
    const double half = t > 0.0 ? opt.resonance_window / t : 0.0;

    for (std::size_t p = 0; p < panels; ++p) {
      const double a = width * static_cast<double>(p);
      const double b = p + 1 == panels ? ctx_->omega_max : width * static_cast<double>(p + 1);
      bool refine = false;
      for (double w0 : resonances)
        if (t > 0.0 && b > w0 - half && a < w0 + half) refine = true;
      const int sub = refine ? std::max(1, opt.resonance_refinement) : 1;
      fn(panel(panels, p, sub, a, b));
    }
  }

 private:
  const PanelNodes& panel(std::size_t panels, std::size_t p, int sub, double a, double b) {
    const std::uint64_t key = (static_cast<std::uint64_t>(panels) << 32) ^ (static_cast<std::uint64_t>(p) << 8) ^
                              static_cast<std::uint64_t>(sub);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    if (cache_.size() > 200000) cache_.clear();

    const auto& rule = ctx_->rule;
    const std::size_t n = rule.nodes.size();
    PanelNodes out;
    out.omega.reserve(n * sub);
    std::vector<double> weight;
    weight.reserve(n * sub);
    for (int k = 0; k < sub; ++k) {
      if (p == 0) {
        const double xa = static_cast<double>(k) / sub, xb = static_cast<double>(k + 1) / sub;
        const double hx = 0.5 * (xb - xa), cx = 0.5 * (xb + xa);
        for (std::size_t i = 0; i < n; ++i) {
          const double x = cx + hx * rule.nodes[i];
          out.omega.push_back(b * x * x);
          weight.push_back(rule.weights[i] * hx * 2.0 * b * x);
        }
      } else {
        const double sa = a + (b - a) * k / sub, sb = a + (b - a) * (k + 1) / sub;
        const double h = 0.5 * (sb - sa), c = 0.5 * (sb + sa);
        for (std::size_t i = 0; i < n; ++i) {
          out.omega.push_back(c + h * rule.nodes[i]);
          weight.push_back(rule.weights[i] * h);
        }
      }
    }
    for (std::size_t i = 0; i < out.omega.size(); ++i) {
      const double w = out.omega[i];
      out.weighted_j.push_back(w > 0.0 ? weight[i] * ctx_->j(w) : 0.0);
      out.occupation.push_back(w > 0.0 ? thermal_occupation(w, ctx_->bath) : 0.0);
    }
    return cache_.emplace(key, std::move(out)).first->second;
  }

  const RateContext* ctx_;
  std::unordered_map<std::uint64_t, PanelNodes> cache_;
};

// (e^{i D t} - 1) / (i D) = (2 sin(D t / 2) / D) e^{i D t / 2}, written with
// (c, s) = (cos, sin)(D t / 2); Taylor series when |D t| < 1e-4.
inline void time_kernel(double delta, double t, double c, double s, double& re, double& im) {
  if (std::abs(delta * t) < 1e-4) {
    re = t - delta * delta * t * t * t / 6.0;
    im = 0.5 * delta * t * t;
    return;
  }
  const double amp = 2.0 * s / delta;
  re = amp * c;
  im = amp * s;
}

struct RateSample {
  std::vector<complex> lambda;        // index q + q_max
  std::vector<complex> lambda_tilde;  // index q + q_max
};

// Lambda_q and Lambda-tilde_q for every q in [-q_max, q_max] at one time.
// Real arithmetic throughout: std::complex products take the Annex G
// NaN-recovery path, which dominates this loop otherwise.
inline RateSample rates_at(const RateContext& ctx, NodeCache& cache, int q_max, double t) {
  const std::size_t nq = 2 * static_cast<std::size_t>(q_max) + 1;
  RateSample out{std::vector<complex>(nq), std::vector<complex>(nq)};
  if (t == 0.0) return out;

  std::vector<double> resonances;
  for (int q = 1; q <= q_max; ++q) resonances.push_back(q * ctx.omega_s);

  std::vector<double> shift_re(nq), shift_im(nq), detune(nq);
  std::vector<double> lam_re(nq), lam_im(nq), lamt_re(nq), lamt_im(nq);
  for (std::size_t iq = 0; iq < nq; ++iq) {
    detune[iq] = (static_cast<double>(iq) - q_max) * ctx.omega_s;
    shift_re[iq] = std::cos(0.5 * detune[iq] * t);
    shift_im[iq] = -std::sin(0.5 * detune[iq] * t);
  }

  cache.for_each_panel(t, resonances, [&](const PanelNodes& pn) {
    for (std::size_t k = 0; k < pn.omega.size(); ++k) {
      const double wj = pn.weighted_j[k];
      if (wj == 0.0) continue;
      const double w = pn.omega[k];
      const double wr = wj * pn.occupation[k], wr1 = wj * (pn.occupation[k] + 1.0);
      const double base_re = std::cos(0.5 * w * t), base_im = std::sin(0.5 * w * t);
      for (std::size_t iq = 0; iq < nq; ++iq) {
        const double c = base_re * shift_re[iq] - base_im * shift_im[iq];
        const double s = base_re * shift_im[iq] + base_im * shift_re[iq];
        double kre, kim;
        time_kernel(w - detune[iq], t, c, s, kre, kim);
        lam_re[iq] += wr * kre;
        lam_im[iq] += wr * kim;
        lamt_re[iq] += wr1 * kre;
        lamt_im[iq] += wr1 * kim;
      }
    }
  });
  for (std::size_t iq = 0; iq < nq; ++iq) {
    out.lambda[iq] = complex(lam_re[iq], lam_im[iq]);
    out.lambda_tilde[iq] = complex(lamt_re[iq], lamt_im[iq]);
  }
  return out;
}

}  // namespace detail

/// Lambda_q(t) = int_0^inf dw J(w) w(w) (e^{i D t} - 1) / (i D), D = w - q omega_s,
/// with the inner time integral done in closed form.
inline complex lambda_rate(int q, double t, const SpectralDensity& j, const BathState& bath, double omega_s,
                           RateWeight weight, const QuadratureOptions& opt = {}) {
  if (t < 0.0) throw error("lambda_rate: time must be non-negative");
  if (t == 0.0) return {};
  if (weight == RateWeight::r && bath.temperature <= 0.0) return {};

  const auto ctx = detail::make_context(j, bath, omega_s, opt);
  detail::NodeCache cache(ctx);
  std::vector<double> resonances;
  if (q > 0) resonances.push_back(q * omega_s);
  const double detune = q * omega_s;
  const double shift_re = std::cos(0.5 * detune * t), shift_im = -std::sin(0.5 * detune * t);

  double sum_re = 0.0, sum_im = 0.0;
  cache.for_each_panel(t, resonances, [&](const detail::PanelNodes& pn) {
    for (std::size_t k = 0; k < pn.omega.size(); ++k) {
      double f = pn.weighted_j[k];
      if (f == 0.0) continue;
      switch (weight) {
        case RateWeight::r: f *= pn.occupation[k]; break;
        case RateWeight::r_plus_one: f *= pn.occupation[k] + 1.0; break;
        case RateWeight::vacuum: break;
      }
      const double w = pn.omega[k];
      const double base_re = std::cos(0.5 * w * t), base_im = std::sin(0.5 * w * t);
      double kre, kim;
      detail::time_kernel(w - detune, t, base_re * shift_re - base_im * shift_im,
                          base_re * shift_im + base_im * shift_re, kre, kim);
      sum_re += f * kre;
      sum_im += f * kim;
    }
  });
  return {sum_re, sum_im};
}

/// Decay rates for every transition index q in [-2S, 2S] on a time grid.
class RateTable {
 public:
  RateTable() = default;
  RateTable(int q_max, std::vector<double> times, std::vector<detail::RateSample> rows)
      : q_max_(q_max), times_(std::move(times)), rows_(std::move(rows)) {
    if (rows_.size() != times_.size()) throw dimension_mismatch("RateTable: one row per time required");
  }

  /// Every row equal to `sample`; used for frozen (Markovian-limit) rates.
  static RateTable constant(int q_max, const detail::RateSample& sample, std::vector<double> times) {
    std::vector<detail::RateSample> rows(times.size(), sample);
    return RateTable(q_max, std::move(times), std::move(rows));
  }

  int q_max() const noexcept { return q_max_; }
  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }

  complex lambda(int q, std::size_t i) const { return rows_.at(i).lambda.at(index(q)); }
  complex lambda_tilde(int q, std::size_t i) const { return rows_.at(i).lambda_tilde.at(index(q)); }
  double gamma(int q, std::size_t i) const { return 2.0 * lambda(q, i).real(); }
  double gamma_tilde(int q, std::size_t i) const { return 2.0 * lambda_tilde(q, i).real(); }

  const detail::RateSample& row(std::size_t i) const { return rows_.at(i); }

 private:
  std::size_t index(int q) const {
    if (q < -q_max_ || q > q_max_) throw dimension_mismatch("RateTable: transition index out of range");
    return static_cast<std::size_t>(q + q_max_);
  }

  int q_max_ = 0;
  std::vector<double> times_;
  std::vector<detail::RateSample> rows_;
};

/// Evaluates all rates at every grid time; `threads` > 1 splits the grid
/// into contiguous blocks.
inline RateTable rate_table(const SpinQuantumNumber& s, const DriveParameters& drive, const SpectralDensity& j,
                            const BathState& bath, std::span<const double> time_grid,
                            const QuadratureOptions& opt = {}, unsigned threads = 1) {
  if (time_grid.empty() || time_grid.front() != 0.0)
    throw error("rate_table: time grid must start at 0");
  for (std::size_t i = 1; i < time_grid.size(); ++i)
    if (!(time_grid[i] > time_grid[i - 1])) throw error("rate_table: time grid must be strictly increasing");

  const int q_max = s.twice_s();
  const auto ctx = detail::make_context(j, bath, drive.omega_s, opt);
  std::vector<detail::RateSample> rows(time_grid.size());

  std::vector<std::exception_ptr> failures(std::max(1u, threads));
  auto work = [&](unsigned slot, std::size_t begin, std::size_t end) {
    try {
      detail::NodeCache cache(ctx);
      for (std::size_t i = begin; i < end; ++i) rows[i] = detail::rates_at(ctx, cache, q_max, time_grid[i]);
    } catch (...) {
      failures[slot] = std::current_exception();
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(time_grid.size())));
  if (threads == 1) {
    work(0, 0, time_grid.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (time_grid.size() + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t b = w * chunk, e = std::min(time_grid.size(), b + chunk);
      if (b < e) pool.emplace_back(work, w, b, e);
    }
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);
  return RateTable(q_max, std::vector<double>(time_grid.begin(), time_grid.end()), std::move(rows));
}

}  // namespace tcl2spin

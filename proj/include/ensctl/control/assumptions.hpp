#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "ensctl/control/costs.hpp"

namespace ensctl {

/// Spectrum of one Gramian together with the maneuver projections.
struct SpectrumSample {
  std::uint64_t seed = 0;
  std::size_t N = 0;
  std::size_t p = 0;
  RealVector mu;        // descending
  RealVector theta_sq;  // theta_k^2 = (beta . xi_k)^2

  [[nodiscard]] std::size_t Np() const noexcept { return N * p; }
};

inline SpectrumSample make_spectrum_sample(const Cocg& cocg, const ManeuverVector& beta, std::uint64_t seed) {
  return {seed, cocg.N, cocg.p, cocg.eigenvalues, maneuver_projections_sq(cocg, beta)};
}

struct LinearFit {
  Real slope;
  Real intercept;
  Real r_squared;
  std::size_t points = 0;
};

/// Per-N averages that feed c1 and c2.
struct LeadingMeans {
  std::size_t N = 0;
  std::size_t Np = 0;
  std::size_t seeds = 0;
  Real mu0;
  Real theta0_sq;
};

/// Where theta_k^2 leaves its geometric decay in one sample.
struct FloorInfo {
  std::uint64_t seed = 0;
  std::size_t N = 0;
  std::size_t resolved = 0;              // k < resolved have mu_k above the resolution cutoff
  std::optional<std::size_t> floor_start;
};

/// Fitted constants of mu_k ~ c1 Np r1^k and theta_k^2 ~ max(c2 Np r2^k, theta_c^2).
struct AssumptionFit {
  Real c1;
  Real c2;
  Real r1;
  Real r2;
  Real theta_c_sq;
  bool floor_detected = false;
  LinearFit mu0_fit;      // mean mu0 against Np, through the origin
  LinearFit theta0_fit;   // mean theta0^2 against Np, through the origin
  LinearFit decay_fit;    // log10(mu_k / mu0) against k
  LinearFit theta_fit;    // log10(theta_k^2 / theta0^2) against k, pre-floor
  std::vector<LeadingMeans> means;
  std::vector<FloorInfo> floors;
  std::size_t seeds = 0;
  std::size_t N_min = 0;
  std::size_t N_max = 0;
  std::size_t p = 0;

  /// Largest k with c2 Np r2^k > theta_c^2, capped at Np - 1; -1 when even
  /// k = 0 falls below the floor.
  [[nodiscard]] long k_bar(std::size_t Np) const {
    if (theta_c_sq <= 0) return static_cast<long>(Np) - 1;
    long k = -1;
    Real level = c2 * Real(Np);
    while (k + 1 < static_cast<long>(Np) && level > theta_c_sq) {
      ++k;
      level *= r2;
    }
    return k;
  }
};

/// Tunables of the fit. Points with mu_k <= resolution * mu0 are treated as
/// unresolved and excluded everywhere.
struct FitOptions {
  Real resolution = Real("1e-40");
  Real floor_decades = 1;
  std::size_t floor_run = 3;
  std::size_t min_fit_points = 2;
  std::size_t min_distinct_N = 4;
  std::size_t min_seeds = 3;
};

namespace detail {

inline Real log10r(const Real& x) { return boost::multiprecision::log10(x); }

inline LinearFit through_origin(const std::vector<Real>& x, const std::vector<Real>& y) {
  LinearFit f;
  f.points = x.size();
  Real sxy = 0, sxx = 0, ybar = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
    ybar += y[i];
  }
  if (x.empty() || sxx == 0) throw ValidationError("insufficient data for a regression");
  f.slope = sxy / sxx;
  f.intercept = 0;
  ybar /= x.size();
  Real ssr = 0, sst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Real r = y[i] - f.slope * x[i];
    ssr += r * r;
    sst += (y[i] - ybar) * (y[i] - ybar);
  }
  f.r_squared = sst > 0 ? 1 - ssr / sst : Real(ssr == 0 ? 1 : 0);
  return f;
}

inline LinearFit ordinary(const std::vector<Real>& x, const std::vector<Real>& y, std::size_t lo, std::size_t hi) {
  LinearFit f;
  f.points = hi - lo;
  Real xbar = 0, ybar = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    xbar += x[i];
    ybar += y[i];
  }
  xbar /= f.points;
  ybar /= f.points;
  Real sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    sxy += (x[i] - xbar) * (y[i] - ybar);
    sxx += (x[i] - xbar) * (x[i] - xbar);
    syy += (y[i] - ybar) * (y[i] - ybar);
  }
  f.slope = sxy / sxx;
  f.intercept = ybar - f.slope * xbar;
  f.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : Real(1);
  return f;
}

/// Number of leading indices whose eigenvalue is resolved.
inline std::size_t resolved_count(const SpectrumSample& s, const FitOptions& opt, const PrecisionContext& ctx) {
  if (s.mu.empty() || !(s.mu[0] > 0)) return 0;
  const Real cutoff = s.mu[0] * std::max(opt.resolution, ctx.psd_tol);
  std::size_t k = 0;
  while (k < s.mu.size() && s.mu[k] > cutoff) ++k;
  return k;
}

/// First k where log10 theta_k^2 sits more than `floor_decades` above the
/// log-linear fit of all earlier points, for `floor_run` consecutive k.
inline std::optional<std::size_t> detect_floor(const std::vector<Real>& logt, const FitOptions& opt) {
  const std::size_t K = logt.size();
  std::vector<Real> ks(K);
  for (std::size_t k = 0; k < K; ++k) ks[k] = Real(k);
  for (std::size_t kf = opt.min_fit_points; kf + opt.floor_run <= K; ++kf) {
    const LinearFit f = ordinary(ks, logt, 0, kf);
    bool above = true;
    for (std::size_t i = 0; i < opt.floor_run && above; ++i) {
      const std::size_t k = kf + i;
      above = logt[k] - (f.intercept + f.slope * Real(k)) > opt.floor_decades;
    }
    if (above) return kf;
  }
  return std::nullopt;
}

inline Real median(std::vector<Real> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

}  // namespace detail

/// Fits both scaling assumptions over spectra from several N and seeds.
inline AssumptionFit fit_assumptions(const std::vector<SpectrumSample>& samples, const PrecisionContext& ctx,
                                     const FitOptions& opt = {}) {
  AssumptionFit fit;
  std::map<std::size_t, std::vector<const SpectrumSample*>> by_n;
  std::set<std::uint64_t> seeds;
  for (const auto& s : samples) {
    if (s.mu.size() != s.Np() || s.theta_sq.size() != s.Np() || s.Np() == 0)
      throw ValidationError("spectrum sample has inconsistent sizes");
    if (fit.p != 0 && s.p != fit.p) throw ValidationError("spectrum samples mix target counts");
    fit.p = s.p;
    by_n[s.N].push_back(&s);
    seeds.insert(s.seed);
  }
  if (by_n.size() < opt.min_distinct_N)
    throw ValidationError("insufficient data: need spectra for at least " + std::to_string(opt.min_distinct_N) +
                          " distinct N, got " + std::to_string(by_n.size()));
  for (const auto& [n, group] : by_n)
    if (group.size() < opt.min_seeds)
      throw ValidationError("insufficient data: N = " + std::to_string(n) + " has " +
                            std::to_string(group.size()) + " seeds, need " + std::to_string(opt.min_seeds));
  fit.seeds = seeds.size();
  fit.N_min = by_n.begin()->first;
  fit.N_max = by_n.rbegin()->first;

  // Leading eigenvalue and projection against Np.
  std::vector<Real> np, mu0, th0;
  for (const auto& [n, group] : by_n) {
    LeadingMeans m{n, n * fit.p, group.size(), Real(0), Real(0)};
    for (const auto* s : group) {
      m.mu0 += s->mu[0];
      m.theta0_sq += s->theta_sq[0];
    }
    m.mu0 /= group.size();
    m.theta0_sq /= group.size();
    np.push_back(Real(m.Np));
    mu0.push_back(m.mu0);
    th0.push_back(m.theta0_sq);
    fit.means.push_back(m);
  }
  fit.mu0_fit = detail::through_origin(np, mu0);
  fit.theta0_fit = detail::through_origin(np, th0);
  fit.c1 = fit.mu0_fit.slope;
  fit.c2 = fit.theta0_fit.slope;

  // Decay rates and the theta floor, pooled over samples.
  std::vector<Real> mk, my, tk, ty, floor_values;
  for (const auto& [n, group] : by_n) {
    for (const auto* s : group) {
      FloorInfo info{s->seed, s->N, detail::resolved_count(*s, opt, ctx), std::nullopt};
      for (std::size_t k = 1; k < info.resolved; ++k) {
        mk.push_back(Real(k));
        my.push_back(detail::log10r(s->mu[k] / s->mu[0]));
      }
      std::vector<Real> logt;
      for (std::size_t k = 0; k < info.resolved && s->theta_sq[k] > 0; ++k)
        logt.push_back(detail::log10r(s->theta_sq[k]));
      info.floor_start = detail::detect_floor(logt, opt);
      const std::size_t pre = info.floor_start.value_or(logt.size());
      if (!logt.empty()) {
        for (std::size_t k = 1; k < pre; ++k) {
          tk.push_back(Real(k));
          ty.push_back(logt[k] - logt[0]);
        }
      }
      if (info.floor_start)
        for (std::size_t k = *info.floor_start; k < info.resolved; ++k) floor_values.push_back(s->theta_sq[k]);
      fit.floors.push_back(info);
    }
  }
  if (mk.empty()) throw ValidationError("insufficient data: no resolved eigenvalues beyond the first");
  if (tk.empty()) throw ValidationError("insufficient data: no pre-floor projections beyond the first");
  fit.decay_fit = detail::through_origin(mk, my);
  fit.theta_fit = detail::through_origin(tk, ty);
  fit.r1 = boost::multiprecision::pow(Real(10), fit.decay_fit.slope);
  fit.r2 = boost::multiprecision::pow(Real(10), fit.theta_fit.slope);
  fit.floor_detected = !floor_values.empty();
  fit.theta_c_sq = fit.floor_detected ? detail::median(floor_values) : Real(0);
  return fit;
}

namespace detail {

inline void check_rates(const AssumptionFit& fit) {
  for (const Real* r : {&fit.r1, &fit.r2}) {
    if (*r == 1) throw NumericalError("decay rate equal to 1: geometric forms undefined");
    if (!(*r > 0) || *r > 1) throw NumericalError("decay rate " + to_string(*r, 6) + " outside (0, 1)");
  }
}

}  // namespace detail

/// Cost approximations obtained by substituting both assumptions and
/// alpha = Np / (Np + b) into the spectral sums.
inline Costs approx_costs(const AssumptionFit& fit, std::size_t N, std::size_t p, const Real& b) {
  detail::check_rates(fit);
  if (b < 0) throw ValidationError("b must be nonnegative");
  const std::size_t Np = N * p;
  const Real np = Real(Np);
  const long kb = fit.k_bar(Np);
  Real j1 = 0, j2 = 0, e1 = 0, e2 = 0, d1 = 0, d2 = 0;
  Real r1k = 1, r2k = 1;
  for (std::size_t k = 0; k < Np; ++k, r1k *= fit.r1, r2k *= fit.r2) {
    const Real den = 1 + b * fit.c1 * r1k;
    if (static_cast<long>(k) <= kb) {
      j1 += r2k / den;
      e1 += r1k * r2k / (den * den);
      d1 += r2k / (den * den);
    } else {
      j2 += 1 / den;
      e2 += r1k / (den * den);
      d2 += 1 / (den * den);
    }
  }
  Costs c;
  c.J = b * np / (2 * (np + b)) * fit.c2 * j1 + b * fit.theta_c_sq / (2 * (np + b)) * j2;
  c.E = b * b * fit.c1 * fit.c2 * e1 + b * b * fit.c1 * fit.theta_c_sq / np * e2;
  c.D = np * (fit.c2 * d1 + fit.theta_c_sq / np * d2);
  return c;
}

/// Closed-form geometric bounds on the approximations.
inline Costs upper_bounds(const AssumptionFit& fit, std::size_t N, std::size_t p, const Real& b) {
  detail::check_rates(fit);
  if (b < 0) throw ValidationError("b must be nonnegative");
  const std::size_t Np = N * p;
  const Real np = Real(Np);
  const long kb1 = fit.k_bar(Np) + 1;
  using boost::multiprecision::pow;
  const Real g2 = (1 - pow(fit.r2, kb1)) / (1 - fit.r2);
  const Real r12 = fit.r1 * fit.r2;
  const Real g12 = (1 - pow(r12, kb1)) / (1 - r12);
  const Real g1 = (1 - pow(fit.r1, Np)) / (1 - fit.r1);
  Costs c;
  c.J = b * np / (2 * (np + b)) * (fit.c2 * g2 + fit.theta_c_sq);
  c.E = b * b * fit.c1 * (fit.c2 * g12 + fit.theta_c_sq / np * g1);
  c.D = np * (fit.c2 * g2 + fit.theta_c_sq);
  return c;
}

}  // namespace ensctl

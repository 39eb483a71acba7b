#pragma once

#include "ensctl/control/costs.hpp"

namespace ensctl {

/// Raised when a deviation target cannot be reached for any b.
class DeviationRangeError : public NumericalError {
 public:
  DeviationRangeError(const std::string& what, Real lo, Real hi)
      : NumericalError(what), lo_(std::move(lo)), hi_(std::move(hi)) {}
  [[nodiscard]] const Real& lo() const noexcept { return lo_; }
  [[nodiscard]] const Real& hi() const noexcept { return hi_; }

 private:
  Real lo_;
  Real hi_;
};

struct BisectionOptions {
  Real tol = Real("1e-16");
  Real b_lo = pow2(-20);
  Real b_hi = pow2(20);
  int max_doublings = 4000;
  int max_iterations = 20000;
};

struct BisectionResult {
  Real b;
  Real deviation_per_output;  // D(b) / (Np)
  int iterations = 0;
};

/// D(b) / (Np) from the spectral sum, written in b so that no 1 - alpha is
/// formed: D = sum theta_k^2 / (1 + b mu_k / Np)^2.
inline Real deviation_per_output(const RealVector& mu, const RealVector& theta_sq, const Real& b) {
  const Real np = Real(mu.size());
  Real d = 0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const Real den = 1 + b * mu[k] / np;
    d += theta_sq[k] / (den * den);
  }
  return d / np;
}

/// Finds b with |D(b)/(Np) - target| <= tol by bisection in log b. D is
/// decreasing in b, from ||beta||^2/(Np) at b = 0 to the mass of beta on the
/// numerically null eigenvectors as b grows without bound.
inline BisectionResult bisect_b_for_deviation(const RealVector& mu, const RealVector& theta_sq, const Real& target,
                                              const PrecisionContext& ctx, const BisectionOptions& opt = {}) {
  if (mu.empty() || mu.size() != theta_sq.size()) throw ValidationError("bisection: empty or inconsistent spectrum");
  const Real np = Real(mu.size());
  Real d0 = 0, dinf = 0;
  const Real null_level = ctx.psd_tol * std::max(mu.front(), Real(0));
  for (std::size_t k = 0; k < mu.size(); ++k) {
    d0 += theta_sq[k];
    if (mu[k] <= null_level) dinf += theta_sq[k];
  }
  d0 /= np;
  dinf /= np;
  if (!(target > dinf && target < d0)) {
    throw DeviationRangeError("deviation target " + to_string(target, 17) + " outside achievable range (" +
                                  to_string(dinf, 17) + ", " + to_string(d0, 17) + ")",
                              dinf, d0);
  }
  auto f = [&](const Real& b) { return deviation_per_output(mu, theta_sq, b) - target; };
  Real lo = opt.b_lo, hi = opt.b_hi;
  for (int i = 0; f(lo) < 0; ++i) {
    if (i == opt.max_doublings) throw DeviationRangeError("bisection: lower bracket not found", dinf, d0);
    lo /= 2;
  }
  for (int i = 0; f(hi) > 0; ++i) {
    if (i == opt.max_doublings) throw DeviationRangeError("bisection: upper bracket not found", dinf, d0);
    hi *= 2;
  }
  BisectionResult out;
  for (out.iterations = 1; out.iterations <= opt.max_iterations; ++out.iterations) {
    const Real mid = boost::multiprecision::sqrt(lo * hi);
    const Real v = f(mid);
    if (boost::multiprecision::abs(v) <= opt.tol) {
      out.b = mid;
      out.deviation_per_output = v + target;
      return out;
    }
    (v > 0 ? lo : hi) = mid;
  }
  throw NumericalError("bisection did not reach tolerance " + to_string(opt.tol, 6));
}

inline BisectionResult bisect_b_for_deviation(const Cocg& cocg, const ManeuverVector& beta, const Real& target,
                                              const PrecisionContext& ctx, const BisectionOptions& opt = {}) {
  detail::check_sizes(cocg, beta);
  return bisect_b_for_deviation(cocg.eigenvalues, maneuver_projections_sq(cocg, beta), target, ctx, opt);
}

}  // namespace ensctl

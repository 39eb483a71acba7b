#pragma once

#include <vector>

#include "ensctl/gramian/maneuver.hpp"
#include "ensctl/linalg/cholesky.hpp"

namespace ensctl {

/// alpha = Np / (Np + b). b = 0 gives alpha = 1 (no control effort).
inline Real alpha_of_N(std::size_t N, std::size_t p, const Real& b) {
  if (b < 0) throw ValidationError("b must be nonnegative, got " + to_string(b, 6));
  const Real np = Real(N * p);
  return np / (np + b);
}

struct Costs {
  Real J;
  Real E;
  Real D;
};

struct ControlSolution {
  Real alpha;
  Real b;
  RealVector gamma;
  std::vector<RealVector> accuracies;  // gamma_j, one block of length p per realization
  Real J;
  Real E;
  Real D;

  [[nodiscard]] Costs costs() const { return {J, E, D}; }
};

namespace detail {

inline void check_alpha(const Real& alpha) {
  if (!(alpha >= 0) || alpha > 1) {
    throw ValidationError("alpha must lie in [0, 1], got " + to_string(alpha, 6));
  }
}

inline void check_sizes(const Cocg& cocg, const ManeuverVector& beta) {
  if (beta.beta.size() != cocg.size()) throw ValidationError("maneuver vector length does not match the Gramian");
}

/// U(alpha) = alpha I + (1 - alpha) W.
inline RealMatrix weighted_gramian(const Cocg& cocg, const Real& alpha) {
  RealMatrix u = scaled(cocg.matrix, 1 - alpha);
  for (std::size_t i = 0; i < u.rows(); ++i) u(i, i) += alpha;
  return u;
}

inline Cholesky factor_weighted(const RealMatrix& u, const Real& alpha) {
  try {
    return Cholesky(u);
  } catch (const NumericalError& e) {
    if (alpha == 0) throw NumericalError(std::string("constrained problem singular: ") + e.what());
    throw;
  }
}

/// Normwise backward error of U z = rhs.
inline void check_residual(const RealMatrix& u, const RealVector& z, const RealVector& rhs,
                           const PrecisionContext& ctx) {
  RealVector r = u * z;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= rhs[i];
  const Real denom = norm1(u) * max_abs(z) + max_abs(rhs);
  if (denom > 0 && max_abs(r) > ctx.residual_tol() * denom) {
    throw NumericalError("gamma solve residual " + to_string(max_abs(r) / denom, 6) + " exceeds tolerance");
  }
}

inline std::vector<RealVector> split_blocks(const RealVector& v, std::size_t N, std::size_t p) {
  std::vector<RealVector> out(N, RealVector(p));
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t r = 0; r < p; ++r) out[j][r] = v[j * p + r];
  return out;
}

}  // namespace detail

/// Solves (alpha I + (1 - alpha) W) gamma = alpha beta.
inline RealVector solve_gamma(const Cocg& cocg, const ManeuverVector& beta, const Real& alpha,
                              const PrecisionContext& ctx) {
  detail::check_alpha(alpha);
  detail::check_sizes(cocg, beta);
  if (alpha == 1) return beta.beta;
  const RealMatrix u = detail::weighted_gramian(cocg, alpha);
  RealVector rhs = beta.beta;
  for (auto& v : rhs) v *= alpha;
  RealVector gamma = detail::factor_weighted(u, alpha).solve(rhs);
  detail::check_residual(u, gamma, rhs, ctx);
  return gamma;
}

/// Costs as quadratic forms in U^-1 beta, each through one Cholesky solve:
///   J = alpha (1 - alpha) / 2 * beta^T z
///   E = (1 - alpha)^2 * z^T W z
///   D = alpha^2 * z^T z,          with U z = beta.
inline ControlSolution solve_control(const Cocg& cocg, const ManeuverVector& beta, const Real& alpha,
                                     const PrecisionContext& ctx) {
  detail::check_alpha(alpha);
  detail::check_sizes(cocg, beta);
  ControlSolution out;
  out.alpha = alpha;
  const Real np = Real(cocg.size());
  out.b = alpha == 0 ? Real(0) : np * (1 - alpha) / alpha;
  RealVector z;
  if (alpha == 1) {
    z = beta.beta;
  } else {
    const RealMatrix u = detail::weighted_gramian(cocg, alpha);
    z = detail::factor_weighted(u, alpha).solve(beta.beta);
    detail::check_residual(u, z, beta.beta, ctx);
  }
  const Real bz = dot(beta.beta, z);
  const Real zz = dot(z, z);
  const RealVector wz = cocg.matrix * z;
  out.J = alpha * (1 - alpha) / 2 * bz;
  out.E = (1 - alpha) * (1 - alpha) * dot(z, wz);
  out.D = alpha * alpha * zz;
  out.gamma = z;
  for (auto& v : out.gamma) v *= alpha;
  out.accuracies = detail::split_blocks(out.gamma, cocg.N, cocg.p);
  return out;
}

inline ControlSolution solve_control_for_b(const Cocg& cocg, const ManeuverVector& beta, const Real& b,
                                           const PrecisionContext& ctx) {
  ControlSolution s = solve_control(cocg, beta, alpha_of_N(cocg.N, cocg.p, b), ctx);
  s.b = b;
  return s;
}

inline Costs costs_quadratic(const Cocg& cocg, const ManeuverVector& beta, const Real& alpha,
                             const PrecisionContext& ctx) {
  return solve_control(cocg, beta, alpha, ctx).costs();
}

/// The same costs as sums over the Gramian spectrum, with
/// nu_k = alpha + (1 - alpha) mu_k.
inline Costs costs_spectral(const RealVector& mu, const RealVector& theta_sq, const Real& alpha) {
  detail::check_alpha(alpha);
  if (mu.size() != theta_sq.size()) throw ValidationError("spectrum and projections differ in length");
  Real sj = 0, se = 0, sd = 0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const Real nu = alpha + (1 - alpha) * mu[k];
    sj += theta_sq[k] / nu;
    se += theta_sq[k] * mu[k] / (nu * nu);
    sd += theta_sq[k] / (nu * nu);
  }
  return {alpha * (1 - alpha) / 2 * sj, (1 - alpha) * (1 - alpha) * se, alpha * alpha * sd};
}

inline Costs costs_spectral(const Cocg& cocg, const ManeuverVector& beta, const Real& alpha) {
  detail::check_sizes(cocg, beta);
  return costs_spectral(cocg.eigenvalues, maneuver_projections_sq(cocg, beta), alpha);
}

}  // namespace ensctl

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ensctl/ensemble/sampling.hpp"
#include "ensctl/linalg/lu.hpp"

namespace ensctl {

/// x' = f(x, u; phi) with uncertain parameters phi.
struct NonlinearModel {
  using Rhs = std::function<RealVector(const RealVector& x, const RealVector& u, const RealVector& phi)>;
  using Jacobian = std::function<RealMatrix(const RealVector& x, const RealVector& u, const RealVector& phi)>;

  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<WeightDistribution> parameters;
  Rhs rhs;
  std::optional<Jacobian> jacobian_x;
  std::optional<Jacobian> jacobian_u;
};

struct Linearization {
  RealMatrix A;
  RealMatrix B;
  RealVector x_bar;
};

namespace detail {

inline Real inf_norm(const RealVector& v) { return max_abs(std::span<const Real>(v)); }

/// Central differences of f with respect to x (wrt_x) or u.
inline RealMatrix fd_jacobian(const NonlinearModel& model, const RealVector& x, const RealVector& u,
                              const RealVector& phi, bool wrt_x, const PrecisionContext& ctx) {
  const Real h0 = pow2(-static_cast<long>(ctx.mantissa_bits) / 3);
  const std::size_t cols = wrt_x ? model.n : model.m;
  RealMatrix jac(model.n, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    RealVector xp = x, xm = x, up = u, um = u;
    Real& vp = wrt_x ? xp[c] : up[c];
    Real& vm = wrt_x ? xm[c] : um[c];
    const Real h = h0 * std::max(Real(1), boost::multiprecision::abs(vp));
    vp += h;
    vm -= h;
    const RealVector fp = model.rhs(xp, up, phi);
    const RealVector fm = model.rhs(xm, um, phi);
    for (std::size_t r = 0; r < model.n; ++r) jac(r, c) = (fp[r] - fm[r]) / (2 * h);
  }
  return jac;
}

}  // namespace detail

inline RealMatrix jacobian_x(const NonlinearModel& model, const RealVector& x, const RealVector& u,
                             const RealVector& phi, const PrecisionContext& ctx) {
  if (model.jacobian_x) return (*model.jacobian_x)(x, u, phi);
  return detail::fd_jacobian(model, x, u, phi, true, ctx);
}

inline RealMatrix jacobian_u(const NonlinearModel& model, const RealVector& x, const RealVector& u,
                             const RealVector& phi, const PrecisionContext& ctx) {
  if (model.jacobian_u) return (*model.jacobian_u)(x, u, phi);
  return detail::fd_jacobian(model, x, u, phi, false, ctx);
}

/// Newton's method to a fixed point f(x, u_bar; phi) = 0, then the
/// Jacobians there. The fixed point must be asymptotically stable.
inline Linearization linearize_at_fixed_point(const NonlinearModel& model, const RealVector& phi,
                                              const RealVector& u_bar, RealVector guess,
                                              const PrecisionContext& ctx) {
  if (guess.size() != model.n || u_bar.size() != model.m || phi.size() != model.parameters.size())
    throw ValidationError("linearize: dimension mismatch");
  const Real tol("1e-30");
  RealVector x = std::move(guess);
  RealVector f = model.rhs(x, u_bar, phi);
  int iter = 0;
  for (; iter < 200 && !(detail::inf_norm(f) <= tol); ++iter) {
    RealMatrix jac = jacobian_x(model, x, u_bar, phi, ctx);
    RealVector neg_f = f;
    for (auto& v : neg_f) v = -v;
    RealVector step;
    try {
      step = LuFactorization<Real>(jac, ctx.eig_tol, "singular Jacobian").solve(neg_f);
    } catch (const NumericalError&) {
      throw NumericalError("no fixed point found: singular Jacobian, last residual " +
                           to_string(detail::inf_norm(f), 6));
    }
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += step[i];
    f = model.rhs(x, u_bar, phi);
    if (!boost::multiprecision::isfinite(detail::inf_norm(f))) break;
  }
  const Real resid = detail::inf_norm(f);
  if (!(resid <= tol)) {
    throw NumericalError("no fixed point found: last residual " + to_string(resid, 6));
  }
  Linearization out{jacobian_x(model, x, u_bar, phi, ctx), jacobian_u(model, x, u_bar, phi, ctx), x};
  if (!is_hurwitz(out.A, ctx)) throw NumericalError("fixed point not stable");
  return out;
}

/// Five-state smooth cascade with one input (entering x1) and two uncertain
/// parameters, both U(0.1, 0.6). Stable fixed point near 0.5 for the whole
/// parameter box.
inline NonlinearModel demo_nonlinear_model() {
  NonlinearModel model;
  model.n = 5;
  model.m = 1;
  model.parameters = {WeightDistribution::uniform(0.1, 0.6), WeightDistribution::uniform(0.1, 0.6)};
  model.rhs = [](const RealVector& x, const RealVector& u, const RealVector& phi) {
    const Real& energy = phi[0];
    const Real& nutrient = phi[1];
    RealVector f(5);
    f[0] = u[0] + energy - x[0] - x[0] * x[4];
    f[1] = x[0] * x[0] / (Real("0.25") + x[0] * x[0]) - x[1] + Real("0.1") * nutrient;
    f[2] = nutrient * x[1] - x[2] - Real("0.5") * x[2] * x[0] + Real("0.2");
    f[3] = x[2] / (Real("0.5") + x[2]) - Real("0.8") * x[3];
    f[4] = x[3] + Real("0.3") * x[1] - x[4] - Real("0.2") * x[4] * x[4] * x[4];
    return f;
  };
  return model;
}

/// Samples phi N times, linearizes each at its fixed point and packages the
/// Jacobians as a realization set. B must come out identical across samples.
inline RealizationSet sample_linearized_realizations(
    const NonlinearModel& model, std::size_t N, std::uint64_t seed, const RealVector& guess,
    const std::vector<std::size_t>& targets, const RealVector& y_f, Horizon horizon,
    const PrecisionContext& ctx, std::vector<RealVector>* fixed_points = nullptr) {
  if (N < 1) throw ValidationError("N must be >= 1");
  Rng rng(seed);
  RealizationSet out;
  const RealVector u_bar(model.m, Real(0));
  for (std::size_t j = 0; j < N; ++j) {
    RealVector phi;
    for (const auto& d : model.parameters) phi.emplace_back(sample_weight(d, rng));
    Linearization lin = linearize_at_fixed_point(model, phi, u_bar, guess, ctx);
    if (j == 0) {
      out.B = lin.B;
    } else if (max_abs(lin.B - out.B) > ctx.residual_tol()) {
      throw NumericalError("linearized input matrix differs across parameter samples");
    }
    out.matrices.push_back(std::move(lin.A));
    if (fixed_points) fixed_points->push_back(std::move(lin.x_bar));
  }
  out.C = output_matrix(model.n, targets);
  if (y_f.size() != targets.size()) throw ValidationError("y_f must have one entry per target");
  out.x0 = RealVector(model.n, Real(0));
  out.y_f = y_f;
  out.horizon = std::move(horizon);
  out.seed = seed;
  return out;
}

}  // namespace ensctl

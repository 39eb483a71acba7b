#pragma once

#include <vector>

#include "ensctl/control/costs.hpp"
#include "ensctl/ensemble/sampling.hpp"
#include "ensctl/linalg/expm.hpp"

namespace ensctl {

/// Uniform grid t_i = i t_f / intervals, i = 0..intervals.
struct TimeGrid {
  Real t_f;
  std::size_t intervals = 4096;

  void validate() const {
    if (!(t_f > 0)) throw ValidationError("time grid: t_f must be positive");
    if (intervals < 8 || intervals % 4 != 0)
      throw ValidationError("time grid: interval count must be a multiple of 4 and at least 8");
  }
  [[nodiscard]] Real step() const { return t_f / intervals; }
  [[nodiscard]] Real time(std::size_t i) const { return t_f * i / intervals; }
};

struct InputSignal {
  TimeGrid grid;
  std::vector<RealVector> samples;  // u(t_i), each of length m
};

/// Horizon for trajectory work: the configured t_f, or for infinite-horizon
/// sets 50 / |max_j max Re lambda(A_j)|, where e^{A t_f} is negligible.
inline Real trajectory_horizon(const RealizationSet& set, const PrecisionContext& ctx) {
  if (!set.horizon.is_infinite()) return set.horizon.t_f();
  Real slowest = 0;
  bool first = true;
  for (const auto& a : set.matrices) {
    const Real s = spectral_abscissa(a, ctx);
    if (first || s > slowest) slowest = s;
    first = false;
  }
  if (!(slowest < 0)) throw NumericalError("trajectory horizon needs Hurwitz realizations");
  return Real(50) / boost::multiprecision::abs(slowest);
}

/// u(t) = -((1 - alpha) / alpha) sum_j B^T e^{A_j^T (t_f - t)} C^T gamma_j.
inline InputSignal synthesize_input(const RealizationSet& set, const ControlSolution& sol, const TimeGrid& grid,
                                    const PrecisionContext& ctx) {
  grid.validate();
  const std::size_t m = set.m();
  InputSignal out{grid, std::vector<RealVector>(grid.intervals + 1, RealVector(m, Real(0)))};
  if (sol.alpha == 1) return out;
  if (!(sol.alpha > 0)) throw ValidationError("input synthesis needs alpha > 0");
  if (sol.accuracies.size() != set.N()) throw ValidationError("solution does not match the realization set");
  const Real coef = -(1 - sol.alpha) / sol.alpha;
  const RealMatrix ct = set.C.transpose();
  const RealMatrix bt = set.B.transpose();
  for (std::size_t j = 0; j < set.N(); ++j) {
    const auto decomp = real_schur_eigen(set.matrices[j].transpose(), ctx, "transpose of realization " + std::to_string(j));
    const ExpmAction costate(decomp, ct * sol.accuracies[j]);
    for (std::size_t i = 0; i <= grid.intervals; ++i) {
      const RealVector u = bt * costate.at(grid.t_f - grid.time(i), ctx);
      for (std::size_t r = 0; r < m; ++r) out.samples[i][r] += coef * u[r];
    }
  }
  return out;
}

/// Composite Simpson quadrature of ||u(t)||^2.
inline Real input_energy(const InputSignal& u) {
  const std::size_t n = u.grid.intervals;
  Real s = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    const Real w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    s += w * dot(u.samples[i], u.samples[i]);
  }
  return s * u.grid.step() / 3;
}

struct SimulationResult {
  std::vector<RealVector> outputs;  // y_j(t_f)
  Real deviation;                   // sum_j ||y_j(t_f) - y_f||^2
  Real gamma_mismatch;              // max_j ||(y_j - y_f) - gamma_j|| / ||gamma_j||
};

namespace detail {

/// Classical RK4 for x' = A x + B u with step `stride` grid intervals; the
/// stage times are grid samples.
inline RealVector rk4_on_grid(const RealMatrix& a, const RealMatrix& b, RealVector x, const InputSignal& u,
                              std::size_t stride) {
  const Real h = u.grid.step() * stride;
  const std::size_t half = stride / 2;
  auto f = [&](const RealVector& y, const RealVector& uu) {
    RealVector dy = a * y;
    const RealVector bu = b * uu;
    for (std::size_t i = 0; i < dy.size(); ++i) dy[i] += bu[i];
    return dy;
  };
  auto shifted = [](RealVector y, const RealVector& k, const Real& s) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * k[i];
    return y;
  };
  for (std::size_t i = 0; i + stride <= u.grid.intervals; i += stride) {
    const auto k1 = f(x, u.samples[i]);
    const auto k2 = f(shifted(x, k1, h / 2), u.samples[i + half]);
    const auto k3 = f(shifted(x, k2, h / 2), u.samples[i + half]);
    const auto k4 = f(shifted(x, k3, h), u.samples[i + stride]);
    for (std::size_t r = 0; r < x.size(); ++r) x[r] += h / 6 * (k1[r] + 2 * k2[r] + 2 * k3[r] + k4[r]);
  }
  return x;
}

}  // namespace detail

/// Integrates every realization under the sampled input with RK4 at two step
/// sizes and returns the Richardson combination (fifth order). If the error
/// estimate (fine - coarse) / 15 exceeds `halving_tol` relative to the state
/// scale, the run is reported as an integrator failure.
inline SimulationResult simulate_forward(const RealizationSet& set, const InputSignal& u,
                                         const std::vector<RealVector>& gammas = {},
                                         const Real& halving_tol = Real("1e-7")) {
  u.grid.validate();
  if (u.samples.size() != u.grid.intervals + 1) throw ValidationError("input samples do not match the grid");
  SimulationResult out;
  out.deviation = 0;
  out.gamma_mismatch = 0;
  for (std::size_t j = 0; j < set.N(); ++j) {
    RealVector fine = detail::rk4_on_grid(set.matrices[j], set.B, set.x0, u, 2);
    const RealVector coarse = detail::rk4_on_grid(set.matrices[j], set.B, set.x0, u, 4);
    Real estimate = 0;
    for (std::size_t i = 0; i < fine.size(); ++i) {
      const Real corr = (fine[i] - coarse[i]) / 15;
      estimate = std::max(estimate, boost::multiprecision::abs(corr));
      fine[i] += corr;
    }
    if (estimate > halving_tol * std::max(Real(1), max_abs(fine))) {
      throw NumericalError("integrator: step-halving check failed for realization " + std::to_string(j) +
                           " (error estimate " + to_string(estimate, 6) + ")");
    }
    RealVector y = set.C * fine;
    RealVector err(y.size());
    for (std::size_t r = 0; r < y.size(); ++r) err[r] = y[r] - set.y_f[r];
    out.deviation += dot(err, err);
    if (j < gammas.size()) {
      RealVector d = err;
      for (std::size_t r = 0; r < d.size(); ++r) d[r] -= gammas[j][r];
      const Real g = norm2(gammas[j]);
      const Real rel = g > 0 ? norm2(d) / g : norm2(d);
      out.gamma_mismatch = std::max(out.gamma_mismatch, rel);
    }
    out.outputs.push_back(std::move(y));
  }
  return out;
}

}  // namespace ensctl

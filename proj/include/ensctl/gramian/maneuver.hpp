#pragma once

#include "ensctl/gramian/cocg.hpp"
#include "ensctl/linalg/expm.hpp"

namespace ensctl {

/// Maneuver vector beta = (beta_0, ..., beta_{N-1}), beta_j = C e^{A_j t_f} x0 - y_f.
struct ManeuverVector {
  RealVector beta;
  RealVector block_norms;
};

inline ManeuverVector compute_maneuvers(const RealizationSet& set, const std::vector<PreparedSystem>& systems,
                                        const PrecisionContext& ctx) {
  const std::size_t p = set.p();
  ManeuverVector out;
  out.beta.resize(set.N() * p);
  out.block_norms.resize(set.N());
  for (std::size_t j = 0; j < set.N(); ++j) {
    RealVector free(p, Real(0));
    if (!set.horizon.is_infinite()) {
      free = set.C * expm_action(systems[j].decomp, set.horizon.t_f(), set.x0, ctx);
    }
    Real sq = 0;
    for (std::size_t r = 0; r < p; ++r) {
      out.beta[j * p + r] = free[r] - set.y_f[r];
      sq += out.beta[j * p + r] * out.beta[j * p + r];
    }
    out.block_norms[j] = boost::multiprecision::sqrt(sq);
  }
  return out;
}

inline ManeuverVector compute_maneuvers(const RealizationSet& set, const PrecisionContext& ctx) {
  if (set.horizon.is_infinite()) return compute_maneuvers(set, {}, ctx);
  return compute_maneuvers(set, prepare_systems(set, ctx), ctx);
}

/// theta_k^2 = (beta . xi_k)^2 for every eigenvector of the Gramian.
inline RealVector maneuver_projections_sq(const Cocg& cocg, const ManeuverVector& m) {
  const std::size_t n = cocg.size();
  RealVector out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Real t = 0;
    for (std::size_t i = 0; i < n; ++i) t += m.beta[i] * cocg.eigenvectors(i, k);
    out[k] = t * t;
  }
  return out;
}

}  // namespace ensctl

#pragma once

// Test-only reference computations, independent of the library's spectral
// paths.

#include "ensctl/linalg.hpp"

namespace ensctl::testing {

/// Integrates W' = Aj W + W Ak^T + Q, W(0) = 0 up to t with fixed steps of a
/// truncated-Taylor one-step scheme of order `order` (for a linear
/// autonomous ODE this is what any explicit RK method of that order
/// produces).
inline RealMatrix integrate_differential_sylvester(const RealMatrix& aj, const RealMatrix& ak,
                                                   const RealMatrix& q, const Real& t, int steps,
                                                   int order = 40) {
  const std::size_t n = aj.rows();
  const RealMatrix akt = ak.transpose();
  const Real h = t / steps;
  RealMatrix w(n, n);
  for (int s = 0; s < steps; ++s) {
    // Derivatives: D0 = W, D1 = L(W) + Q, D_{k+1} = L(D_k).
    RealMatrix term = w;
    RealMatrix next = w;
    for (int k = 1; k <= order; ++k) {
      RealMatrix d = aj * term + term * akt;
      if (k == 1) d = d + q;
      term = scaled(d, h / k);
      next = next + term;
    }
    w = next;
  }
  return w;
}

}  // namespace ensctl::testing

#pragma once

#include <string>
#include <vector>

#include "ensctl/ensemble/spec.hpp"
#include "ensctl/linalg/schur_eigen.hpp"
#include "ensctl/parallel.hpp"

namespace ensctl {

/// One realization in its eigenbasis, with V^-1 B solved once and reused by
/// every pair that involves it.
struct PreparedSystem {
  EigenDecomposition decomp;
  ComplexMatrix vinv_b;  // V^-1 B, n x m
};

inline PreparedSystem prepare_system(const RealMatrix& a, const RealMatrix& b,
                                     const PrecisionContext& ctx, const std::string& label) {
  PreparedSystem out{real_schur_eigen(a, ctx, label), {}};
  out.vinv_b = complex_lu_solve(out.decomp, to_complex(b));
  return out;
}

inline std::vector<PreparedSystem> prepare_systems(const RealizationSet& set, const PrecisionContext& ctx,
                                                   std::size_t jobs = 1) {
  std::vector<PreparedSystem> out(set.N());
  parallel_for(set.N(), jobs, [&](std::size_t j) {
    out[j] = prepare_system(set.matrices[j], set.B, ctx, "realization " + std::to_string(j));
  });
  return out;
}

namespace detail {

/// (e^{s t} - 1) / s, by series when |s t| is small.
inline Complex expm1_ratio(const Complex& s, const Real& t, const Real& eps) {
  const Complex st = s * Complex(t);
  if (abs(st) < Real("0.5")) {
    // sum_{k>=1} s^{k-1} t^k / k!
    Complex term(t);
    Complex sum = term;
    for (int k = 2; k < 10000; ++k) {
      term = term * st / Complex(Real(k));
      sum += term;
      if (abs(term) <= eps * abs(sum)) break;
    }
    return sum;
  }
  return (exp(st) - Complex(1)) / s;
}

}  // namespace detail

/// Block W_{j,k} of the ensemble Gramian. With d_a, d_b the eigenvalues of
/// A_j, A_k and M = (V_j^-1 B)(V_k^-1 B)^T:
///
///   W = V_j (Y o M) V_k^T,
///   Y_ab = -1 / (d_a + d_b)                     (infinite horizon)
///   Y_ab = (e^{(d_a + d_b) t_f} - 1)/(d_a + d_b)   (finite t_f)
///
/// so that A_j W + W A_k^T + B B^T = 0 in the infinite case, and W solves
/// W' = A_j W + W A_k^T + B B^T, W(0) = 0 at t_f otherwise.
inline RealMatrix solve_sylvester_pair(const PreparedSystem& sj, const PreparedSystem& sk,
                                       const Horizon& horizon, const PrecisionContext& ctx) {
  const std::size_t n = sj.decomp.size();
  const std::size_t m = sj.vinv_b.cols();
  ComplexMatrix z(n, n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      Complex mab;
      for (std::size_t c = 0; c < m; ++c) mab += sj.vinv_b(a, c) * sk.vinv_b(b, c);
      const Complex s = sj.decomp.values[a] + sk.decomp.values[b];
      Complex y;
      if (horizon.is_infinite()) {
        if (!(s.re < 0)) {
          throw NumericalError("Sylvester: eigenvalue sum with nonnegative real part in infinite horizon");
        }
        if (abs(s) < ctx.eig_tol) throw NumericalError("Sylvester resonance");
        y = -(Complex(1) / s);
      } else {
        y = detail::expm1_ratio(s, horizon.t_f(), ctx.eig_tol);
      }
      z(a, b) = y * mab;
    }
  // W = V_j Z V_k^T
  ComplexMatrix vz = sj.decomp.vectors * z;
  RealMatrix w(n, n);
  Real imag = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < n; ++l) {
      Complex s;
      for (std::size_t b = 0; b < n; ++b) s += vz(i, b) * sk.decomp.vectors(l, b);
      w(i, l) = s.re;
      imag = std::max(imag, boost::multiprecision::abs(s.im));
    }
  if (imag > ctx.imag_tol() * max_abs(w)) {
    throw NumericalError("Sylvester: imaginary residue " + to_string(imag, 6) + " exceeds tolerance");
  }
  return w;
}

/// Convenience overload from bare decompositions and B.
inline RealMatrix solve_sylvester_pair(const EigenDecomposition& dj, const EigenDecomposition& dk,
                                       const RealMatrix& b, const Horizon& horizon,
                                       const PrecisionContext& ctx) {
  const ComplexMatrix cb = to_complex(b);
  PreparedSystem sj{dj, complex_lu_solve(dj, cb)};
  PreparedSystem sk{dk, complex_lu_solve(dk, cb)};
  return solve_sylvester_pair(sj, sk, horizon, ctx);
}

/// All blocks W_{j,k}, j <= k, each n x n. Block (k, j) is the transpose.
class PairGramians {
 public:
  PairGramians() = default;
  PairGramians(std::size_t N, std::vector<RealMatrix> upper, Horizon horizon)
      : N_(N), upper_(std::move(upper)), horizon_(std::move(horizon)) {}

  [[nodiscard]] std::size_t N() const noexcept { return N_; }
  [[nodiscard]] const Horizon& horizon() const noexcept { return horizon_; }

  /// W_{j,k}; computed for j <= k, transposed otherwise.
  [[nodiscard]] RealMatrix block(std::size_t j, std::size_t k) const {
    if (j <= k) return upper_[index(j, k)];
    return upper_[index(k, j)].transpose();
  }
  [[nodiscard]] const RealMatrix& upper_block(std::size_t j, std::size_t k) const {
    return upper_[index(j, k)];
  }

  static std::size_t index(std::size_t j, std::size_t k) { return k * (k + 1) / 2 + j; }

 private:
  std::size_t N_ = 0;
  std::vector<RealMatrix> upper_;
  Horizon horizon_ = Horizon::infinite();
};

/// Solves the N(N+1)/2 distinct pairs. Kernel failures are annotated with
/// the pair indices.
inline PairGramians compute_pair_gramians(const std::vector<PreparedSystem>& systems,
                                          const Horizon& horizon, const PrecisionContext& ctx,
                                          std::size_t jobs = 1) {
  const std::size_t N = systems.size();
  std::vector<RealMatrix> upper(N * (N + 1) / 2);
  parallel_for(upper.size(), jobs, [&](std::size_t idx) {
    std::size_t k = 0;
    while ((k + 1) * (k + 2) / 2 <= idx) ++k;
    const std::size_t j = idx - k * (k + 1) / 2;
    try {
      RealMatrix w = solve_sylvester_pair(systems[j], systems[k], horizon, ctx);
      if (j == k) {
        for (std::size_t r = 0; r < w.rows(); ++r)
          for (std::size_t c = 0; c < r; ++c) w(r, c) = w(c, r) = (w(r, c) + w(c, r)) / 2;
      }
      upper[idx] = std::move(w);
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " [pair (" + std::to_string(j) + ", " +
                           std::to_string(k) + ")]");
    }
  });
  return PairGramians(N, std::move(upper), horizon);
}

}  // namespace ensctl

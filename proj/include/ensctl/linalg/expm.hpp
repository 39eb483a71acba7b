#pragma once

#include "ensctl/linalg/schur_eigen.hpp"

namespace ensctl {

/// t -> e^{A t} x0 through a cached diagonalization, V e^{D t} V^-1 x0, with
/// V^-1 x0 solved once. The imaginary residue of each recombination must stay
/// below `imag_tol()` relative to the result scale.
class ExpmAction {
 public:
  ExpmAction(const EigenDecomposition& decomp, const RealVector& x0) : decomp_(&decomp) {
    const std::size_t n = decomp.size();
    if (x0.size() != n) throw ValidationError("expm_action: vector length mismatch");
    ComplexVector rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = Complex(x0[i]);
    coeffs_ = decomp.lu_of_vectors.solve(rhs);
  }

  [[nodiscard]] RealVector at(const Real& t, const PrecisionContext& ctx) const {
    const auto& d = *decomp_;
    const std::size_t n = d.size();
    ComplexVector c = coeffs_;
    for (std::size_t a = 0; a < n; ++a) c[a] *= exp(d.values[a] * Complex(t));
    RealVector out(n);
    Real imag = 0;
    Real scale = 1;
    for (std::size_t i = 0; i < n; ++i) {
      Complex s;
      for (std::size_t a = 0; a < n; ++a) s += d.vectors(i, a) * c[a];
      out[i] = s.re;
      imag = std::max(imag, boost::multiprecision::abs(s.im));
      scale = std::max(scale, boost::multiprecision::abs(s.re));
    }
    if (imag > ctx.imag_tol() * scale) {
      throw NumericalError("expm_action: imaginary residue " + to_string(imag, 6));
    }
    return out;
  }

 private:
  const EigenDecomposition* decomp_;
  ComplexVector coeffs_;
};

inline RealVector expm_action(const EigenDecomposition& decomp, const Real& t,
                              const RealVector& x0, const PrecisionContext& ctx) {
  return ExpmAction(decomp, x0).at(t, ctx);
}

}  // namespace ensctl

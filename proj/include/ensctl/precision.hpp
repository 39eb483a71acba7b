#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <cmath>
#include <string>

#include "ensctl/error.hpp"

namespace ensctl {

/// Arbitrary-precision real. Expression templates are off so that `auto`
/// and generic helpers behave like ordinary value types.
using Real = boost::multiprecision::number<
    boost::multiprecision::mpfr_float_backend<0>,
    boost::multiprecision::et_off>;

namespace detail {

inline unsigned bits_to_digits10(unsigned bits) {
  return static_cast<unsigned>(std::ceil(bits * 0.30102999566398120));
}

}  // namespace detail

/// Sets the process-wide working precision for newly created Reals.
/// Values created earlier keep their own precision.
inline void set_working_precision(unsigned mantissa_bits) {
  Real::default_precision(detail::bits_to_digits10(mantissa_bits));
}

/// 2^e at the current working precision.
inline Real pow2(long e) { return boost::multiprecision::ldexp(Real(1), e); }

/// Numeric settings shared by every kernel. Immutable once built.
///
///   eig_tol  relative deflation threshold for QR sweeps; its square root
///            bounds the accepted eigenvector condition number.
///   psd_tol  relative level below which an eigenvalue of a PSD matrix is
///            considered numerically zero.
struct PrecisionContext {
  unsigned mantissa_bits = 256;
  Real eig_tol;
  Real psd_tol;

  /// Builds a context and switches the working precision to `bits`.
  static PrecisionContext make(unsigned bits = 256) {
    if (bits < 64) {
      throw ValidationError("mantissa_bits must be >= 64, got " +
                            std::to_string(bits));
    }
    set_working_precision(bits);
    PrecisionContext ctx;
    ctx.mantissa_bits = bits;
    ctx.eig_tol = pow2(-static_cast<long>(bits));
    ctx.psd_tol = pow2(-static_cast<long>(bits) * 3 / 4);
    return ctx;
  }

  /// 10 * 2^(-bits/2): the residual bound every kernel promises.
  [[nodiscard]] Real residual_tol() const {
    return Real(10) * pow2(-static_cast<long>(mantissa_bits) / 2);
  }

  /// 2^(-bits/4): allowed imaginary residue when realifying a result.
  [[nodiscard]] Real imag_tol() const {
    return pow2(-static_cast<long>(mantissa_bits) / 4);
  }

  /// Accepted eigenvector condition number, 1/sqrt(eig_tol).
  [[nodiscard]] Real max_eigvec_condition() const {
    return Real(1) / boost::multiprecision::sqrt(eig_tol);
  }
};

/// Restores the previous working precision on scope exit.
class ScopedPrecision {
 public:
  explicit ScopedPrecision(unsigned bits)
      : saved_(Real::default_precision()), ctx_(PrecisionContext::make(bits)) {}
  ~ScopedPrecision() { Real::default_precision(saved_); }
  ScopedPrecision(const ScopedPrecision&) = delete;
  ScopedPrecision& operator=(const ScopedPrecision&) = delete;

  [[nodiscard]] const PrecisionContext& context() const { return ctx_; }

 private:
  unsigned saved_;
  PrecisionContext ctx_;
};

/// Shortest round-trippable rendering with `digits` significant digits.
inline std::string to_string(const Real& x, int digits = 30) {
  return x.str(digits, std::ios_base::scientific);
}

}  // namespace ensctl

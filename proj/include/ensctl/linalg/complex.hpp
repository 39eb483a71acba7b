#pragma once

#include <utility>

#include "ensctl/precision.hpp"

namespace ensctl {

/// Complex number as a pair of reals. std::complex is unspecified for
/// non-builtin element types, so we carry our own.
template <class R>
struct BasicComplex {
  R re{0};
  R im{0};

  BasicComplex() = default;
  BasicComplex(R r) : re(std::move(r)), im(0) {}  // NOLINT: implicit widening
  BasicComplex(R r, R i) : re(std::move(r)), im(std::move(i)) {}

  BasicComplex& operator+=(const BasicComplex& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  BasicComplex& operator-=(const BasicComplex& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  BasicComplex& operator*=(const BasicComplex& o) {
    R r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = std::move(r);
    return *this;
  }
  BasicComplex& operator/=(const BasicComplex& o) {
    *this = *this / o;
    return *this;
  }

  friend BasicComplex operator+(BasicComplex a, const BasicComplex& b) { return a += b; }
  friend BasicComplex operator-(BasicComplex a, const BasicComplex& b) { return a -= b; }
  friend BasicComplex operator*(BasicComplex a, const BasicComplex& b) { return a *= b; }
  friend BasicComplex operator-(const BasicComplex& a) { return {-a.re, -a.im}; }

  // Smith's algorithm.
  friend BasicComplex operator/(const BasicComplex& a, const BasicComplex& b) {
    using boost::multiprecision::abs;
    if (abs(b.re) >= abs(b.im)) {
      R r = b.im / b.re;
      R d = b.re + b.im * r;
      return {(a.re + a.im * r) / d, (a.im - a.re * r) / d};
    }
    R r = b.re / b.im;
    R d = b.re * r + b.im;
    return {(a.re * r + a.im) / d, (a.im * r - a.re) / d};
  }

  friend bool operator==(const BasicComplex& a, const BasicComplex& b) {
    return a.re == b.re && a.im == b.im;
  }
};

using Complex = BasicComplex<Real>;

inline Complex conj(const Complex& z) { return {z.re, -z.im}; }
inline Real norm_sq(const Complex& z) { return z.re * z.re + z.im * z.im; }
inline Real abs(const Complex& z) { return boost::multiprecision::sqrt(norm_sq(z)); }

inline Complex exp(const Complex& z) {
  Real m = boost::multiprecision::exp(z.re);
  return {m * boost::multiprecision::cos(z.im), m * boost::multiprecision::sin(z.im)};
}

/// |x| for either field; used by pivoting code templated on the element.
inline Real magnitude(const Real& x) { return boost::multiprecision::abs(x); }
inline Real magnitude(const Complex& z) { return abs(z); }

}  // namespace ensctl

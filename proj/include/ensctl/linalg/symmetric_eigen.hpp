#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "ensctl/linalg/matrix.hpp"
#include "ensctl/precision.hpp"

namespace ensctl {

/// Eigenpairs of a real symmetric matrix, values descending, vectors
/// orthonormal and stored column-wise.
struct SymmetricEigen {
  RealVector values;
  RealMatrix vectors;
};

namespace detail {

inline Real hypot2(const Real& a, const Real& b) {
  return boost::multiprecision::sqrt(a * a + b * b);
}

// Householder tridiagonalization (EISPACK tred2). On exit `v` holds the
// accumulated orthogonal transform, `d` the diagonal and `e` the
// subdiagonal in e[1..n-1].
inline void tridiagonalize(RealMatrix& v, RealVector& d, RealVector& e) {
  using boost::multiprecision::abs;
  using boost::multiprecision::sqrt;
  const std::size_t n = v.rows();
  for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);
  for (std::size_t i = n - 1; i > 0; --i) {
    Real scale = 0;
    Real h = 0;
    for (std::size_t k = 0; k < i; ++k) scale += abs(d[k]);
    if (scale == 0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0;
        v(j, i) = 0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      Real f = d[i - 1];
      Real g = sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0;
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (std::size_t k = j + 1; k + 1 <= i; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const Real hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k + 1 <= i; ++k) v(k, j) -= (f * e[k] + g * d[k]);
        d[j] = v(i - 1, j);
        v(i, j) = 0;
      }
    }
    d[i] = h;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1;
    const Real h = d[i + 1];
    if (h != 0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        Real g = 0;
        for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0;
  }
  v(n - 1, n - 1) = 1;
  e[0] = 0;
}

// Implicit QL with Wilkinson-style shifts on the tridiagonal (EISPACK tql2).
inline void tridiagonal_ql(RealMatrix& v, RealVector& d, RealVector& e, const Real& eps) {
  using boost::multiprecision::abs;
  const std::size_t n = v.rows();
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0;
  Real f = 0;
  Real tst1 = 0;
  const int max_iter = 30 * static_cast<int>(std::max<std::size_t>(n, 1));
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, abs(d[l]) + abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        if (++iter > max_iter) {
          throw NumericalError("symmetric eigensolver failed: QL iteration did not converge");
        }
        Real g = d[l];
        Real p = (d[l + 1] - g) / (2 * e[l]);
        Real r = hypot2(p, Real(1));
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const Real dl1 = d[l + 1];
        Real h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;
        p = d[m];
        Real c = 1, c2 = 1, c3 = 1;
        const Real el1 = e[l + 1];
        Real s = 0, s2 = 0;
        for (std::size_t i = m; i-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = hypot2(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (std::size_t k = 0; k < n; ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0;
  }
}

}  // namespace detail

/// Householder tridiagonalization + implicit QL. Input must be symmetric to
/// within 2^(-bits/2) relative; it is symmetrized before reduction.
inline SymmetricEigen symmetric_eigen(const RealMatrix& s, const PrecisionContext& ctx) {
  if (!s.square()) throw ValidationError("symmetric_eigen: matrix must be square");
  const std::size_t n = s.rows();
  SymmetricEigen out;
  if (n == 0) return out;

  const Real scale = max_abs(s);
  const Real asym_tol = pow2(-static_cast<long>(ctx.mantissa_bits) / 2) * scale;
  RealMatrix v(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (boost::multiprecision::abs(s(i, j) - s(j, i)) > asym_tol) {
        throw ValidationError("not symmetric: entry (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
      }
      v(i, j) = (s(i, j) + s(j, i)) / 2;
    }

  RealVector d(n), e(n);
  detail::tridiagonalize(v, d, e);
  detail::tridiagonal_ql(v, d, e, ctx.eig_tol);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] > d[b]; });
  out.values.resize(n);
  out.vectors = RealMatrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.values[k] = d[src];
    // Sign convention: largest-magnitude component positive.
    std::size_t arg = 0;
    Real big = -1;
    for (std::size_t i = 0; i < n; ++i) {
      Real a = boost::multiprecision::abs(v(i, src));
      if (a > big) {
        big = a;
        arg = i;
      }
    }
    const bool flip = v(arg, src) < 0;
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = flip ? Real(-v(i, src)) : v(i, src);
  }
  return out;
}

}  // namespace ensctl

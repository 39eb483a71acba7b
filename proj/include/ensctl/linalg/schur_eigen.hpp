#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "ensctl/linalg/lu.hpp"
#include "ensctl/linalg/matrix.hpp"
#include "ensctl/precision.hpp"

namespace ensctl {

/// A = V * diag(values) * V^-1 with a cached LU of V.
struct EigenDecomposition {
  ComplexVector values;
  ComplexMatrix vectors;
  LuFactorization<Complex> lu_of_vectors;

  [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

namespace detail {

/// Real Schur machinery: Householder reduction to Hessenberg form followed
/// by Francis double-shift QR, keeping the orthogonal accumulator so the
/// eigenvectors can be back-substituted from the quasi-triangular factor.
/// Structure follows the EISPACK orthes/hqr2 pair.
class RealSchur {
 public:
  RealSchur(const RealMatrix& a, const PrecisionContext& ctx, bool want_vectors,
            const std::string& label)
      : n_(a.rows()), h_(a), v_(RealMatrix::identity(a.rows())),
        d_(a.rows()), e_(a.rows()), eps_(ctx.eig_tol), label_(label) {
    reduce_to_hessenberg();
    iterate(want_vectors);
  }

  [[nodiscard]] const RealVector& real_parts() const { return d_; }
  [[nodiscard]] const RealVector& imag_parts() const { return e_; }
  /// Packed real eigenvector columns: a complex pair (j, j+1) stores the
  /// real part in column j and the imaginary part in column j+1.
  [[nodiscard]] const RealMatrix& packed_vectors() const { return v_; }

 private:
  using R = Real;

  void reduce_to_hessenberg() {
    using boost::multiprecision::abs;
    using boost::multiprecision::sqrt;
    if (n_ < 3) return;
    const std::size_t high = n_ - 1;
    RealVector ort(n_);
    for (std::size_t m = 1; m + 1 <= high; ++m) {
      R scale = 0;
      for (std::size_t i = m; i <= high; ++i) scale += abs(h_(i, m - 1));
      if (scale == 0) continue;
      R h = 0;
      for (std::size_t i = high + 1; i-- > m;) {
        ort[i] = h_(i, m - 1) / scale;
        h += ort[i] * ort[i];
      }
      R g = sqrt(h);
      if (ort[m] > 0) g = -g;
      h -= ort[m] * g;
      ort[m] -= g;
      for (std::size_t j = m; j < n_; ++j) {
        R f = 0;
        for (std::size_t i = high + 1; i-- > m;) f += ort[i] * h_(i, j);
        f /= h;
        for (std::size_t i = m; i <= high; ++i) h_(i, j) -= f * ort[i];
      }
      for (std::size_t i = 0; i <= high; ++i) {
        R f = 0;
        for (std::size_t j = high + 1; j-- > m;) f += ort[j] * h_(i, j);
        f /= h;
        for (std::size_t j = m; j <= high; ++j) h_(i, j) -= f * ort[j];
      }
      ort[m] *= scale;
      h_(m, m - 1) = scale * g;
    }
    for (std::size_t m = high - 1; m >= 1; --m) {
      if (h_(m, m - 1) != 0) {
        for (std::size_t i = m + 1; i <= high; ++i) ort[i] = h_(i, m - 1);
        for (std::size_t j = m; j <= high; ++j) {
          R g = 0;
          for (std::size_t i = m; i <= high; ++i) g += ort[i] * v_(i, j);
          g = (g / ort[m]) / h_(m, m - 1);
          for (std::size_t i = m; i <= high; ++i) v_(i, j) += g * ort[i];
        }
      }
      if (m == 1) break;
    }
    // The Householder vectors left below the subdiagonal are not part of H.
    for (std::size_t i = 2; i < n_; ++i)
      for (std::size_t j = 0; j + 1 < i; ++j) h_(i, j) = 0;
  }

  static void cdiv(const R& xr, const R& xi, const R& yr, const R& yi, R& outr, R& outi) {
    Complex q = Complex(xr, xi) / Complex(yr, yi);
    outr = q.re;
    outi = q.im;
  }

  void iterate(bool want_vectors) {
    using boost::multiprecision::abs;
    using boost::multiprecision::sqrt;
    const long nn = static_cast<long>(n_);
    long n = nn - 1;
    const long low = 0;
    const long high = nn - 1;
    R exshift = 0;
    R p = 0, q = 0, r = 0, s = 0, z = 0, t, w, x, y;
    auto H = [this](long i, long j) -> R& { return h_(static_cast<std::size_t>(i), static_cast<std::size_t>(j)); };
    auto V = [this](long i, long j) -> R& { return v_(static_cast<std::size_t>(i), static_cast<std::size_t>(j)); };
    auto& d = d_;
    auto& e = e_;

    R norm = 0;
    for (long i = 0; i < nn; ++i)
      for (long j = std::max(i - 1, 0L); j < nn; ++j) norm += abs(H(i, j));

    const long max_sweeps = 100 * std::max(nn, 1L);
    long total = 0;
    long iter = 0;
    while (n >= low) {
      long l = n;
      while (l > low) {
        s = abs(H(l - 1, l - 1)) + abs(H(l, l));
        if (s == 0) s = norm;
        if (abs(H(l, l - 1)) < eps_ * s) break;
        --l;
      }
      if (l == n) {
        H(n, n) += exshift;
        d[n] = H(n, n);
        e[n] = 0;
        --n;
        iter = 0;
      } else if (l == n - 1) {
        w = H(n, n - 1) * H(n - 1, n);
        p = (H(n - 1, n - 1) - H(n, n)) / 2;
        q = p * p + w;
        z = sqrt(abs(q));
        H(n, n) += exshift;
        H(n - 1, n - 1) += exshift;
        x = H(n, n);
        if (q >= 0) {
          z = p >= 0 ? p + z : p - z;
          d[n - 1] = x + z;
          d[n] = d[n - 1];
          if (z != 0) d[n] = x - w / z;
          e[n - 1] = 0;
          e[n] = 0;
          x = H(n, n - 1);
          s = abs(x) + abs(z);
          p = x / s;
          q = z / s;
          r = sqrt(p * p + q * q);
          p /= r;
          q /= r;
          for (long j = n - 1; j < nn; ++j) {
            z = H(n - 1, j);
            H(n - 1, j) = q * z + p * H(n, j);
            H(n, j) = q * H(n, j) - p * z;
          }
          for (long i = 0; i <= n; ++i) {
            z = H(i, n - 1);
            H(i, n - 1) = q * z + p * H(i, n);
            H(i, n) = q * H(i, n) - p * z;
          }
          for (long i = low; i <= high; ++i) {
            z = V(i, n - 1);
            V(i, n - 1) = q * z + p * V(i, n);
            V(i, n) = q * V(i, n) - p * z;
          }
        } else {
          d[n - 1] = x + p;
          d[n] = x + p;
          e[n - 1] = z;
          e[n] = -z;
        }
        n -= 2;
        iter = 0;
      } else {
        if (++total > max_sweeps) {
          throw NumericalError("eigensolver failed: QR iteration did not converge for " + label_);
        }
        x = H(n, n);
        y = 0;
        w = 0;
        if (l < n) {
          y = H(n - 1, n - 1);
          w = H(n, n - 1) * H(n - 1, n);
        }
        if (iter == 10) {
          exshift += x;
          for (long i = low; i <= n; ++i) H(i, i) -= x;
          s = abs(H(n, n - 1)) + abs(H(n - 1, n - 2));
          x = y = R("0.75") * s;
          w = R("-0.4375") * s * s;
        }
        if (iter == 30) {
          s = (y - x) / 2;
          s = s * s + w;
          if (s > 0) {
            s = sqrt(s);
            if (y < x) s = -s;
            s = x - w / ((y - x) / 2 + s);
            for (long i = low; i <= n; ++i) H(i, i) -= s;
            exshift += s;
            x = y = w = R("0.964");
          }
        }
        ++iter;
        long m = n - 2;
        while (m >= l) {
          z = H(m, m);
          r = x - z;
          s = y - z;
          p = (r * s - w) / H(m + 1, m) + H(m, m + 1);
          q = H(m + 1, m + 1) - z - r - s;
          r = H(m + 2, m + 1);
          s = abs(p) + abs(q) + abs(r);
          p /= s;
          q /= s;
          r /= s;
          if (m == l) break;
          if (abs(H(m, m - 1)) * (abs(q) + abs(r)) <
              eps_ * (abs(p) * (abs(H(m - 1, m - 1)) + abs(z) + abs(H(m + 1, m + 1))))) {
            break;
          }
          --m;
        }
        for (long i = m + 2; i <= n; ++i) {
          H(i, i - 2) = 0;
          if (i > m + 2) H(i, i - 3) = 0;
        }
        for (long k = m; k <= n - 1; ++k) {
          const bool notlast = (k != n - 1);
          if (k != m) {
            p = H(k, k - 1);
            q = H(k + 1, k - 1);
            r = notlast ? H(k + 2, k - 1) : R(0);
            x = abs(p) + abs(q) + abs(r);
            if (x == 0) continue;
            p /= x;
            q /= x;
            r /= x;
          }
          s = sqrt(p * p + q * q + r * r);
          if (p < 0) s = -s;
          if (s != 0) {
            if (k != m) {
              H(k, k - 1) = -s * x;
            } else if (l != m) {
              H(k, k - 1) = -H(k, k - 1);
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (long j = k; j < nn; ++j) {
              p = H(k, j) + q * H(k + 1, j);
              if (notlast) {
                p += r * H(k + 2, j);
                H(k + 2, j) -= p * z;
              }
              H(k, j) -= p * x;
              H(k + 1, j) -= p * y;
            }
            for (long i = 0; i <= std::min(n, k + 3); ++i) {
              p = x * H(i, k) + y * H(i, k + 1);
              if (notlast) {
                p += z * H(i, k + 2);
                H(i, k + 2) -= p * r;
              }
              H(i, k) -= p;
              H(i, k + 1) -= p * q;
            }
            for (long i = low; i <= high; ++i) {
              p = x * V(i, k) + y * V(i, k + 1);
              if (notlast) {
                p += z * V(i, k + 2);
                V(i, k + 2) -= p * r;
              }
              V(i, k) -= p;
              V(i, k + 1) -= p * q;
            }
          }
        }
      }
    }

    if (!want_vectors || norm == 0) return;

    // Back-substitute the eigenvectors of the quasi-triangular factor.
    for (n = nn - 1; n >= 0; --n) {
      p = d[n];
      q = e[n];
      if (q == 0) {
        long l = n;
        H(n, n) = 1;
        for (long i = n - 1; i >= 0; --i) {
          w = H(i, i) - p;
          r = 0;
          for (long j = l; j <= n; ++j) r += H(i, j) * H(j, n);
          if (e[i] < 0) {
            z = w;
            s = r;
          } else {
            l = i;
            if (e[i] == 0) {
              H(i, n) = w != 0 ? -r / w : -r / (eps_ * norm);
            } else {
              x = H(i, i + 1);
              y = H(i + 1, i);
              q = (d[i] - p) * (d[i] - p) + e[i] * e[i];
              t = (x * s - z * r) / q;
              H(i, n) = t;
              H(i + 1, n) = abs(x) > abs(z) ? (-r - w * t) / x : (-s - y * t) / z;
            }
            t = abs(H(i, n));
            if ((eps_ * t) * t > 1)
              for (long j = i; j <= n; ++j) H(j, n) /= t;
          }
        }
      } else if (q < 0) {
        long l = n - 1;
        if (abs(H(n, n - 1)) > abs(H(n - 1, n))) {
          H(n - 1, n - 1) = q / H(n, n - 1);
          H(n - 1, n) = -(H(n, n) - p) / H(n, n - 1);
        } else {
          cdiv(R(0), -H(n - 1, n), H(n - 1, n - 1) - p, q, H(n - 1, n - 1), H(n - 1, n));
        }
        H(n, n - 1) = 0;
        H(n, n) = 1;
        for (long i = n - 2; i >= 0; --i) {
          R ra = 0, sa = 0, vr, vi;
          for (long j = l; j <= n; ++j) {
            ra += H(i, j) * H(j, n - 1);
            sa += H(i, j) * H(j, n);
          }
          w = H(i, i) - p;
          if (e[i] < 0) {
            z = w;
            r = ra;
            s = sa;
          } else {
            l = i;
            if (e[i] == 0) {
              cdiv(-ra, -sa, w, q, H(i, n - 1), H(i, n));
            } else {
              x = H(i, i + 1);
              y = H(i + 1, i);
              vr = (d[i] - p) * (d[i] - p) + e[i] * e[i] - q * q;
              vi = (d[i] - p) * 2 * q;
              if (vr == 0 && vi == 0) {
                vr = eps_ * norm * (abs(w) + abs(q) + abs(x) + abs(y) + abs(z));
              }
              cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi, H(i, n - 1), H(i, n));
              if (abs(x) > abs(z) + abs(q)) {
                H(i + 1, n - 1) = (-ra - w * H(i, n - 1) + q * H(i, n)) / x;
                H(i + 1, n) = (-sa - w * H(i, n) - q * H(i, n - 1)) / x;
              } else {
                cdiv(-r - y * H(i, n - 1), -s - y * H(i, n), z, q, H(i + 1, n - 1), H(i + 1, n));
              }
            }
            t = std::max(abs(H(i, n - 1)), abs(H(i, n)));
            if ((eps_ * t) * t > 1)
              for (long j = i; j <= n; ++j) {
                H(j, n - 1) /= t;
                H(j, n) /= t;
              }
          }
        }
      }
    }

    for (long j = nn - 1; j >= low; --j)
      for (long i = low; i <= high; ++i) {
        z = 0;
        for (long k = low; k <= std::min(j, high); ++k) z += V(i, k) * H(k, j);
        V(i, j) = z;
      }
  }

  std::size_t n_;
  RealMatrix h_;
  RealMatrix v_;
  RealVector d_;
  RealVector e_;
  Real eps_;
  std::string label_;
};

/// Unit 2-norm, first significant component real and positive.
inline void normalize_eigenvector(ComplexMatrix& v, std::size_t col, const Real& tol) {
  const std::size_t n = v.rows();
  Real nrm = 0;
  Real big = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Real a = norm_sq(v(i, col));
    nrm += a;
    big = std::max(big, a);
  }
  nrm = boost::multiprecision::sqrt(nrm);
  if (nrm == 0) return;
  big = boost::multiprecision::sqrt(big);
  Complex phase(1);
  for (std::size_t i = 0; i < n; ++i) {
    Real a = abs(v(i, col));
    if (a > tol * big) {
      phase = conj(v(i, col)) / Complex(a);
      break;
    }
  }
  const Complex factor = phase / Complex(nrm);
  for (std::size_t i = 0; i < n; ++i) v(i, col) *= factor;
}

}  // namespace detail

/// Eigenvalues only, via the real Schur form.
inline ComplexVector schur_eigenvalues(const RealMatrix& a, const PrecisionContext& ctx,
                                       const std::string& label = "matrix") {
  if (!a.square()) throw ValidationError("eigenvalues: matrix must be square");
  detail::RealSchur schur(a, ctx, false, label);
  ComplexVector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    out[i] = Complex(schur.real_parts()[i], schur.imag_parts()[i]);
  return out;
}

/// Full eigendecomposition of a real diagonalizable matrix. Conjugate pairs
/// come out of the 2x2 Schur blocks; vectors are unit norm with the first
/// significant entry real-positive. Rejects near-defective input.
inline EigenDecomposition real_schur_eigen(const RealMatrix& a, const PrecisionContext& ctx,
                                           const std::string& label = "matrix") {
  if (!a.square()) throw ValidationError("eigendecomposition: matrix must be square");
  const std::size_t n = a.rows();
  detail::RealSchur schur(a, ctx, true, label);
  const auto& d = schur.real_parts();
  const auto& e = schur.imag_parts();
  const auto& packed = schur.packed_vectors();

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = ComplexMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    if (e[j] == 0) {
      out.values[j] = Complex(d[j]);
      for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = Complex(packed(i, j));
    } else if (e[j] > 0) {
      if (j + 1 >= n) throw NumericalError("eigensolver failed: unpaired complex eigenvalue in " + label);
      out.values[j] = Complex(d[j], e[j]);
      out.values[j + 1] = Complex(d[j + 1], e[j + 1]);
      for (std::size_t i = 0; i < n; ++i) {
        out.vectors(i, j) = Complex(packed(i, j), packed(i, j + 1));
        out.vectors(i, j + 1) = Complex(packed(i, j), -packed(i, j + 1));
      }
      ++j;
    }
  }
  const Real tol = ctx.residual_tol();
  for (std::size_t j = 0; j < n; ++j) detail::normalize_eigenvector(out.vectors, j, tol);

  // Conditioning of the eigenvector basis decides whether the
  // diagonalization is usable at this precision.
  try {
    out.lu_of_vectors = LuFactorization<Complex>(out.vectors, ctx.eig_tol, "singular eigenvector matrix");
  } catch (const NumericalError&) {
    throw NumericalError("near-defective matrix: eigenvector matrix is singular for " + label);
  }
  const Real cond = norm1(out.vectors) * norm1(out.lu_of_vectors.inverse());
  if (cond > ctx.max_eigvec_condition()) {
    throw NumericalError("near-defective matrix: eigenvector condition " +
                         to_string(cond, 6) + " for " + label);
  }

  ComplexMatrix av = to_complex(a) * out.vectors;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) av(i, j) -= out.vectors(i, j) * out.values[j];
  const Real resid = frobenius(av) / std::max(Real(1), frobenius(a));
  if (resid > tol) {
    throw NumericalError("eigensolver failed: residual " + to_string(resid, 6) + " for " + label);
  }
  return out;
}

/// Solves V * X = rhs with the cached factorization of the eigenvectors.
inline ComplexMatrix complex_lu_solve(const EigenDecomposition& decomp, const ComplexMatrix& rhs) {
  return decomp.lu_of_vectors.solve(rhs);
}

}  // namespace ensctl

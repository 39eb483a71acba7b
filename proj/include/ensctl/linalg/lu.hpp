#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "ensctl/linalg/matrix.hpp"

namespace ensctl {

/// LU factorization with partial pivoting, P*A = L*U, packed in place.
/// Works over Real or Complex.
template <class T>
class LuFactorization {
 public:
  LuFactorization() = default;

  /// Throws NumericalError(`what`) when a pivot falls below
  /// `rel_tol * max|A|`.
  LuFactorization(Matrix<T> a, const Real& rel_tol,
                  const std::string& what = "singular matrix")
      : lu_(std::move(a)), perm_(lu_.rows()) {
    if (!lu_.square()) throw ValidationError("LU: matrix must be square");
    const std::size_t n = lu_.rows();
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
    const Real floor = rel_tol * max_abs(lu_);
    for (std::size_t k = 0; k < n; ++k) {
      std::size_t piv = k;
      Real best = magnitude(lu_(k, k));
      for (std::size_t i = k + 1; i < n; ++i) {
        Real m = magnitude(lu_(i, k));
        if (m > best) {
          best = m;
          piv = i;
        }
      }
      if (best <= floor || best == 0) {
        throw NumericalError(what + " (pivot " + std::to_string(k) + ")");
      }
      if (piv != k) {
        for (std::size_t j = 0; j < n; ++j) std::swap(lu_(k, j), lu_(piv, j));
        std::swap(perm_[k], perm_[piv]);
      }
      for (std::size_t i = k + 1; i < n; ++i) {
        lu_(i, k) /= lu_(k, k);
        const T f = lu_(i, k);
        for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
      }
    }
  }

  [[nodiscard]] std::size_t size() const noexcept { return lu_.rows(); }

  /// Solves A*x = b.
  [[nodiscard]] std::vector<T> solve(const std::vector<T>& b) const {
    const std::size_t n = size();
    if (b.size() != n) throw ValidationError("LU solve: rhs length mismatch");
    std::vector<T> x(n);
    for (std::size_t i = 0; i < n; ++i) {
      T s = b[perm_[i]];
      for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
      x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      T s = x[i];
      for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
      x[i] = s / lu_(i, i);
    }
    return x;
  }

  /// Solves A*X = B column by column.
  [[nodiscard]] Matrix<T> solve(const Matrix<T>& b) const {
    if (b.rows() != size()) throw ValidationError("LU solve: rhs rows mismatch");
    Matrix<T> x(b.rows(), b.cols());
    std::vector<T> col(b.rows());
    for (std::size_t j = 0; j < b.cols(); ++j) {
      for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
      auto sol = solve(col);
      for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = std::move(sol[i]);
    }
    return x;
  }

  [[nodiscard]] Matrix<T> inverse() const { return solve(Matrix<T>::identity(size())); }

 private:
  Matrix<T> lu_;
  std::vector<std::size_t> perm_;
};

}  // namespace ensctl

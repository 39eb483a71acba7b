#pragma once

#include <string>

#include "ensctl/linalg/matrix.hpp"

namespace ensctl {

/// Lower Cholesky factor S = L*L^T of a symmetric positive definite matrix.
class Cholesky {
 public:
  explicit Cholesky(const RealMatrix& s) : l_(s.rows(), s.cols()) {
    if (!s.square()) throw ValidationError("cholesky: matrix must be square");
    const std::size_t n = s.rows();
    for (std::size_t j = 0; j < n; ++j) {
      Real diag = s(j, j);
      for (std::size_t k = 0; k < j; ++k) diag -= l_(j, k) * l_(j, k);
      if (!(diag > 0)) {
        throw NumericalError("not positive definite: pivot " + std::to_string(j) +
                             " is " + to_string(diag, 6));
      }
      l_(j, j) = boost::multiprecision::sqrt(diag);
      for (std::size_t i = j + 1; i < n; ++i) {
        Real v = s(i, j);
        for (std::size_t k = 0; k < j; ++k) v -= l_(i, k) * l_(j, k);
        l_(i, j) = v / l_(j, j);
      }
    }
  }

  [[nodiscard]] RealVector solve(const RealVector& b) const {
    const std::size_t n = l_.rows();
    if (b.size() != n) throw ValidationError("cholesky solve: rhs length mismatch");
    RealVector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      Real s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= l_(i, k) * y[k];
      y[i] = s / l_(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      Real s = y[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= l_(k, i) * y[k];
      y[i] = s / l_(i, i);
    }
    return y;
  }

  [[nodiscard]] const RealMatrix& factor() const noexcept { return l_; }

 private:
  RealMatrix l_;
};

inline RealVector cholesky_solve(const RealMatrix& s, const RealVector& b) {
  return Cholesky(s).solve(b);
}

}  // namespace ensctl

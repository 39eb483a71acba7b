#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <algorithm>
#include <complex>

#include "ensctl/linalg.hpp"
#include "test_util.hpp"

namespace ensctl {
namespace {

using testing::random_matrix;
using testing::uniform;

Real residual(const RealMatrix& a, const EigenDecomposition& d) {
  ComplexMatrix r = to_complex(a) * d.vectors;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) r(i, j) -= d.vectors(i, j) * d.values[j];
  return frobenius(r) / std::max(Real(1), frobenius(a));
}

class LinalgTest : public ::testing::Test {
 protected:
  ScopedPrecision precision_{256};
  const PrecisionContext& ctx() const { return precision_.context(); }
};

TEST_F(LinalgTest, DiagonalEigen) {
  auto a = RealMatrix::from_rows({{-1, 0}, {0, -2}});
  auto d = real_schur_eigen(a, ctx());
  ASSERT_EQ(d.size(), 2u);
  std::vector<double> vals = {d.values[0].re.convert_to<double>(), d.values[1].re.convert_to<double>()};
  std::sort(vals.begin(), vals.end());
  EXPECT_EQ(vals[0], -2.0);
  EXPECT_EQ(vals[1], -1.0);
  for (std::size_t j = 0; j < 2; ++j) {
    const std::size_t idx = d.values[j].re == -1 ? 0 : 1;
    EXPECT_EQ(d.vectors(idx, j), Complex(1));
    EXPECT_EQ(d.vectors(1 - idx, j), Complex(0));
  }
}

TEST_F(LinalgTest, RotationHasImaginaryPair) {
  auto a = RealMatrix::from_rows({{0, 1}, {-1, 0}});
  auto d = real_schur_eigen(a, ctx());
  EXPECT_LT(abs(d.values[0].re), Real(1e-70));
  EXPECT_LT(abs(d.values[0].im - 1), Real(1e-70));
  EXPECT_LT(abs(d.values[1].im + 1), Real(1e-70));
  EXPECT_LT(residual(a, d), Real(1e-70));
}

TEST_F(LinalgTest, RandomStableMatchesDoubleSolver) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    auto a = random_matrix(rng, 5, -2, -0.1, 0, 0.5);
    auto d = real_schur_eigen(a, ctx());
    EXPECT_LE(residual(a, d), Real(1e-60));

    Eigen::MatrixXd ad(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) ad(i, j) = a(i, j).convert_to<double>();
    Eigen::EigenSolver<Eigen::MatrixXd> es(ad);
    std::vector<std::complex<double>> ref(es.eigenvalues().data(), es.eigenvalues().data() + 5);
    std::vector<bool> used(5, false);
    for (std::size_t k = 0; k < 5; ++k) {
      std::complex<double> v(d.values[k].re.convert_to<double>(), d.values[k].im.convert_to<double>());
      double best = 1e300;
      std::size_t arg = 0;
      for (std::size_t r = 0; r < 5; ++r)
        if (!used[r] && std::abs(ref[r] - v) < best) {
          best = std::abs(ref[r] - v);
          arg = r;
        }
      used[arg] = true;
      EXPECT_LT(best, 1e-8);
    }
    for (std::size_t j = 0; j < 5; ++j) {
      Real nrm = 0;
      for (std::size_t i = 0; i < 5; ++i) nrm += norm_sq(d.vectors(i, j));
      EXPECT_LT(abs(nrm - 1), Real(1e-70));
    }
  }
}

TEST_F(LinalgTest, ComplexSpectrumResidual) {
  // Rotation-dominated blocks produce complex pairs.
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    auto a = random_matrix(rng, 6, -1, -0.2, -2, 2);
    auto d = real_schur_eigen(a, ctx());
    EXPECT_LE(residual(a, d), Real(1e-60));
  }
}

TEST_F(LinalgTest, JordanBlockRejected) {
  auto a = RealMatrix::from_rows({{0, 1}, {0, 0}});
  try {
    (void)real_schur_eigen(a, ctx());
    FAIL() << "expected near-defective error";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("near-defective"), std::string::npos);
  }
}

TEST_F(LinalgTest, LuIdentityAndPermutation) {
  auto d = real_schur_eigen(RealMatrix::from_rows({{-1, 0, 0}, {0, -2, 0}, {0, 0, -3}}), ctx());
  ComplexMatrix rhs(3, 1);
  rhs(0, 0) = Complex(1, 2);
  rhs(1, 0) = Complex(3);
  rhs(2, 0) = Complex(0, -1);
  auto x = complex_lu_solve(d, rhs);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(x(i, 0), rhs(i, 0));

  ComplexMatrix p(2, 2);
  p(0, 1) = Complex(1);
  p(1, 0) = Complex(1);
  LuFactorization<Complex> lu(p, ctx().eig_tol);
  ComplexMatrix b(2, 1);
  b(0, 0) = Complex(5);
  b(1, 0) = Complex(7, 1);
  auto y = lu.solve(b);
  EXPECT_EQ(y(0, 0), b(1, 0));
  EXPECT_EQ(y(1, 0), b(0, 0));
}

TEST_F(LinalgTest, LuRandomComplexResidual) {
  std::mt19937_64 rng(3);
  ComplexMatrix v(4, 4), b(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) v(i, j) = Complex(uniform(rng, -1, 1), uniform(rng, -1, 1));
    for (std::size_t j = 0; j < 2; ++j) b(i, j) = Complex(uniform(rng, -1, 1), uniform(rng, -1, 1));
  }
  LuFactorization<Complex> lu(v, ctx().eig_tol);
  auto x = lu.solve(b);
  EXPECT_LE(frobenius(v * x - b), Real(1e-60));
}

TEST_F(LinalgTest, LuSingularPivot) {
  ComplexMatrix v(2, 2);
  v(0, 0) = Complex(1);
  v(0, 1) = Complex(2);
  v(1, 0) = Complex(2);
  v(1, 1) = Complex(4);
  EXPECT_THROW((LuFactorization<Complex>(v, ctx().eig_tol, "singular eigenvector matrix")), NumericalError);
}

TEST_F(LinalgTest, SymmetricDiagonal) {
  auto s = RealMatrix::from_rows({{3, 0, 0}, {0, 1, 0}, {0, 0, 2}});
  auto e = symmetric_eigen(s, ctx());
  EXPECT_EQ(e.values[0], 3);
  EXPECT_EQ(e.values[1], 2);
  EXPECT_EQ(e.values[2], 1);
  EXPECT_EQ(abs(e.vectors(0, 0)), 1);
  EXPECT_EQ(abs(e.vectors(2, 1)), 1);
  EXPECT_EQ(abs(e.vectors(1, 2)), 1);
}

TEST_F(LinalgTest, SymmetricScalar) {
  auto e = symmetric_eigen(RealMatrix::from_rows({{5}}), ctx());
  ASSERT_EQ(e.values.size(), 1u);
  EXPECT_EQ(e.values[0], 5);
}

TEST_F(LinalgTest, SymmetricConstructedSpectrum) {
  std::mt19937_64 rng(5);
  auto q = testing::random_orthogonal(rng, 3);
  RealMatrix d(3, 3);
  d(0, 0) = 10;
  d(1, 1) = 1;
  d(2, 2) = Real("0.1");
  RealMatrix s = q * d * q.transpose();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < i; ++j) s(i, j) = s(j, i);
  auto e = symmetric_eigen(s, ctx());
  EXPECT_LT(abs(e.values[0] - 10), Real(1e-60));
  EXPECT_LT(abs(e.values[1] - 1), Real(1e-60));
  EXPECT_LT(abs(e.values[2] - Real("0.1")), Real(1e-60));
}

TEST_F(LinalgTest, SymmetricPropertiesRandom) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + trial;
    RealMatrix s(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) s(i, j) = s(j, i) = uniform(rng, -1, 1);
    auto e = symmetric_eigen(s, ctx());
    for (std::size_t k = 0; k + 1 < n; ++k) EXPECT_GE(e.values[k], e.values[k + 1]);
    RealMatrix qtq = e.vectors.transpose() * e.vectors;
    EXPECT_LE(max_abs(qtq - RealMatrix::identity(n)), ctx().residual_tol());
    RealMatrix lam(n, n);
    for (std::size_t k = 0; k < n; ++k) lam(k, k) = e.values[k];
    EXPECT_LE(frobenius(s * e.vectors - e.vectors * lam), ctx().residual_tol());
  }
}

TEST_F(LinalgTest, SymmetricRejectsAsymmetric) {
  auto s = RealMatrix::from_rows({{1, 2}, {0, 1}});
  EXPECT_THROW((void)symmetric_eigen(s, ctx()), ValidationError);
}

TEST_F(LinalgTest, CholeskyBasics) {
  RealVector b = {Real(1), Real(-2), Real(3)};
  EXPECT_EQ(cholesky_solve(RealMatrix::identity(3), b), b);
  auto x = cholesky_solve(RealMatrix::from_rows({{4}}), RealVector{Real(8)});
  EXPECT_EQ(x[0], 2);
  EXPECT_THROW((void)cholesky_solve(RealMatrix::from_rows({{1, 2}, {2, 1}}), RealVector{1, 1}),
               NumericalError);
}

TEST_F(LinalgTest, CholeskyRandomSpd) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    auto m = random_matrix(rng, 6, -1, 1, -1, 1);
    RealMatrix s = m * m.transpose();
    RealVector x(6);
    for (auto& v : x) v = uniform(rng, -1, 1);
    RealVector b = s * x;
    auto got = cholesky_solve(s, b);
    RealVector r = s * got;
    Real res = 0;
    for (std::size_t i = 0; i < 6; ++i) res = std::max(res, abs(r[i] - b[i]));
    EXPECT_LE(res / max_abs(std::span<const Real>(b)), Real(1e-60));
    // Recovery of x is bounded by the conditioning of S; ours are mild.
    Real err = 0;
    for (std::size_t i = 0; i < 6; ++i) err = std::max(err, abs(got[i] - x[i]));
    EXPECT_LE(err, ctx().residual_tol());
  }
}

TEST_F(LinalgTest, ExpmScalar) {
  auto zero = real_schur_eigen(RealMatrix::from_rows({{0}}), ctx());
  EXPECT_EQ(expm_action(zero, Real(3), {Real(2)}, ctx())[0], 2);
  auto neg = real_schur_eigen(RealMatrix::from_rows({{-1}}), ctx());
  auto y = expm_action(neg, Real(1), {Real(1)}, ctx());
  EXPECT_LT(abs(y[0] - boost::multiprecision::exp(Real(-1))), Real(1e-70));
  EXPECT_NEAR(y[0].convert_to<double>(), 0.3678794411714423, 1e-16);
}

TEST_F(LinalgTest, ExpmNearJordan) {
  // Distinct-diagonal regularization of the nilpotent block.
  const Real eps("1e-3");
  auto a = RealMatrix::from_rows({{-eps, 1}, {0, -2 * eps}});
  auto d = real_schur_eigen(a, ctx());
  const Real t = 1;
  auto y = expm_action(d, t, {Real(0), Real(1)}, ctx());
  using boost::multiprecision::exp;
  const Real exact0 = (exp(-eps * t) - exp(-2 * eps * t)) / eps;
  EXPECT_LT(abs(y[0] - exact0), Real(1e-60));
  EXPECT_LT(abs(y[1] - exp(-2 * eps * t)), Real(1e-60));
  // Against the nilpotent limit (I + N t): agreement to O(eps).
  EXPECT_LT(abs(y[0] - t), Real(3) * eps);
  EXPECT_LT(abs(y[1] - 1), Real(3) * eps);
}

TEST_F(LinalgTest, ExpmMatchesTaylorSeries) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 5; ++trial) {
    auto a = random_matrix(rng, 4, -1, -0.2, -0.2, 0.2);
    const Real t = Real(1) / (frobenius(a) + 1);  // ||A t|| <= 1
    RealVector x0(4);
    for (auto& v : x0) v = uniform(rng, -1, 1);
    RealVector term = x0, sum = x0;
    for (int k = 1; k < 200; ++k) {
      term = a * term;
      for (auto& v : term) v *= t / k;
      for (std::size_t i = 0; i < 4; ++i) sum[i] += term[i];
      if (max_abs(std::span<const Real>(term)) < Real(1e-90)) break;
    }
    auto got = expm_action(real_schur_eigen(a, ctx()), t, x0, ctx());
    for (std::size_t i = 0; i < 4; ++i) EXPECT_LT(abs(got[i] - sum[i]), Real(1e-40));
  }
}

TEST(LinalgPrecision, DoublingPrecisionShrinksResiduals) {
  std::mt19937_64 seed_rng(31);
  const auto seed = seed_rng();
  auto run = [&](unsigned bits) {
    ScopedPrecision guard(bits);
    std::mt19937_64 rng(seed);
    auto a = random_matrix(rng, 5, -2, -0.1, 0, 0.5);
    auto d = real_schur_eigen(a, guard.context());
    // Gauge the residual with a fixed-length rendering so both runs are
    // compared on a common scale.
    Real r = residual(a, d);
    RealMatrix m = a * a.transpose();
    RealVector b(5, Real(1));
    auto x = cholesky_solve(m, b);
    RealVector mx = m * x;
    Real rc = 0;
    for (std::size_t i = 0; i < 5; ++i) rc = std::max(rc, abs(mx[i] - b[i]));
    return std::pair<double, double>{std::max(r, Real(1e-300)).convert_to<double>(),
                                     std::max(rc, Real(1e-300)).convert_to<double>()};
  };
  auto lo = run(128);
  auto hi = run(256);
  EXPECT_GE(lo.first / hi.first, 1e10);
  EXPECT_GE(lo.second / hi.second, 1e10);
}

}  // namespace
}  // namespace ensctl

#include <gtest/gtest.h>

#include "ensctl/ensemble.hpp"
#include "ensctl/gramian.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace ensctl {
namespace {

using testing::random_matrix;

class GramianTest : public ::testing::Test {
 protected:
  ScopedPrecision precision_{256};
  const PrecisionContext& ctx() const { return precision_.context(); }
};

RealMatrix scalar(double v) { return RealMatrix::from_rows({{v}}); }

TEST_F(GramianTest, ScalarInfiniteHorizon) {
  auto w = solve_sylvester_pair(real_schur_eigen(scalar(-1), ctx()), real_schur_eigen(scalar(-2), ctx()),
                                scalar(1), Horizon::infinite(), ctx());
  EXPECT_LT(abs(w(0, 0) - Real(1) / 3), Real(1e-60));
}

TEST_F(GramianTest, ScalarFiniteHorizon) {
  auto d = real_schur_eigen(scalar(-1), ctx());
  auto w = solve_sylvester_pair(d, d, scalar(1), Horizon::finite(Real(1)), ctx());
  const Real expect = (1 - boost::multiprecision::exp(Real(-2))) / 2;
  EXPECT_LT(abs(w(0, 0) - expect), Real(1e-60));
  EXPECT_NEAR(w(0, 0).convert_to<double>(), 0.43233235838169365, 1e-15);
}

TEST_F(GramianTest, RandomPairsSatisfySylvester) {
  std::mt19937_64 rng(101);
  auto b = RealMatrix::from_rows({{1, 0}, {0, 0}, {0, 1}, {0, 0}});
  for (int trial = 0; trial < 5; ++trial) {
    auto aj = random_matrix(rng, 4, -3, -1, -0.5, 0.5);
    auto ak = random_matrix(rng, 4, -3, -1, -0.5, 0.5);
    auto dj = real_schur_eigen(aj, ctx());
    auto dk = real_schur_eigen(ak, ctx());
    auto w = solve_sylvester_pair(dj, dk, b, Horizon::infinite(), ctx());
    RealMatrix r = aj * w + w * ak.transpose() + b * b.transpose();
    EXPECT_LE(frobenius(r), Real(1e-60));

    const Real t_f("1.5");
    auto wf = solve_sylvester_pair(dj, dk, b, Horizon::finite(t_f), ctx());
    auto ode = testing::integrate_differential_sylvester(aj, ak, b * b.transpose(), t_f, 60);
    EXPECT_LE(max_abs(wf - ode), Real(1e-20));
  }
}

TEST_F(GramianTest, InfiniteIsLimitOfFinite) {
  std::mt19937_64 rng(103);
  auto b = RealMatrix::from_rows({{1}, {0}, {0}});
  auto aj = random_matrix(rng, 3, -3, -1, 0, 0.5);
  auto ak = random_matrix(rng, 3, -3, -1, 0, 0.5);
  auto dj = real_schur_eigen(aj, ctx());
  auto dk = real_schur_eigen(ak, ctx());
  Real slowest = -1e9;
  for (const auto* d : {&dj, &dk})
    for (const auto& v : d->values) slowest = std::max(slowest, v.re);
  const Real t_f = Real(50) / abs(slowest);
  auto wi = solve_sylvester_pair(dj, dk, b, Horizon::infinite(), ctx());
  auto wf = solve_sylvester_pair(dj, dk, b, Horizon::finite(t_f), ctx());
  EXPECT_LE(max_abs(wi - wf) / max_abs(wi), Real(1e-20));
}

TEST_F(GramianTest, ResonanceAndInstabilityRejected) {
  auto tiny = real_schur_eigen(scalar(0), ctx());
  auto d = real_schur_eigen(RealMatrix::from_rows({{Real("-1e-80")}}), ctx());
  EXPECT_THROW(solve_sylvester_pair(d, d, scalar(1), Horizon::infinite(), ctx()), NumericalError);
  EXPECT_THROW(solve_sylvester_pair(tiny, tiny, scalar(1), Horizon::infinite(), ctx()), NumericalError);
  // The finite horizon has no such restriction.
  auto w = solve_sylvester_pair(tiny, tiny, scalar(1), Horizon::finite(Real(2)), ctx());
  EXPECT_EQ(w(0, 0), 2);
}

TEST_F(GramianTest, SingleRealizationIsClassicGramian) {
  EnsembleSpec spec = example_network_spec();
  spec.targets = {0, 1, 2, 3, 4, 5};
  spec.y_f.assign(6, 1.0);
  auto set = sample_realizations(spec, 1, 5, ctx());
  auto cocg = assemble_cocg(set, ctx());
  const auto& a = set.matrices[0];
  RealMatrix r = a * cocg.matrix + cocg.matrix * a.transpose() + set.B * set.B.transpose();
  EXPECT_LE(frobenius(r), Real(1e-60));
  for (const auto& mu : cocg.eigenvalues) EXPECT_GT(mu, 0);
}

TEST_F(GramianTest, IdenticalRealizationsHaveRankStructure) {
  EnsembleSpec spec = example_network_spec();
  for (auto& e : spec.edges) e.weight = WeightDistribution::delta(e.weight.support().first);
  for (std::size_t v = 0; v < spec.n; ++v) spec.loops[v] = WeightDistribution::delta(-2.0 - 0.3 * v);
  const std::size_t N = 4;
  auto set = sample_realizations(spec, N, 1, ctx());
  auto cocg = assemble_cocg(set, ctx());
  const std::size_t p = spec.targets.size();
  RealMatrix g(p, p);
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t s = 0; s < p; ++s) g(r, s) = cocg.matrix(r, s);
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t k = 0; k < N; ++k)
      for (std::size_t r = 0; r < p; ++r)
        for (std::size_t s = 0; s < p; ++s)
          EXPECT_LT(abs(cocg.matrix(j * p + r, k * p + s) - g(r, s)), Real(1e-65));
  auto ge = symmetric_eigen(g, ctx());
  for (std::size_t i = 0; i < p; ++i)
    EXPECT_LT(abs(cocg.eigenvalues[i] - N * ge.values[i]), Real(1e-60) * cocg.eigenvalues[0]);
  for (std::size_t i = p; i < N * p; ++i) EXPECT_LT(abs(cocg.eigenvalues[i]), Real(1e-60) * cocg.eigenvalues[0]);
}

TEST_F(GramianTest, CocgInvariants) {
  auto set = sample_realizations(example_network_spec(), 6, 21, ctx());
  auto systems = prepare_systems(set, ctx());
  auto pairs = compute_pair_gramians(systems, set.horizon, ctx());
  for (std::size_t j = 0; j < 6; ++j) {
    for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(pairs.block(j, k), pairs.block(k, j).transpose());
    auto e = symmetric_eigen(pairs.block(j, j), ctx());
    EXPECT_GE(e.values.back(), -ctx().psd_tol * e.values.front());
  }
  auto cocg = assemble_cocg_from_pairs(pairs, set.C, ctx());
  EXPECT_EQ(cocg.matrix, cocg.matrix.transpose());
  for (std::size_t k = 0; k + 1 < cocg.size(); ++k) EXPECT_GE(cocg.eigenvalues[k], cocg.eigenvalues[k + 1]);
  EXPECT_GE(cocg.eigenvalues.back(), -ctx().psd_tol * cocg.eigenvalues.front());
  // Parallel assembly is identical to the serial one.
  auto par = assemble_cocg(set, ctx(), 3);
  EXPECT_EQ(par.matrix, cocg.matrix);
}

TEST_F(GramianTest, Maneuvers) {
  EnsembleSpec spec = example_network_spec();
  auto set = sample_realizations(spec, 3, 2, ctx());
  auto m = compute_maneuvers(set, ctx());
  for (const auto& b : m.beta) EXPECT_EQ(b, -1);

  spec.x0 = {1, 2, 3, 4, 5, 6};
  auto set2 = sample_realizations(spec, 3, 2, ctx());
  for (const auto& b : compute_maneuvers(set2, ctx()).beta) EXPECT_EQ(b, -1);

  RealizationSet scalar_set;
  scalar_set.matrices = {scalar(-1)};
  scalar_set.B = scalar(1);
  scalar_set.C = scalar(1);
  scalar_set.x0 = {Real(2)};
  scalar_set.y_f = {Real(0)};
  scalar_set.horizon = Horizon::finite(Real(1));
  auto ms = compute_maneuvers(scalar_set, ctx());
  EXPECT_LT(abs(ms.beta[0] - 2 * boost::multiprecision::exp(Real(-1))), Real(1e-70));
  EXPECT_NEAR(ms.beta[0].convert_to<double>(), 0.73575888234288467, 1e-15);
}

TEST(GramianPrecision, SpectrumStableUnderPrecisionDoubling) {
  auto run = [](unsigned bits) {
    ScopedPrecision guard(bits);
    auto set = sample_realizations(example_chain_spec(), 10, 4, guard.context());
    auto cocg = assemble_cocg(set, guard.context());
    std::vector<std::string> out;
    for (const auto& mu : cocg.eigenvalues)
      if (mu > Real(1e-30)) out.push_back(mu.str(10, std::ios_base::scientific));
    return out;
  };
  auto lo = run(256);
  auto hi = run(512);
  ASSERT_FALSE(lo.empty());
  EXPECT_EQ(lo, hi);
}

}  // namespace
}  // namespace ensctl

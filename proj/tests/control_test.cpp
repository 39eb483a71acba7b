#include <gtest/gtest.h>

#include "ensctl/control.hpp"
#include "ensctl/ensemble.hpp"
#include "ensctl/gramian.hpp"
#include "test_util.hpp"

namespace ensctl {
namespace {

using boost::multiprecision::exp;

class ControlTest : public ::testing::Test {
 protected:
  ScopedPrecision precision_{256};
  const PrecisionContext& ctx() const { return precision_.context(); }

  struct Instance {
    RealizationSet set;
    Cocg cocg;
    ManeuverVector beta;
  };

  Instance build(const EnsembleSpec& spec, std::size_t N, std::uint64_t seed) const {
    Instance in{sample_realizations(spec, N, seed, ctx()), {}, {}};
    auto systems = prepare_systems(in.set, ctx());
    in.cocg = assemble_cocg_from_pairs(compute_pair_gramians(systems, in.set.horizon, ctx()), in.set.C, ctx());
    in.beta = compute_maneuvers(in.set, systems, ctx());
    return in;
  }
};

/// n = 1, a single loop weight, driven and observed.
EnsembleSpec scalar_spec(const WeightDistribution& loop, double x0, double y_f, Horizon h = Horizon::infinite()) {
  EnsembleSpec spec;
  spec.n = 1;
  spec.loops = {loop};
  spec.drivers = {0};
  spec.targets = {0};
  spec.x0 = {x0};
  spec.y_f = {y_f};
  spec.horizon = std::move(h);
  return spec;
}

Real rel(const Real& a, const Real& b) { return abs(a - b) / std::max(abs(a), abs(b)); }

TEST(Alpha, Parameterization) {
  ScopedPrecision guard(256);
  EXPECT_EQ(alpha_of_N(5, 2, Real(0)), 1);
  EXPECT_EQ(alpha_of_N(1, 2, Real(2)), Real("0.5"));
  const Real a = alpha_of_N(10, 1, Real("1e12"));
  EXPECT_LT(abs(a - Real("1e-11")), Real("1e-21"));
  EXPECT_THROW(alpha_of_N(3, 1, Real(-1)), ValidationError);
}

TEST_F(ControlTest, GammaAtAlphaOneIsBeta) {
  auto in = build(example_network_spec(), 3, 1);
  EXPECT_EQ(solve_gamma(in.cocg, in.beta, Real(1), ctx()), in.beta.beta);
}

TEST_F(ControlTest, GammaForTwoIdenticalScalarSystems) {
  auto in = build(scalar_spec(WeightDistribution::delta(-1.0), 0, 1), 2, 1);
  const Real w("0.5");
  EXPECT_LT(abs(in.cocg.matrix(0, 1) - w), Real("1e-70"));
  for (const char* a : {"0.9", "0.5", "0.01"}) {
    const Real alpha(a);
    auto gamma = solve_gamma(in.cocg, in.beta, alpha, ctx());
    const Real expect = -alpha / (alpha + 2 * (1 - alpha) * w);
    for (const auto& g : gamma) EXPECT_LT(abs(g - expect), Real("1e-70"));
  }
}

TEST_F(ControlTest, GammaVanishesLinearlyInAlpha) {
  auto in = build(example_network_spec(), 2, 3);
  const Real a1("1e-30"), a2("1e-31");
  const Real s1 = norm2(solve_gamma(in.cocg, in.beta, a1, ctx())) / a1;
  const Real s2 = norm2(solve_gamma(in.cocg, in.beta, a2, ctx())) / a2;
  EXPECT_LT(rel(s1, s2), Real("1e-20"));
}

TEST_F(ControlTest, SingularConstrainedProblem) {
  auto in = build(scalar_spec(WeightDistribution::delta(-1.0), 0, 1), 2, 1);
  try {
    solve_gamma(in.cocg, in.beta, Real(0), ctx());
    FAIL() << "expected a singularity error";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("constrained problem singular"), std::string::npos);
  }
  EXPECT_THROW(solve_gamma(in.cocg, in.beta, Real("1.5"), ctx()), ValidationError);
}

TEST_F(ControlTest, ZeroWeightGivesNoControl) {
  auto in = build(example_network_spec(), 4, 2);
  auto s = solve_control_for_b(in.cocg, in.beta, Real(0), ctx());
  EXPECT_EQ(s.alpha, 1);
  EXPECT_EQ(s.E, 0);
  EXPECT_EQ(s.J, 0);
  EXPECT_EQ(s.D, dot(in.beta.beta, in.beta.beta));
}

TEST_F(ControlTest, ConstrainedLimitIsClassicalMinimumEnergy) {
  auto in = build(example_network_spec(), 1, 7);
  auto s = solve_control(in.cocg, in.beta, Real("1e-20"), ctx());
  const RealVector g_inv_beta = LuFactorization<Real>(in.cocg.matrix, ctx().eig_tol, "G").solve(in.beta.beta);
  const Real classical = dot(in.beta.beta, g_inv_beta);
  EXPECT_LT(rel(s.E, classical), Real("1e-10"));
}

TEST_F(ControlTest, QuadraticAndSpectralFormsAgree) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    const bool chain = trial % 2 == 0;
    const std::size_t N = 2 + rng() % 6;
    auto in = build(chain ? example_chain_spec() : example_network_spec(), N, 100 + trial);
    const Real b = boost::multiprecision::pow(Real(10), Real(testing::uniform(rng, -1, 4)));
    const Real alpha = alpha_of_N(in.cocg.N, in.cocg.p, b);
    auto quad = solve_control(in.cocg, in.beta, alpha, ctx());
    auto spec = costs_spectral(in.cocg, in.beta, alpha);
    EXPECT_LT(rel(quad.J, spec.J), Real("1e-20"));
    EXPECT_LT(rel(quad.E, spec.E), Real("1e-20"));
    EXPECT_LT(rel(quad.D, spec.D), Real("1e-20"));
    EXPECT_LT(rel(quad.J, (1 - alpha) / 2 * quad.D + alpha / 2 * quad.E), Real("1e-20"));
    EXPECT_GE(quad.E, 0);
    EXPECT_GE(quad.D, 0);
  }
}

TEST(CostsSpectral, SingleEigenpair) {
  ScopedPrecision guard(256);
  const Real alpha("0.3"), mu("2.5"), th("0.7");
  auto c = costs_spectral(RealVector{mu}, RealVector{th}, alpha);
  EXPECT_EQ(c.J, alpha * (1 - alpha) * th / (2 * (alpha + (1 - alpha) * mu)));
}

TEST_F(ControlTest, DeviationFallsAndEnergyRisesWithB) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto in = build(example_network_spec(), 4, seed);
    Real b("0.5");
    auto prev = solve_control_for_b(in.cocg, in.beta, b, ctx());
    for (int i = 0; i < 12; ++i) {
      b *= 2;
      auto next = solve_control_for_b(in.cocg, in.beta, b, ctx());
      EXPECT_LT(next.D, prev.D);
      EXPECT_GT(next.E, prev.E);
      prev = next;
    }
  }
}

std::vector<SpectrumSample> synthetic_samples(double floor) {
  std::vector<SpectrumSample> out;
  for (std::size_t N : {5, 10, 15, 20})
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      SpectrumSample s{seed, N, 1, RealVector(N), RealVector(N)};
      for (std::size_t k = 0; k < N; ++k) {
        s.mu[k] = Real("0.2") * N * boost::multiprecision::pow(Real("0.1"), k);
        s.theta_sq[k] = std::max(Real("0.9") * N * boost::multiprecision::pow(Real("0.01"), k), Real(floor));
      }
      out.push_back(std::move(s));
    }
  return out;
}

TEST(AssumptionFitTest, RecoversSyntheticConstants) {
  ScopedPrecision guard(256);
  auto fit = fit_assumptions(synthetic_samples(1e-8), guard.context());
  EXPECT_LT(abs(fit.c1 - Real("0.2")), Real("1e-60"));
  EXPECT_LT(abs(fit.c2 - Real("0.9")), Real("1e-60"));
  EXPECT_LT(abs(fit.r1 - Real("0.1")), Real("1e-60"));
  EXPECT_NEAR(fit.r2.convert_to<double>(), 0.01, 2e-3);
  EXPECT_TRUE(fit.floor_detected);
  EXPECT_EQ(fit.theta_c_sq, Real(1e-8));
  EXPECT_EQ(fit.k_bar(10), 4);
  EXPECT_GT(fit.mu0_fit.r_squared, Real("0.999999"));
  EXPECT_EQ(fit.seeds, 3u);
  EXPECT_EQ(fit.N_min, 5u);
  EXPECT_EQ(fit.N_max, 20u);
}

TEST(AssumptionFitTest, KBarEnumeration) {
  ScopedPrecision guard(256);
  AssumptionFit fit;
  fit.c2 = Real("0.9");
  fit.r2 = Real("0.01");
  fit.theta_c_sq = Real("1e-8");
  EXPECT_EQ(fit.k_bar(10), 4);   // 9e-8 > 1e-8 > 9e-10
  EXPECT_EQ(fit.k_bar(3), 2);  // capped at Np - 1
  fit.theta_c_sq = 0;
  EXPECT_EQ(fit.k_bar(7), 6);
  fit.theta_c_sq = 100;
  EXPECT_EQ(fit.k_bar(7), -1);
}

TEST(AssumptionFitTest, FloorDetection) {
  ScopedPrecision guard(256);
  FitOptions opt;
  std::vector<Real> y{Real(1), Real(-1), Real(-3), Real(-5), Real(-4.5), Real(-5.2), Real(-4.8)};
  auto f = detail::detect_floor(y, opt);
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(*f, 4u);
  std::vector<Real> straight{Real(0), Real(-1), Real(-2), Real(-3), Real(-4), Real(-5)};
  EXPECT_FALSE(detail::detect_floor(straight, opt).has_value());
}

TEST(AssumptionFitTest, NoFloorAndInsufficientData) {
  ScopedPrecision guard(256);
  auto fit = fit_assumptions(synthetic_samples(0.0), guard.context());
  EXPECT_FALSE(fit.floor_detected);
  EXPECT_EQ(fit.theta_c_sq, 0);
  EXPECT_LT(abs(fit.r2 - Real("0.01")), Real("1e-60"));

  auto few = synthetic_samples(1e-8);
  few.resize(9);  // three distinct N
  EXPECT_THROW(fit_assumptions(few, guard.context()), ValidationError);
  auto thin = synthetic_samples(1e-8);
  thin.erase(thin.begin());  // N = 5 has two seeds
  EXPECT_THROW(fit_assumptions(thin, guard.context()), ValidationError);
}

AssumptionFit reference_fit() {
  AssumptionFit fit;
  fit.c1 = Real("5.70e-3");
  fit.c2 = Real("0.911");
  fit.r1 = boost::multiprecision::pow(Real(10), Real("-2.04"));
  fit.r2 = boost::multiprecision::pow(Real(10), Real("-3.14"));
  fit.theta_c_sq = boost::multiprecision::pow(Real(10), Real("-6.32"));
  return fit;
}

TEST(Approximations, BoundsDominate) {
  ScopedPrecision guard(256);
  const auto fit = reference_fit();
  for (double b : {1.0, 10.0, 100.0, 1000.0})
    for (std::size_t N : {5, 50}) {
      auto a = approx_costs(fit, N, 1, Real(b));
      auto u = upper_bounds(fit, N, 1, Real(b));
      EXPECT_GE(u.J, a.J);
      EXPECT_GE(u.E, a.E);
      EXPECT_GE(u.D, a.D);
      EXPECT_GT(a.J, 0);
    }
}

TEST(Approximations, ZeroWeightAndLargeN) {
  ScopedPrecision guard(256);
  const auto fit = reference_fit();
  auto a = approx_costs(fit, 20, 1, Real(0));
  EXPECT_EQ(a.J, 0);
  EXPECT_EQ(a.E, 0);
  Real expect = 0;
  const long kb = fit.k_bar(20);
  for (long k = 0; k < 20; ++k)
    expect += k <= kb ? fit.c2 * boost::multiprecision::pow(fit.r2, k) : fit.theta_c_sq / 20;
  EXPECT_LT(rel(a.D, 20 * expect), Real("1e-60"));

  // J saturates as N grows with b fixed.
  const Real b(100);
  auto j1 = approx_costs(fit, 20000, 1, b).J;
  auto j2 = approx_costs(fit, 40000, 1, b).J;
  EXPECT_LT(rel(j1, j2), Real("0.01"));
  Real lead = 0;
  for (int k = 0; k < 60; ++k) {
    using boost::multiprecision::pow;
    lead += pow(fit.r2, k) / (1 + b * fit.c1 * pow(fit.r1, k));
  }
  EXPECT_LT(rel(j2, b / 2 * (fit.c2 * lead + fit.theta_c_sq)), Real("0.01"));
}

TEST(Approximations, UnitRateRejected) {
  ScopedPrecision guard(256);
  auto fit = reference_fit();
  fit.r1 = 1;
  EXPECT_THROW(approx_costs(fit, 5, 1, Real(10)), NumericalError);
  EXPECT_THROW(upper_bounds(fit, 5, 1, Real(10)), NumericalError);
}

TEST_F(ControlTest, BisectionSelfConsistency) {
  auto in = build(example_network_spec(), 5, 11);
  const auto th = maneuver_projections_sq(in.cocg, in.beta);
  const Real target = deviation_per_output(in.cocg.eigenvalues, th, Real(1));
  auto r = bisect_b_for_deviation(in.cocg, in.beta, target, ctx());
  EXPECT_LT(abs(r.b - 1), Real("1e-10"));
  EXPECT_LE(abs(r.deviation_per_output - target), Real("1e-16"));
  auto s = solve_control_for_b(in.cocg, in.beta, r.b, ctx());
  EXPECT_LT(abs(s.D / in.cocg.size() - target), Real("1e-16"));

  auto r01 = bisect_b_for_deviation(in.cocg, in.beta, Real("0.1"), ctx());
  EXPECT_LE(abs(deviation_per_output(in.cocg.eigenvalues, th, r01.b) - Real("0.1")), Real("1e-16"));

  try {
    bisect_b_for_deviation(in.cocg, in.beta, Real(2), ctx());
    FAIL() << "expected a range error";
  } catch (const DeviationRangeError& e) {
    EXPECT_LT(abs(e.hi() - 1), Real("1e-60"));
    EXPECT_NE(std::string(e.what()).find("outside achievable range"), std::string::npos);
  }
}

TEST_F(ControlTest, ZeroInputWhenAlphaIsOne) {
  auto spec = example_network_spec();
  spec.horizon = Horizon::finite(Real(2));
  auto in = build(spec, 3, 1);
  auto s = solve_control_for_b(in.cocg, in.beta, Real(0), ctx());
  auto u = synthesize_input(in.set, s, TimeGrid{Real(2), 64}, ctx());
  for (const auto& row : u.samples)
    for (const auto& v : row) EXPECT_EQ(v, 0);
  auto sim = simulate_forward(in.set, u);
  EXPECT_EQ(sim.deviation, 3 * 2);  // x0 = 0, y_f = (1, 1)
  for (const auto& y : sim.outputs)
    for (const auto& v : y) EXPECT_EQ(v, 0);
}

TEST_F(ControlTest, ScalarInputMatchesHandFormula) {
  const Real t_f(1);
  auto in = build(scalar_spec(WeightDistribution::delta(-1.5), 0.5, 1.0, Horizon::finite(t_f)), 1, 1);
  auto s = solve_control_for_b(in.cocg, in.beta, Real(3), ctx());
  TimeGrid grid{t_f, 2048};
  auto u = synthesize_input(in.set, s, grid, ctx());
  for (std::size_t i = 0; i <= grid.intervals; i += 97) {
    const Real expect = -(1 - s.alpha) / s.alpha * exp(Real("-1.5") * (t_f - grid.time(i))) * s.gamma[0];
    EXPECT_LT(abs(u.samples[i][0] - expect), Real("1e-60"));
  }
  EXPECT_LT(rel(input_energy(u), s.E), Real("1e-10"));
  auto sim = simulate_forward(in.set, u, s.accuracies);
  EXPECT_LT(rel(sim.deviation, s.D), Real("1e-8"));
  EXPECT_LT(sim.gamma_mismatch, Real("1e-8"));
}

TEST_F(ControlTest, ConstrainedScalarReachesTarget) {
  const Real t_f(2);
  auto in = build(scalar_spec(WeightDistribution::delta(-1.0), 1.0, 0.5, Horizon::finite(t_f)), 1, 1);
  auto s = solve_control(in.cocg, in.beta, Real("1e-20"), ctx());
  auto u = synthesize_input(in.set, s, TimeGrid{t_f, 4096}, ctx());
  auto sim = simulate_forward(in.set, u);
  EXPECT_LT(abs(sim.outputs[0][0] - Real("0.5")), Real("1e-10"));
}

TEST_F(ControlTest, ChainTrajectoryMatchesCosts) {
  auto probe = sample_realizations(example_chain_spec(), 5, 3, ctx());
  auto spec = example_chain_spec();
  spec.horizon = Horizon::finite(trajectory_horizon(probe, ctx()));
  auto in = build(spec, 5, 3);
  auto s = solve_control_for_b(in.cocg, in.beta, Real(100), ctx());
  auto u = synthesize_input(in.set, s, TimeGrid{in.set.horizon.t_f(), 4096}, ctx());
  auto sim = simulate_forward(in.set, u, s.accuracies);
  EXPECT_LT(rel(input_energy(u), s.E), Real("1e-6"));
  EXPECT_LT(rel(sim.deviation, s.D), Real("1e-6"));
  EXPECT_LT(sim.gamma_mismatch, Real("1e-6"));
}

}  // namespace
}  // namespace ensctl

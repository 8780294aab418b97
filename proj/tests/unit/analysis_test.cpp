#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "phdiff/analysis.hpp"
#include "phdiff/error.hpp"
#include "phdiff/forward.hpp"
#include "phdiff/reverse.hpp"
#include "phdiff/sampling.hpp"
#include "test_support.hpp"

namespace phdiff {
namespace {

Vector v1(double a) { return (Vector(1) << a).finished(); }
Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

const QuadraticEnergy kUnit{Matrix::Identity(1, 1)};
const StructureMatrices kOu =
    validate_structure(Matrix::Zero(1, 1), Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1));
const QuarticWellEnergy kQuartic;
const StructureMatrices kFourWell = validate_structure(
    (Matrix(2, 2) << 0, -0.5, 0.5, 0).finished(), 0.2 * Matrix::Identity(2, 2), Matrix::Identity(2, 2));

IntegratorConfig tight(std::size_t n_eval = 200) {
  IntegratorConfig c;
  c.rel_tol = 1e-10;
  c.abs_tol = 1e-14;
  c.n_eval = n_eval;
  return c;
}

// Exact W2^2 between equal-size empirical measures: minimum over all matchings.
double brute_force_w2(std::vector<double> a, const std::vector<double>& b) {
  std::sort(a.begin(), a.end());
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) cost += (a[i] - b[i]) * (a[i] - b[i]);
    best = std::min(best, cost / static_cast<double>(a.size()));
  } while (std::next_permutation(a.begin(), a.end()));
  return std::sqrt(best);
}

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  const Vector v = test::random_vector(static_cast<Index>(n), seed);
  return {v.data(), v.data() + v.size()};
}

TEST(EnergyAlongTrajectory, ZeroAtMinimum) {
  Trajectory t;
  t.times = {0.0, 1.0, 2.0};
  t.states = {v2(1, -1), v2(1, -1), v2(1, -1)};
  for (const auto& s : energy_along_trajectory(t, kQuartic)) EXPECT_EQ(s.energy, 0.0);
}

TEST(EnergyAlongTrajectory, ScalarDecay) {
  const auto traj = integrate_reverse(v1(4.0), 0.0, 5.0, kUnit, kOu, tight());
  for (const auto& s : energy_along_trajectory(traj, kUnit)) {
    const double exact = 8.0 * std::exp(-3.0 * s.time);
    EXPECT_NEAR(s.energy, exact, 1e-8 * exact + 1e-14);
  }
}

TEST(EnergyAlongTrajectory, StationaryOuMeanEnergy) {
  const auto init = sample_initial(NormalInit{v1(0.0), 1.0}, 1000, 12);
  const auto e = simulate_forward(init, TimeGrid(0, 20, 0.01), kUnit, kOu, 12);
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& t : e.trajectories) {
    const double h = energy_along_trajectory(t, kUnit).back().energy;
    sum += h;
    sum_sq += h * h;
  }
  const double mean = sum / 1000.0;
  const double se = std::sqrt((sum_sq / 1000.0 - mean * mean) / 999.0);
  EXPECT_NEAR(mean, 0.5, 4 * se);
}

TEST(LyapunovRate, ScalarRateMatches) {
  const auto traj = integrate_reverse(v1(4.0), 0.0, 10.0, kUnit, kOu, tight(2001));
  LyapunovCheckOptions o;
  o.rate_tolerance = 1e-4;
  const auto r = lyapunov_rate_check(traj, kUnit, kOu, o);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].status, CheckStatus::kPass);
  EXPECT_EQ(r[1].status, CheckStatus::kPass);
  EXPECT_LE(r[1].residual, 1e-4);
  EXPECT_GT(r[1].context["compared_points"].get<std::size_t>(), 1000u);
}

TEST(LyapunovRate, EquilibriumTrajectory) {
  const auto traj = integrate_reverse(v1(0.0), 0.0, 10.0, kUnit, kOu, tight());
  LyapunovCheckOptions o;
  o.rate_tolerance = 1e-4;
  const auto r = lyapunov_rate_check(traj, kUnit, kOu, o);
  EXPECT_EQ(r[0].residual, 0.0);
  EXPECT_EQ(r[1].residual, 0.0);
  EXPECT_FALSE(r[0].failed() || r[1].failed());
}

TEST(LyapunovRate, FourWellMonotone) {
  for (const auto& x0 : sample_initial(NormalInit{Vector::Zero(2), 1.5}, 15, 15)) {
    const auto traj = integrate_reverse(x0, 0.0, 15.0, kQuartic, kFourWell, tight(2001));
    const auto r = lyapunov_rate_check(traj, kQuartic, kFourWell);
    EXPECT_EQ(r[0].status, CheckStatus::kPass);
    EXPECT_EQ(r[1].status, CheckStatus::kSkipped);
    EXPECT_FALSE(r[1].gated);
  }
}

TEST(LyapunovRate, DetectsEnergyIncrease) {
  Trajectory t;
  t.times = {0.0, 1.0, 2.0};
  t.states = {v1(1.0), v1(0.5), v1(0.6)};
  const auto r = lyapunov_rate_check(t, kUnit, kOu);
  EXPECT_TRUE(r[0].failed());
  EXPECT_EQ(r[0].context["worst_step"].get<std::size_t>(), 1u);
}

TEST(EnergyBalance, OuStationaryWithinBudget) {
  const auto init = sample_initial(NormalInit{v1(0.0), 1.0}, 1000, 31);
  const TimeGrid g(0, 20, 0.01);
  const auto cal = calibrate_discretization_constant(init, g, kUnit, kOu, 31);
  EXPECT_TRUE(std::isfinite(cal.c));
  EXPECT_GE(cal.c, 0.0);
  const auto e = simulate_forward(init, g, kUnit, kOu, 31);
  EnergyBalanceOptions o;
  o.discretization_c = cal.c;
  const auto rep = empirical_energy_balance(e, kUnit, kOu, o);
  EXPECT_EQ(rep.times.size(), g.steps() - 1);
  EXPECT_LE(rep.max_normalized_residual, 1.0);
  // Stationarity: the right-hand side -R E[x^2] + sigma^2 / 2 averages to 0.
  const double late = std::accumulate(rep.rhs.end() - 500, rep.rhs.end(), 0.0) / 500.0;
  EXPECT_NEAR(late, 0.0, 0.05);
}

TEST(EnergyBalance, BonferroniDefault) {
  const auto init = sample_initial(NormalInit{v1(0.0), 1.0}, 200, 32);
  const auto e = simulate_forward(init, TimeGrid(0, 2, 0.01), kUnit, kOu, 32);
  const auto rep = empirical_energy_balance(e, kUnit, kOu);
  EXPECT_NEAR(rep.mc_sigmas, two_sided_normal_quantile(1e-3 / 199.0), 1e-12);
  EnergyBalanceOptions o;
  o.mc_sigmas = 3.0;
  EXPECT_EQ(empirical_energy_balance(e, kUnit, kOu, o).mc_sigmas, 3.0);
}

TEST(EnergyBalance, DissipatingFromWideStart) {
  const auto init = sample_initial(NormalInit{v1(0.0), 2.0}, 1000, 33);
  const auto e = simulate_forward(init, TimeGrid(0, 3, 0.01), kUnit, kOu, 33);
  const auto rep = empirical_energy_balance(e, kUnit, kOu);
  // d/dt of 1/2 (4 e^{-t} + 1 - e^{-t}) is -1.5 e^{-t}.
  EXPECT_LT(rep.lhs.front(), 0.0);
  for (std::size_t k = 0; k < rep.times.size(); k += 25) {
    EXPECT_NEAR(rep.rhs[k], -1.5 * std::exp(-rep.times[k]), 4 * rep.mc_stderr[k] + 0.02);
  }
}

TEST(EnergyBalance, ConservativeRightHandSideVanishes) {
  const QuadraticEnergy e2(Matrix::Identity(2, 2));
  const auto s = validate_structure((Matrix(2, 2) << 0, -1, 1, 0).finished(), Matrix::Zero(2, 2),
                                    Matrix::Zero(2, 1));
  const auto init = sample_initial(NormalInit{Vector::Zero(2), 1.0}, 100, 34);
  const auto ens = simulate_forward(init, TimeGrid(0, 1, 0.01), e2, s, 34);
  const auto rep = empirical_energy_balance(ens, e2, s);
  for (double r : rep.rhs) EXPECT_EQ(r, 0.0);
  // Explicit Euler grows H by (1 + dt^2) per step: a pure O(dt) drift in the LHS.
  double mean_h = 0.0;
  for (const auto& t : ens.trajectories) mean_h += e2.value(t.final_state(), 1.0) / 100.0;
  for (double l : rep.lhs) EXPECT_LE(std::abs(l), 2 * 0.01 * mean_h);
}

TEST(EnergyBalance, Preconditions) {
  const auto init = sample_initial(NormalInit{v1(0.0), 1.0}, 50, 35);
  const auto small = simulate_forward(init, TimeGrid(0, 1, 0.01), kUnit, kOu, 35);
  try {
    empirical_energy_balance(small, kUnit, kOu);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientEnsemble);
  }
  ForwardOptions thin;
  thin.thin = 2;
  const auto init2 = sample_initial(NormalInit{v1(0.0), 1.0}, 100, 35);
  const auto thinned = simulate_forward(init2, TimeGrid(0, 1, 0.01), kUnit, kOu, 35, thin);
  EXPECT_THROW(empirical_energy_balance(thinned, kUnit, kOu), Error);
}

TEST(PassivityOutput, Examples) {
  EXPECT_DOUBLE_EQ(passivity_output(kUnit, kOu, v1(2.0), 0.0)[0], 2.0);
  EXPECT_EQ(passivity_output(kQuartic, kFourWell, v2(1, 1), 0.0), Vector::Zero(2));
  for (const auto& x : sample_box(2, 2.0, 1000, 36)) {
    EXPECT_EQ(feedback_control(kQuartic, kFourWell, x, 0.0) + passivity_output(kQuartic, kFourWell, x, 0.0),
              Vector::Zero(2));
  }
}

TEST(Wasserstein1d, Basics) {
  const auto a = normals(50, 40);
  EXPECT_EQ(wasserstein2_1d(a, a), 0.0);
  EXPECT_DOUBLE_EQ(wasserstein2_1d({0.0}, {-3.5}), 3.5);
  std::vector<double> shifted = a;
  for (double& x : shifted) x += 1.0;
  EXPECT_NEAR(wasserstein2_1d(a, shifted), 1.0, 1e-14);
}

TEST(Wasserstein1d, MatchesOptimalMatching) {
  for (std::uint64_t k = 0; k < 20; ++k) {
    const auto a = normals(6, 100 + k);
    const auto b = normals(6, 200 + k);
    EXPECT_NEAR(wasserstein2_1d(a, b), brute_force_w2(a, b), 1e-12);
  }
}

TEST(Wasserstein1d, MetricProperties) {
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto a = normals(30, 300 + k);
    auto b = normals(30, 400 + k);
    auto c = normals(30, 500 + k);
    for (double& x : c) x = 0.5 * x + 0.3;
    const double ab = wasserstein2_1d(a, b);
    EXPECT_EQ(ab, wasserstein2_1d(b, a));
    EXPECT_LE(wasserstein2_1d(a, c), ab + wasserstein2_1d(b, c) + 1e-12);
  }
  // Zero iff sorted samples coincide.
  std::vector<double> a = {3, 1, 2};
  EXPECT_EQ(wasserstein2_1d(a, {1, 2, 3}), 0.0);
  EXPECT_GT(wasserstein2_1d(a, {1, 2, 3.0001}), 0.0);
}

TEST(Wasserstein1d, UnequalSizes) {
  // Point mass versus any cloud at the same location.
  EXPECT_NEAR(wasserstein2_1d({1.0}, {1.0, 1.0, 1.0}), 0.0, 1e-15);
  EXPECT_NEAR(wasserstein2_1d({0.0, 0.0}, {2.0, 2.0, 2.0}), 2.0, 1e-12);
  EXPECT_THROW(wasserstein2_1d({}, {1.0}), Error);
}

TEST(SlicedWasserstein, IdenticalCloudsAndOneDimension) {
  std::vector<Vector> a, b;
  const auto xs = normals(40, 41), ys = normals(40, 42);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    a.push_back(v1(xs[i]));
    b.push_back(v1(ys[i]));
  }
  EXPECT_EQ(sliced_wasserstein2(a, a, 16, 1), 0.0);
  EXPECT_NEAR(sliced_wasserstein2(a, b, 7, 3), wasserstein2_1d(xs, ys), 1e-12);
}

TEST(SlicedWasserstein, ShrinksAsCloudsMerge) {
  const auto a = sample_initial(NormalInit{Vector::Zero(3), 1.0}, 100, 43);
  const Vector shift = (Vector(3) << 1.0, -2.0, 0.5).finished();
  double prev = std::numeric_limits<double>::infinity();
  for (double s : {1.0, 0.5, 0.25, 0.1, 0.0}) {
    std::vector<Vector> b;
    for (const auto& x : a) b.push_back(x + s * shift);
    const double d = sliced_wasserstein2(a, b, 64, 9);
    EXPECT_LT(d, prev);
    EXPECT_LE(d, s * shift.norm() + 1e-12);
    prev = d;
  }
  EXPECT_EQ(prev, 0.0);
}

TEST(NormalQuantile, KnownValues) {
  EXPECT_NEAR(two_sided_normal_quantile(0.05), 1.959963984540054, 1e-12);
  EXPECT_NEAR(two_sided_normal_quantile(0.0027), 3.0, 1e-3);
  EXPECT_THROW(two_sided_normal_quantile(0.0), Error);
}

}  // namespace
}  // namespace phdiff

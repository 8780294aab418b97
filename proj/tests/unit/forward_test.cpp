#include <cmath>

#include <gtest/gtest.h>

#include "phdiff/energy.hpp"
#include "phdiff/error.hpp"
#include "phdiff/forward.hpp"
#include "phdiff/sampling.hpp"
#include "phdiff/structure.hpp"

namespace phdiff {
namespace {

Vector v1(double a) { return (Vector(1) << a).finished(); }

struct Ou {
  QuadraticEnergy energy{Matrix::Identity(1, 1)};
  StructureMatrices s = validate_structure(Matrix::Zero(1, 1), Matrix::Constant(1, 1, 0.5),
                                           Matrix::Ones(1, 1));
};

// Closed-form OU moments for dx = -a x dt + sig dW, x0 ~ N(m0, v0).
std::pair<double, double> ou_oracle(double a, double sig, double m0, double v0, double t) {
  const double decay = std::exp(-a * t);
  return {m0 * decay, v0 * decay * decay + sig * sig / (2 * a) * (1 - decay * decay)};
}

TEST(TimeGrid, UniformSteps) {
  const TimeGrid g(0.0, 20.0, 0.01);
  EXPECT_EQ(g.steps(), 2000u);
  EXPECT_DOUBLE_EQ(g.time(0), 0.0);
  EXPECT_DOUBLE_EQ(g.time(2000), 20.0);
  EXPECT_DOUBLE_EQ(g.time(1000), 10.0);
}

TEST(TimeGrid, TruncatesFinalStep) {
  const TimeGrid g(0.0, 1.005, 0.01);
  EXPECT_EQ(g.steps(), 101u);
  EXPECT_DOUBLE_EQ(g.time(101), 1.005);
  EXPECT_NEAR(g.step_size(100), 0.005, 1e-15);
}

TEST(TimeGrid, RejectsBadInput) {
  EXPECT_THROW(TimeGrid(0.0, 1.0, 0.0), Error);
  EXPECT_THROW(TimeGrid(0.0, 1.0, -0.1), Error);
  EXPECT_THROW(TimeGrid(1.0, 1.0, 0.1), Error);
}

TEST(EulerMaruyamaStep, OuDriftOnly) {
  const Ou ou;
  EXPECT_DOUBLE_EQ(euler_maruyama_step(v1(1.0), 0.0, 0.01, ou.energy, ou.s, v1(0.0))[0], 0.995);
}

TEST(EulerMaruyamaStep, CriticalPointIsFixed) {
  const QuarticWellEnergy e;
  const auto s = validate_structure((Matrix(2, 2) << 0, -0.5, 0.5, 0).finished(),
                                    0.2 * Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const Vector x = (Vector(2) << 1, -1).finished();
  EXPECT_EQ(euler_maruyama_step(x, 0.0, 0.01, e, s, Vector::Zero(2)), x);
}

TEST(EulerMaruyamaStep, PureGradientDecay) {
  const QuadraticEnergy e(Matrix::Identity(3, 3));
  const auto s = validate_structure(Matrix::Zero(3, 3), Matrix::Identity(3, 3), Matrix::Zero(3, 1));
  const Vector x = (Vector(3) << 1, -2, 3).finished();
  EXPECT_TRUE(euler_maruyama_step(x, 0.0, 0.1, e, s, Vector::Zero(1)).isApprox(0.9 * x, 1e-15));
}

TEST(EulerMaruyamaStep, NoiseScalesWithRootDt) {
  const Ou ou;
  const double out = euler_maruyama_step(v1(0.0), 0.0, 0.04, ou.energy, ou.s, v1(1.0))[0];
  EXPECT_DOUBLE_EQ(out, 0.2);
}

TEST(SimulateForward, EmptyInit) {
  const Ou ou;
  const auto e = simulate_forward({}, TimeGrid(0, 1, 0.1), ou.energy, ou.s, 1);
  EXPECT_TRUE(e.trajectories.empty());
  EXPECT_TRUE(e.failures.empty());
}

TEST(SimulateForward, BitIdenticalReruns) {
  const Ou ou;
  const TimeGrid g(0, 2, 0.01);
  const auto a = simulate_forward({v1(0.3)}, g, ou.energy, ou.s, 77);
  const auto b = simulate_forward({v1(0.3)}, g, ou.energy, ou.s, 77);
  ASSERT_EQ(a.trajectories.size(), 1u);
  EXPECT_EQ(a.trajectories[0].states, b.trajectories[0].states);
  EXPECT_EQ(a.trajectories[0].seed, derive_seed(77, 0));
  const auto c = simulate_forward({v1(0.3)}, g, ou.energy, ou.s, 78);
  EXPECT_NE(a.trajectories[0].states.back(), c.trajectories[0].states.back());
}

TEST(SimulateForward, IndependentOfThreadCount) {
  const QuarticWellEnergy e;
  const auto s = validate_structure((Matrix(2, 2) << 0, -0.5, 0.5, 0).finished(),
                                    0.2 * Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  const auto init = sample_initial(NormalInit{Vector::Zero(2), 0.1}, 37, 3);
  const TimeGrid g(0, 3, 0.01);
  ForwardOptions one, many;
  one.threads = 1;
  many.threads = 5;
  const auto a = simulate_forward(init, g, e, s, 9, one);
  const auto b = simulate_forward(init, g, e, s, 9, many);
  ASSERT_EQ(a.trajectories.size(), b.trajectories.size());
  for (std::size_t k = 0; k < a.trajectories.size(); ++k) {
    EXPECT_EQ(a.trajectories[k].id, k);
    EXPECT_EQ(a.trajectories[k].states, b.trajectories[k].states);
  }
}

TEST(SimulateForward, ThinningKeepsEveryKthAndFinal) {
  const Ou ou;
  ForwardOptions o;
  o.thin = 7;
  const TimeGrid g(0, 1, 0.01);
  const auto thin = simulate_forward({v1(1.0)}, g, ou.energy, ou.s, 4, o);
  const auto full = simulate_forward({v1(1.0)}, g, ou.energy, ou.s, 4);
  const auto& t = thin.trajectories[0];
  ASSERT_EQ(t.size(), 100u / 7 + 2);
  EXPECT_EQ(t.states[1], full.trajectories[0].states[7]);
  EXPECT_EQ(t.final_state(), full.trajectories[0].final_state());
  EXPECT_DOUBLE_EQ(t.times.back(), 1.0);
  EXPECT_EQ(thin.stored_times(), t.times);
}

TEST(SimulateForward, BlowUpIsRecordedAndRunContinues) {
  const QuarticWellEnergy e;
  const auto s = validate_structure(Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Zero(2, 2));
  const std::vector<Vector> init = {(Vector(2) << 0.5, 0.5).finished(), (Vector(2) << 50, 50).finished()};
  const auto ens = simulate_forward(init, TimeGrid(0, 10, 0.5), e, s, 1);
  ASSERT_EQ(ens.trajectories.size(), 1u);
  EXPECT_EQ(ens.trajectories[0].id, 0u);
  ASSERT_EQ(ens.failures.size(), 1u);
  EXPECT_EQ(ens.failures[0].trajectory, 1u);
  EXPECT_GT(ens.failures[0].step, 0u);

  ForwardOptions strict;
  strict.blow_up = BlowUpPolicy::kThrow;
  try {
    simulate_forward(init, TimeGrid(0, 10, 0.5), e, s, 1, strict);
    FAIL();
  } catch (const NonFiniteStateError& err) {
    EXPECT_EQ(err.trajectory(), 1u);
  }
}

TEST(EnsembleStats, TwoPointSample) {
  Ensemble e{TimeGrid(0, 1, 1), {}, 0, 1, {}};
  for (double a : {-2.0, 2.0}) {
    Trajectory t;
    t.times = {0.0, 1.0};
    t.states = {v1(a), v1(a)};
    e.trajectories.push_back(t);
  }
  const auto m = ensemble_stats(e, 1);
  EXPECT_EQ(m.mean[0], 0.0);
  EXPECT_DOUBLE_EQ(m.covariance(0, 0), 8.0);
  EXPECT_EQ(m.count, 2u);
  EXPECT_THROW(ensemble_stats(e, 2), Error);
}

TEST(EnsembleStats, ConstantTrajectoriesHaveZeroCovariance) {
  Ensemble e{TimeGrid(0, 1, 1), {}, 0, 1, {}};
  for (int k = 0; k < 5; ++k) {
    Trajectory t;
    t.times = {0.0, 1.0};
    t.states = {(Vector(2) << 1, 2).finished(), (Vector(2) << 1, 2).finished()};
    e.trajectories.push_back(t);
  }
  EXPECT_EQ(ensemble_stats(e, 0).covariance, Matrix::Zero(2, 2));
  Ensemble empty{TimeGrid(0, 1, 1), {}, 0, 1, {}};
  try {
    ensemble_stats(empty, 0);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kEmptyEnsemble);
  }
}

TEST(OuMoments, ClosedForms) {
  EXPECT_NEAR(ou_analytic_moments(0.5, 1.0, 0.0, 1e3).variance, 1.0, 1e-15);
  const auto m0 = ou_analytic_moments(0.5, 1.0, 1.7, 0.0);
  EXPECT_EQ(m0.mean, 1.7);
  EXPECT_EQ(m0.variance, 0.0);
  EXPECT_NEAR(ou_analytic_moments(0.5, 1.0, 2.0, 2.0).mean, 0.7357588823428847, 1e-15);
  for (double t : {0.0, 0.3, 2.0, 9.0}) {
    const auto [m, v] = ou_oracle(0.5, 1.0, 0.4, 4.0, t);
    const auto lib = ou_analytic_moments(0.5, 1.0, 0.4, 4.0, t);
    EXPECT_NEAR(lib.mean, m, 1e-15);
    EXPECT_NEAR(lib.variance, v, 1e-14);
  }
}

// Ensemble moments at every stored time against the closed form, 4 SE.
TEST(ForwardProperties, OuMomentTracking) {
  const Ou ou;
  const auto init = sample_initial(NormalInit{v1(0.0), 1.0}, 1000, 5);
  const auto e = simulate_forward(init, TimeGrid(0, 5, 0.01), ou.energy, ou.s, 5);
  const auto times = e.stored_times();
  for (std::size_t k = 0; k < times.size(); k += 10) {
    const auto m = ensemble_stats(e, k);
    const auto [mean, var] = ou_oracle(0.5, 1.0, 0.0, 1.0, times[k]);
    EXPECT_LE(std::abs(m.mean[0] - mean), 4 * std::sqrt(var / 1000)) << "t=" << times[k];
    EXPECT_LE(std::abs(m.covariance(0, 0) - var), 4 * var * std::sqrt(2.0 / 999)) << "t=" << times[k];
  }
}

// Halving dt on a shared Brownian path moves the final variance by < 1 SE.
TEST(ForwardProperties, WeakConvergenceUnderDtHalving) {
  const Ou ou;
  const auto init = sample_initial(NormalInit{v1(0.0), 1.0}, 1000, 6);
  ForwardOptions coarse;
  coarse.noise_refinement = 2;
  const auto a = simulate_forward(init, TimeGrid(0, 20, 0.01), ou.energy, ou.s, 6, coarse);
  const auto b = simulate_forward(init, TimeGrid(0, 20, 0.005), ou.energy, ou.s, 6);
  const double va = ensemble_stats(a, a.stored_times().size() - 1).covariance(0, 0);
  const double vb = ensemble_stats(b, b.stored_times().size() - 1).covariance(0, 0);
  EXPECT_LT(std::abs(va - vb), std::sqrt(2.0 / 999.0));
  // Shared path: trajectories stay close pathwise (strong order 1 for additive noise).
  double worst = 0.0;
  for (std::size_t k = 0; k < a.trajectories.size(); ++k) {
    worst = std::max(worst, std::abs(a.trajectories[k].final_state()[0] - b.trajectories[k].final_state()[0]));
  }
  EXPECT_LT(worst, 0.05);
}

}  // namespace
}  // namespace phdiff

#include <cmath>

#include <gtest/gtest.h>

#include "phdiff/energy.hpp"
#include "phdiff/error.hpp"
#include "phdiff/reverse.hpp"
#include "phdiff/sampling.hpp"
#include "phdiff/structure.hpp"

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
const std::vector<Vector> kMinima = {v2(1, 1), v2(-1, 1), v2(-1, -1), v2(1, -1)};

IntegratorConfig tight() {
  IntegratorConfig c;
  c.rel_tol = 1e-10;
  c.abs_tol = 1e-14;
  c.n_eval = 200;
  return c;
}

TEST(FeedbackControl, Examples) {
  EXPECT_DOUBLE_EQ(feedback_control(kUnit, kOu, v1(2.0), 0.0)[0], -2.0);
  EXPECT_EQ(feedback_control(kQuartic, kFourWell, v2(-1, 1), 0.0), Vector::Zero(2));
  const auto no_input = validate_structure(Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Zero(2, 2));
  for (const auto& x : sample_box(2, 2.0, 50, 1)) {
    EXPECT_EQ(feedback_control(kQuartic, no_input, x, 0.0), Vector::Zero(2));
  }
}

TEST(PhVectorField, Examples) {
  EXPECT_DOUBLE_EQ(ph_vector_field(kUnit, kOu, v1(1.0), 0.0)[0], -1.5);
  EXPECT_EQ(ph_vector_field(kQuartic, kFourWell, v2(1, -1), 0.0), Vector::Zero(2));
}

TEST(PhVectorField, ComposesOpenLoopAndFeedback) {
  for (const auto& x : sample_box(2, 2.0, 1000, 2)) {
    const Vector grad = kQuartic.gradient(x, 0.0);
    const Vector composed = open_loop_field(kQuartic, kFourWell, x, 0.0) +
                            kFourWell.g() * feedback_control(kQuartic, kFourWell, x, 0.0);
    EXPECT_LE((ph_vector_field(kQuartic, kFourWell, x, 0.0) - composed).cwiseAbs().maxCoeff(),
              1e-14 * (1.0 + grad.cwiseAbs().maxCoeff()));
  }
}

// (J - R) grad H - G G^T (-grad H) = (J - R + G G^T) grad H: the exact-score
// reverse drift differs from the closed-loop field by 2 G G^T grad H.
TEST(ReverseSdeDrift, ExactScoreOffsetFromClosedLoop) {
  const ScoreFn exact = exact_score(kQuartic);
  for (const auto& x : sample_box(2, 2.0, 1000, 3)) {
    const Vector grad = kQuartic.gradient(x, 0.0);
    const Vector diff = reverse_sde_drift(kQuartic, kFourWell, x, 0.0, exact) -
                        ph_vector_field(kQuartic, kFourWell, x, 0.0);
    EXPECT_LE((diff - 2.0 * kFourWell.ggt() * grad).cwiseAbs().maxCoeff(),
              1e-13 * (1.0 + grad.cwiseAbs().maxCoeff()));
  }
}

TEST(ReverseSdeDrift, ScalarOuValues) {
  EXPECT_DOUBLE_EQ(reverse_sde_drift(kUnit, kOu, v1(1.0), 0.0, exact_score(kUnit))[0], 0.5);
  EXPECT_DOUBLE_EQ(ph_vector_field(kUnit, kOu, v1(1.0), 0.0)[0], -1.5);
}

TEST(ReverseSdeDrift, ZeroScoreIsForwardDrift) {
  const ScoreFn zero = [](const Vector& x, double) -> Vector { return Vector::Zero(x.size()); };
  for (const auto& x : sample_box(2, 2.0, 100, 4)) {
    EXPECT_EQ(reverse_sde_drift(kQuartic, kFourWell, x, 0.0, zero),
              open_loop_field(kQuartic, kFourWell, x, 0.0));
  }
}

TEST(ReverseSdeDrift, LinearInScore) {
  const double eps = 0.1;
  const ScoreFn exact = exact_score(kQuartic);
  const ScoreFn scaled = [&](const Vector& x, double t) -> Vector { return (1 + eps) * exact(x, t); };
  for (const auto& x : sample_box(2, 2.0, 1000, 5)) {
    const Vector expected = -eps * kFourWell.ggt() * exact(x, 0.0);
    const Vector got = reverse_sde_drift(kQuartic, kFourWell, x, 0.0, scaled) -
                       reverse_sde_drift(kQuartic, kFourWell, x, 0.0, exact);
    EXPECT_LE((got - expected).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + expected.cwiseAbs().maxCoeff()));
  }
}

TEST(IntegrateReverse, ScalarDecayClosedForm) {
  const auto traj = integrate_reverse(v1(4.0), 0.0, 10.0, kUnit, kOu, tight());
  EXPECT_EQ(traj.integrator, "adaptive_rk45");
  ASSERT_EQ(traj.size(), 200u);
  EXPECT_LE(std::abs(traj.final_state()[0]), 1.3e-6);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double exact = 4.0 * std::exp(-1.5 * traj.times[k]);
    EXPECT_NEAR(traj.states[k][0], exact, 1e-8 * exact + 1e-14);
  }
}

TEST(IntegrateReverse, FixedRk4Agrees) {
  IntegratorConfig c;
  c.method = IntegratorConfig::Method::kFixedRk4;
  c.dt = 0.001;
  const auto traj = integrate_reverse(v1(4.0), 0.0, 10.0, kUnit, kOu, c);
  EXPECT_EQ(traj.integrator, "fixed_rk4");
  EXPECT_NEAR(traj.final_state()[0], 4.0 * std::exp(-15.0), 1e-10);
}

TEST(IntegrateReverse, EquilibriumStaysPut) {
  const auto traj = integrate_reverse(v2(-1, 1), 0.0, 15.0, kQuartic, kFourWell, tight());
  for (const auto& x : traj.states) EXPECT_EQ(x, v2(-1, 1));
}

TEST(IntegrateReverse, FourWellStartsReachMinima) {
  const auto starts = sample_initial(NormalInit{Vector::Zero(2), 1.5}, 15, 15);
  for (const auto& x0 : starts) {
    const auto traj = integrate_reverse(x0, 0.0, 15.0, kQuartic, kFourWell, tight());
    EXPECT_TRUE(classify_equilibrium(traj.final_state(), kMinima, 1e-3).has_value())
        << "start " << x0.transpose();
  }
}

TEST(IntegrateReverse, EnergyNonIncreasing) {
  const auto starts = sample_initial(NormalInit{Vector::Zero(2), 1.5}, 15, 21);
  for (const auto& x0 : starts) {
    const auto traj = integrate_reverse(x0, 0.0, 15.0, kQuartic, kFourWell, tight());
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
      const double h = kQuartic.value(traj.states[k], 0.0);
      EXPECT_LE(kQuartic.value(traj.states[k + 1], 0.0), h + 1e-9 * (1.0 + std::abs(h)));
    }
  }
}

TEST(IntegrateReverse, PairwiseContractionScalar) {
  const auto a = integrate_reverse(v1(3.0), 0.0, 10.0, kUnit, kOu, tight());
  const auto b = integrate_reverse(v1(-1.0), 0.0, 10.0, kUnit, kOu, tight());
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double expected = 4.0 * std::exp(-1.5 * a.times[k]);
    EXPECT_NEAR(std::abs(a.states[k][0] - b.states[k][0]), expected, 1e-6 * expected);
  }
}

TEST(IntegrateReverse, ConstantPerturbationShiftsEquilibrium) {
  const ConstantPerturbation delta(v1(0.1));
  for (double x0 : {-5.0, 2.0, 5.0}) {
    const auto traj = integrate_reverse(v1(x0), 0.0, 20.0, kUnit, kOu, tight(), &delta);
    EXPECT_NEAR(std::abs(traj.final_state()[0]), 0.1, 1e-6);
  }
}

TEST(Perturbation, SinusoidRespectsBound) {
  const SinusoidalPerturbation p(v2(0.3, -0.4), 2.0);
  EXPECT_DOUBLE_EQ(p.bound(), 0.5);
  for (int k = 0; k < 200; ++k) {
    const double t = 0.05 * k;
    EXPECT_LE(p.delta(v2(0, 0), t).norm(), p.bound() + 1e-15);
  }
  EXPECT_DOUBLE_EQ(p.delta(v2(0, 0), 0.25)[0], 0.3 * std::sin(0.5));
}

// H(x, t) = (1 + t) x^2 / 2: the sampler must query the energy at t0 + t1 - tau.
class RampEnergy final : public EnergyModel {
 public:
  std::string name() const override { return "ramp"; }
  Index dim() const override { return 1; }
  double value(const Vector& x, double t) const override { return 0.5 * (1 + t) * x[0] * x[0]; }
  Vector gradient(const Vector& x, double t) const override { return (1 + t) * x; }
  double time_derivative(const Vector& x, double) const override { return 0.5 * x[0] * x[0]; }
  bool autonomous() const override { return false; }
};

TEST(IntegrateReverse, TimeDependentEnergyUsesMirroredClock) {
  const RampEnergy e;
  const double t0 = 1.0, t1 = 3.0;
  const auto traj = integrate_reverse(v1(2.0), t0, t1, e, kOu, tight());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double s = traj.times[k] - t0;
    // x' = -1.5 (1 + t0 + t1 - tau) x, integrated from t0.
    const double exponent = -1.5 * ((1 + t0 + t1) * s - 0.5 * (traj.times[k] * traj.times[k] - t0 * t0));
    EXPECT_NEAR(traj.states[k][0], 2.0 * std::exp(exponent), 1e-8);
  }
}

TEST(IntegratorConfig, Validation) {
  IntegratorConfig c;
  EXPECT_NO_THROW(c.validate());
  c.rel_tol = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = IntegratorConfig{};
  c.method = IntegratorConfig::Method::kFixedRk4;
  c.dt = -1.0;
  EXPECT_THROW(c.validate(), Error);
  c = IntegratorConfig{};
  c.n_eval = 1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(ClassifyEquilibrium, Examples) {
  EXPECT_EQ(classify_equilibrium(v2(0.9995, -1.0002), kMinima, 1e-2), 3u);
  EXPECT_FALSE(classify_equilibrium(v2(0, 0), kMinima, 1e-3).has_value());
  for (std::size_t i = 0; i < kMinima.size(); ++i) EXPECT_EQ(classify_equilibrium(kMinima[i], kMinima), i);
  try {
    classify_equilibrium(v2(0, 0), kMinima, 1.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAmbiguousMinima);
  }
}

// Stochastic sampler with the exact score for OU: x <- x - 0.5 x dtau + dW,
// whose Euler-Maruyama stationary variance is dt / (1 - (1 - 0.5 dt)^2).
TEST(SimulateReverseSde, OuStationaryLaw) {
  const auto init = sample_initial(NormalInit{v1(0.0), 1.0}, 2000, 8);
  const auto e = simulate_reverse_sde(init, TimeGrid(0, 10, 0.01), kUnit, kOu, exact_score(kUnit), 8);
  ASSERT_EQ(e.trajectories.size(), 2000u);
  EXPECT_EQ(e.trajectories[0].integrator, "reverse_euler_maruyama");
  const auto m = ensemble_stats(e, e.stored_times().size() - 1);
  const double target = 0.01 / (1 - 0.995 * 0.995);
  EXPECT_NEAR(m.covariance(0, 0), target, 4 * target * std::sqrt(2.0 / 1999));
  EXPECT_NEAR(m.mean[0], 0.0, 4 * std::sqrt(target / 2000));
}

}  // namespace
}  // namespace phdiff

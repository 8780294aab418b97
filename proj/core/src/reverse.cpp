#include "phdiff/reverse.hpp"

#include <cmath>
#include <string>

#include "phdiff/error.hpp"
#include "phdiff/ode.hpp"

namespace phdiff {
namespace {

void check_model(const EnergyModel& model, const StructureMatrices& s, const Vector& x) {
  require_dim("energy model", model.dim(), s.n());
  require_dim("x", x.size(), s.n());
}

}  // namespace

Vector SinusoidalPerturbation::delta(const Vector&, double t) const {
  return amplitude_ * std::sin(omega_ * t);
}

void IntegratorConfig::validate() const {
  if (method == Method::kFixedRk4 && !(dt > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "integrator dt must be positive");
  }
  if (method == Method::kAdaptiveRk45 && (!(rel_tol > 0.0) || !(abs_tol > 0.0))) {
    throw Error(ErrorCode::kInvalidArgument, "integrator tolerances must be positive");
  }
  if (n_eval < 2) throw Error(ErrorCode::kInvalidArgument, "n_eval must be at least 2");
}

ScoreFn exact_score(const EnergyModel& model) {
  return [&model](const Vector& x, double t) { return score(model, x, t); };
}

Vector feedback_control(const EnergyModel& model, const StructureMatrices& s, const Vector& x,
                        double t) {
  check_model(model, s, x);
  return -(s.g().transpose() * model.gradient(x, t));
}

Vector open_loop_field(const EnergyModel& model, const StructureMatrices& s, const Vector& x,
                       double t) {
  check_model(model, s, x);
  return s.open_loop() * model.gradient(x, t);
}

Vector ph_vector_field(const EnergyModel& model, const StructureMatrices& s, const Vector& x,
                       double t) {
  check_model(model, s, x);
  return s.closed_loop() * model.gradient(x, t);
}

Vector reverse_sde_drift(const EnergyModel& model, const StructureMatrices& s, const Vector& x,
                         double t, const ScoreFn& score_fn) {
  check_model(model, s, x);
  const Vector sc = score_fn(x, t);
  require_dim("score", sc.size(), s.n());
  return s.open_loop() * model.gradient(x, t) - s.ggt() * sc;
}

Trajectory integrate_reverse(const Vector& x0, double t0, double t1, const EnergyModel& model,
                             const StructureMatrices& s, const IntegratorConfig& cfg,
                             const PerturbationModel* perturbation) {
  check_model(model, s, x0);
  cfg.validate();
  if (!(t1 > t0)) throw Error(ErrorCode::kInvalidArgument, "reverse span must be increasing");

  const double mirror = t0 + t1;
  const Matrix& closed = s.closed_loop();
  const VectorField field = [&](double tau, const Vector& x) -> Vector {
    Vector grad = model.gradient(x, mirror - tau);
    if (perturbation != nullptr) grad += perturbation->delta(x, tau);
    return closed * grad;
  };

  const auto times = linspace(t0, t1, cfg.n_eval);
  OdeSolution sol;
  Trajectory traj;
  if (cfg.method == IntegratorConfig::Method::kFixedRk4) {
    sol = integrate_rk4(field, x0, times, cfg.dt);
    traj.integrator = "fixed_rk4";
  } else {
    AdaptiveOptions options;
    options.rel_tol = cfg.rel_tol;
    options.abs_tol = cfg.abs_tol;
    options.max_step = cfg.max_step;
    sol = integrate_dopri5(field, x0, times, options);
    traj.integrator = "adaptive_rk45";
  }
  traj.times = std::move(sol.times);
  traj.states = std::move(sol.states);
  return traj;
}

Ensemble simulate_reverse_sde(const std::vector<Vector>& init, const TimeGrid& grid,
                              const EnergyModel& model, const StructureMatrices& s,
                              const ScoreFn& score_fn, std::uint64_t base_seed,
                              const ForwardOptions& options) {
  require_dim("energy model", model.dim(), s.n());
  const double mirror = grid.t_start() + grid.t_end();
  // x(t - dtau) = x(t) - b(x, t) dtau + G dW for the reverse-time SDE
  // dx = b dt + G dW_bar, with t = t_start + t_end - tau.
  const DriftFn drift = [&](const Vector& x, double tau) -> Vector {
    return -reverse_sde_drift(model, s, x, mirror - tau, score_fn);
  };
  return simulate_sde(init, grid, drift, s.g(), base_seed, StreamDomain::kReverseNoise,
                      "reverse_euler_maruyama", options);
}

std::optional<std::size_t> classify_equilibrium(const Vector& x, const std::vector<Vector>& minima,
                                                double tol) {
  if (minima.empty()) throw Error(ErrorCode::kInvalidArgument, "no minima to classify against");
  if (!(tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "tolerance must be positive");
  for (std::size_t a = 0; a < minima.size(); ++a) {
    require_dim("minimum", minima[a].size(), x.size());
    for (std::size_t b = a + 1; b < minima.size(); ++b) {
      if ((minima[a] - minima[b]).norm() <= 2.0 * tol) {
        throw Error(ErrorCode::kAmbiguousMinima,
                    "minima " + std::to_string(a) + " and " + std::to_string(b) +
                        " are within 2*tol of each other");
      }
    }
  }
  for (std::size_t i = 0; i < minima.size(); ++i) {
    if ((x - minima[i]).norm() <= tol) return i;
  }
  return std::nullopt;
}

}  // namespace phdiff

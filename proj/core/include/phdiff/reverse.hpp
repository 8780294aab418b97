#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "phdiff/energy.hpp"
#include "phdiff/forward.hpp"
#include "phdiff/structure.hpp"
#include "phdiff/types.hpp"

namespace phdiff {

// Bounded additive error on the energy gradient: the perturbed closed loop is
// x' = (J - R - G G^T)(grad H + delta(x, t)).
class PerturbationModel {
 public:
  virtual ~PerturbationModel() = default;
  virtual Vector delta(const Vector& x, double t) const = 0;
  // Declared sup-norm bound on |delta|.
  virtual double bound() const = 0;
};

class ConstantPerturbation final : public PerturbationModel {
 public:
  explicit ConstantPerturbation(Vector value) : value_(std::move(value)) {}
  Vector delta(const Vector&, double) const override { return value_; }
  double bound() const override { return value_.norm(); }
  const Vector& value() const noexcept { return value_; }

 private:
  Vector value_;
};

// amplitude * sin(omega t), componentwise.
class SinusoidalPerturbation final : public PerturbationModel {
 public:
  SinusoidalPerturbation(Vector amplitude, double omega)
      : amplitude_(std::move(amplitude)), omega_(omega) {}
  Vector delta(const Vector& x, double t) const override;
  double bound() const override { return amplitude_.norm(); }

 private:
  Vector amplitude_;
  double omega_;
};

struct IntegratorConfig {
  enum class Method { kFixedRk4, kAdaptiveRk45 };

  Method method = Method::kAdaptiveRk45;
  double dt = 0.01;  // fixed_rk4 only
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;
  double max_step = 0.0;  // <= 0: unbounded
  std::size_t n_eval = 200;  // evenly spaced output points over the span

  // Throws Error(kInvalidArgument).
  void validate() const;
};

using ScoreFn = std::function<Vector(const Vector& x, double t)>;

// Exact energy-based score -grad H as a callable.
ScoreFn exact_score(const EnergyModel& model);

// Output-feedback law u = -G^T grad H.
Vector feedback_control(const EnergyModel& model, const StructureMatrices& s, const Vector& x,
                        double t);

// (J - R) grad H: the forward drift, equivalently the uncontrolled plant.
Vector open_loop_field(const EnergyModel& model, const StructureMatrices& s, const Vector& x,
                       double t);

// Closed-loop PH vector field (J - R - G G^T) grad H.
Vector ph_vector_field(const EnergyModel& model, const StructureMatrices& s, const Vector& x,
                       double t);

// Drift of the exact time-reversed forward SDE, written in forward time:
// (J - R) grad H - G G^T score(x, t).
Vector reverse_sde_drift(const EnergyModel& model, const StructureMatrices& s, const Vector& x,
                         double t, const ScoreFn& score_fn);

// Deterministic closed-loop sampler on its own clock tau in [t0, t1]. The
// energy is queried at t0 + t1 - tau (a no-op for autonomous energies); the
// perturbation at tau. No randomness.
Trajectory integrate_reverse(const Vector& x0, double t0, double t1, const EnergyModel& model,
                             const StructureMatrices& s, const IntegratorConfig& cfg,
                             const PerturbationModel* perturbation = nullptr);

// Stochastic reverse sampler: Euler-Maruyama on the reverse-time SDE, stepping
// the forward-time clock backwards from grid.t_end() to grid.t_start(). The
// returned trajectories are indexed by the sampler clock tau.
Ensemble simulate_reverse_sde(const std::vector<Vector>& init, const TimeGrid& grid,
                              const EnergyModel& model, const StructureMatrices& s,
                              const ScoreFn& score_fn, std::uint64_t base_seed,
                              const ForwardOptions& options = {});

inline constexpr double kDefaultEquilibriumTolerance = 1e-3;

// Index of the listed minimum within distance tol of x, if any. Throws
// Error(kAmbiguousMinima) if two minima are within 2 tol of each other.
std::optional<std::size_t> classify_equilibrium(const Vector& x, const std::vector<Vector>& minima,
                                                double tol = kDefaultEquilibriumTolerance);

}  // namespace phdiff

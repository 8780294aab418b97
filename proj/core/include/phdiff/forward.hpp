#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phdiff/energy.hpp"
#include "phdiff/random.hpp"
#include "phdiff/structure.hpp"
#include "phdiff/types.hpp"

namespace phdiff {

// Uniform grid t_start + k dt; the last step is shortened to land on t_end.
class TimeGrid {
 public:
  // Throws Error(kInvalidArgument) unless dt > 0 and t_end > t_start.
  TimeGrid(double t_start, double t_end, double dt);

  double t_start() const noexcept { return t_start_; }
  double t_end() const noexcept { return t_end_; }
  double dt() const noexcept { return dt_; }
  std::size_t steps() const noexcept { return steps_; }
  double time(std::size_t k) const noexcept;
  double step_size(std::size_t k) const noexcept { return time(k + 1) - time(k); }

 private:
  double t_start_;
  double t_end_;
  double dt_;
  std::size_t steps_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::optional<std::uint64_t> seed;
  std::string integrator;
  std::size_t id = 0;

  std::size_t size() const noexcept { return times.size(); }
  const Vector& final_state() const { return states.back(); }
};

struct TrajectoryFailure {
  std::size_t trajectory;
  std::size_t step;
  double time;
};

struct Ensemble {
  TimeGrid grid;
  std::vector<Trajectory> trajectories;  // successful members, ordered by id
  std::uint64_t base_seed = 0;
  std::size_t thin = 1;
  std::vector<TrajectoryFailure> failures;

  // Stored time points shared by all members.
  std::vector<double> stored_times() const;
};

enum class BlowUpPolicy { kRecord, kThrow };

struct ForwardOptions {
  // Store every `thin`-th step plus the final state.
  std::size_t thin = 1;
  // 0 selects hardware concurrency. Output does not depend on this.
  unsigned threads = 0;
  // Each step's Wiener increment is assembled from `noise_refinement` finer
  // increments, so a run at dt with refinement 2 shares its Brownian path
  // with a run at dt/2 with refinement 1.
  unsigned noise_refinement = 1;
  BlowUpPolicy blow_up = BlowUpPolicy::kRecord;
};

// x + drift dt + G sqrt(dt) noise. Throws NonFiniteStateError (step 0) on
// NaN/Inf output.
Vector em_step(const Vector& x, const Vector& drift, const Matrix& g, double dt,
               const Vector& noise);

// One Euler-Maruyama step of dx = (J - R) grad H dt + G dW.
Vector euler_maruyama_step(const Vector& x, double t, double dt, const EnergyModel& model,
                           const StructureMatrices& s, const Vector& noise);

using DriftFn = std::function<Vector(const Vector& x, double t)>;

// Generic additive-noise Euler-Maruyama ensemble: dx = drift(x, t) dt + G dW.
// Member k draws its noise from derive_seed(base_seed, k) within `domain`.
Ensemble simulate_sde(const std::vector<Vector>& init, const TimeGrid& grid, const DriftFn& drift,
                      const Matrix& g, std::uint64_t base_seed, StreamDomain domain,
                      const std::string& integrator_tag, const ForwardOptions& options = {});

// One trajectory per initial state; member k draws its noise from
// derive_seed(base_seed, k). Bit-identical for any thread count.
Ensemble simulate_forward(const std::vector<Vector>& init, const TimeGrid& grid,
                          const EnergyModel& model, const StructureMatrices& s,
                          std::uint64_t base_seed, const ForwardOptions& options = {});

struct EnsembleMoments {
  Vector mean;
  Matrix covariance;  // unbiased (n - 1 divisor); zero for a single member
  std::size_t count = 0;
};

// Moments across members at stored time index t_index. Throws
// Error(kEmptyEnsemble) or Error(kInvalidArgument) for a bad index.
EnsembleMoments ensemble_stats(const Ensemble& e, std::size_t t_index);

struct OuMoments {
  double mean;
  double variance;
};

// dx = -alpha x dt + sigma dW from a point x0.
OuMoments ou_analytic_moments(double alpha, double sigma, double x0, double t);

// Same, from x0 ~ N(mean0, var0).
OuMoments ou_analytic_moments(double alpha, double sigma, double mean0, double var0, double t);

}  // namespace phdiff

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "phdiff/energy.hpp"
#include "phdiff/forward.hpp"
#include "phdiff/report.hpp"
#include "phdiff/structure.hpp"
#include "phdiff/types.hpp"

namespace phdiff {

struct EnergySample {
  double time;
  double energy;
};

// Storage function H evaluated at every stored state.
std::vector<EnergySample> energy_along_trajectory(const Trajectory& traj, const EnergyModel& model);

// Dissipation rate -grad H^T (R + G G^T) grad H at x.
double closed_loop_energy_rate(const EnergyModel& model, const StructureMatrices& s,
                               const Vector& x, double t);

struct LyapunovCheckOptions {
  // Per-step allowance: H(k+1) <= H(k) + slack_rel (1 + |H(k)|).
  double slack_rel = 1e-9;
  // Relative tolerance for the centred-difference rate; unset keeps the rate
  // comparison descriptive.
  std::optional<double> rate_tolerance;
  // Interior points with |predicted rate| at or below this are not compared.
  double rate_floor = 1e-9;
};

// Monotone decay of H along an unperturbed reverse trajectory, plus the
// centred-difference dH/dt compared with the closed-loop dissipation rate.
// Returns "lyapunov_monotone" and "lyapunov_rate" records.
std::vector<CheckRecord> lyapunov_rate_check(const Trajectory& traj, const EnergyModel& model,
                                             const StructureMatrices& s,
                                             const LyapunovCheckOptions& options = {});

struct EnergyBalanceOptions {
  // Discretization allowance coefficient: budget term c * dt.
  double discretization_c = 0.0;
  // Monte Carlo allowance in standard errors; <= 0 selects a Bonferroni
  // bound over the interior points at family-wise level `family_alpha`.
  double mc_sigmas = 0.0;
  double family_alpha = 1e-3;
  std::size_t min_trajectories = 100;
};

struct EnergyBalanceReport {
  std::vector<double> times;      // interior stored times
  std::vector<double> lhs;        // centred difference of the ensemble-mean energy
  std::vector<double> rhs;        // E[dH/dt] - E[grad H^T R grad H] + 1/2 E[Tr(G G^T Hess H)]
  std::vector<double> mc_stderr;  // standard error of lhs - rhs across members
  double mc_sigmas = 0.0;
  double discretization_allowance = 0.0;  // c * dt
  double max_normalized_residual = 0.0;
  std::size_t worst_index = 0;
};

// Ito energy balance for an unthinned forward ensemble. Throws
// Error(kInsufficientEnsemble) below options.min_trajectories members and
// Error(kInvalidArgument) for thinned storage.
EnergyBalanceReport empirical_energy_balance(const Ensemble& e, const EnergyModel& model,
                                             const StructureMatrices& s,
                                             const EnergyBalanceOptions& options = {});

struct DiscretizationCalibration {
  double c = 0.0;
  double coarse_dt = 0.0;
  std::vector<double> window_bias;  // coarse minus fine windowed mean residual
};

// Estimates c in the c * dt allowance by a dt-halving pair of runs that share
// their Brownian paths. The windowed mean of (lhs - rhs) cancels most of the
// Monte Carlo noise; c = 2 max|bias(dt) - bias(dt/2)| / dt.
DiscretizationCalibration calibrate_discretization_constant(
    const std::vector<Vector>& init, const TimeGrid& grid, const EnergyModel& model,
    const StructureMatrices& s, std::uint64_t base_seed, unsigned threads = 0);

// Passive output y = G^T grad H; feedback_control is exactly -y.
Vector passivity_output(const EnergyModel& model, const StructureMatrices& s, const Vector& x,
                        double t);

// Empirical W2 via the quantile coupling. Equal sizes pair order statistics;
// otherwise both quantile functions are linearly interpolated on a common grid.
double wasserstein2_1d(std::vector<double> a, std::vector<double> b);

// Root mean square of projected W2 over seeded uniform unit directions.
double sliced_wasserstein2(const std::vector<Vector>& a, const std::vector<Vector>& b,
                           std::size_t n_projections, std::uint64_t seed);

// Upper standard-normal quantile z with P(|Z| > z) = p.
double two_sided_normal_quantile(double p);

}  // namespace phdiff

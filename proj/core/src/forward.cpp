#include "phdiff/forward.hpp"

#include <cmath>
#include <span>

#include "parallel.hpp"
#include "phdiff/error.hpp"
#include "phdiff/random.hpp"

namespace phdiff {
namespace {

bool all_finite(const Vector& x) { return x.allFinite(); }

}  // namespace

TimeGrid::TimeGrid(double t_start, double t_end, double dt)
    : t_start_(t_start), t_end_(t_end), dt_(dt), steps_(0) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::kInvalidArgument, "time step dt must be positive, got " + std::to_string(dt));
  }
  if (!(t_end > t_start)) {
    throw Error(ErrorCode::kInvalidArgument, "t_end must exceed t_start");
  }
  // Absorb representation error so that 20 / 0.01 gives 2000 steps, not 2001.
  const double ratio = (t_end - t_start) / dt;
  steps_ = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * std::max(1.0, ratio)));
  if (steps_ == 0) steps_ = 1;
}

double TimeGrid::time(std::size_t k) const noexcept {
  if (k >= steps_) return t_end_;
  return t_start_ + static_cast<double>(k) * dt_;
}

std::vector<double> Ensemble::stored_times() const {
  if (!trajectories.empty()) return trajectories.front().times;
  std::vector<double> times;
  for (std::size_t k = 0; k <= grid.steps(); ++k) {
    if (k % thin == 0 || k == grid.steps()) times.push_back(grid.time(k));
  }
  return times;
}

Vector em_step(const Vector& x, const Vector& drift, const Matrix& g, double dt,
               const Vector& noise) {
  require_dim("drift", drift.size(), x.size());
  require_dim("noise", noise.size(), g.cols());
  Vector next = x + dt * drift + std::sqrt(dt) * (g * noise);
  if (!all_finite(next)) throw NonFiniteStateError(0, 0.0);
  return next;
}

Vector euler_maruyama_step(const Vector& x, double t, double dt, const EnergyModel& model,
                           const StructureMatrices& s, const Vector& noise) {
  require_dim("x", x.size(), s.n());
  require_dim("energy model", model.dim(), s.n());
  const Vector drift = s.open_loop() * model.gradient(x, t);
  return em_step(x, drift, s.g(), dt, noise);
}

Ensemble simulate_sde(const std::vector<Vector>& init, const TimeGrid& grid, const DriftFn& drift,
                      const Matrix& g, std::uint64_t base_seed, StreamDomain domain,
                      const std::string& integrator_tag, const ForwardOptions& options) {
  for (const auto& x0 : init) require_dim("initial state", x0.size(), g.rows());
  if (options.thin == 0) throw Error(ErrorCode::kInvalidArgument, "thin must be >= 1");
  if (options.noise_refinement == 0) {
    throw Error(ErrorCode::kInvalidArgument, "noise_refinement must be >= 1");
  }

  const std::size_t steps = grid.steps();
  const std::size_t thin = options.thin;
  const unsigned refine = options.noise_refinement;
  const Index m = g.cols();
  const auto width = static_cast<std::size_t>(m);

  std::vector<Trajectory> slots(init.size());
  std::vector<std::optional<TrajectoryFailure>> failed(init.size());

  detail::parallel_for(init.size(), options.threads, [&](std::size_t k) {
    const std::uint64_t seed = derive_seed(base_seed, k);
    const RandomStream stream(seed, domain);
    Trajectory traj;
    traj.id = k;
    traj.seed = seed;
    traj.integrator = integrator_tag;
    traj.times.reserve(steps / thin + 2);
    traj.states.reserve(steps / thin + 2);

    Vector x = init[k];
    Vector noise(m);
    Vector fine(m);
    traj.times.push_back(grid.time(0));
    traj.states.push_back(x);
    for (std::size_t step = 0; step < steps; ++step) {
      const double t = grid.time(step);
      if (refine == 1) {
        stream.fill_normal(step, std::span<double>(noise.data(), width));
      } else {
        noise.setZero();
        for (unsigned r = 0; r < refine; ++r) {
          stream.fill_normal(step * refine + r, std::span<double>(fine.data(), width));
          noise += fine;
        }
        noise /= std::sqrt(static_cast<double>(refine));
      }
      try {
        x = em_step(x, drift(x, t), g, grid.step_size(step), noise);
      } catch (const NonFiniteStateError&) {
        if (options.blow_up == BlowUpPolicy::kThrow) {
          throw NonFiniteStateError(step + 1, grid.time(step + 1), k);
        }
        failed[k] = TrajectoryFailure{k, step + 1, grid.time(step + 1)};
        return;
      }
      const std::size_t index = step + 1;
      if (index % thin == 0 || index == steps) {
        traj.times.push_back(grid.time(index));
        traj.states.push_back(x);
      }
    }
    slots[k] = std::move(traj);
  });

  Ensemble out{grid, {}, base_seed, thin, {}};
  out.trajectories.reserve(init.size());
  for (std::size_t k = 0; k < init.size(); ++k) {
    if (failed[k]) {
      out.failures.push_back(*failed[k]);
    } else {
      out.trajectories.push_back(std::move(slots[k]));
    }
  }
  return out;
}

Ensemble simulate_forward(const std::vector<Vector>& init, const TimeGrid& grid,
                          const EnergyModel& model, const StructureMatrices& s,
                          std::uint64_t base_seed, const ForwardOptions& options) {
  require_dim("energy model", model.dim(), s.n());
  const DriftFn drift = [&](const Vector& x, double t) -> Vector {
    return s.open_loop() * model.gradient(x, t);
  };
  return simulate_sde(init, grid, drift, s.g(), base_seed, StreamDomain::kForwardNoise,
                      "euler_maruyama", options);
}

EnsembleMoments ensemble_stats(const Ensemble& e, std::size_t t_index) {
  if (e.trajectories.empty()) {
    throw Error(ErrorCode::kEmptyEnsemble, "ensemble has no trajectories");
  }
  const std::size_t stored = e.trajectories.front().size();
  if (t_index >= stored) {
    throw Error(ErrorCode::kInvalidArgument, "time index " + std::to_string(t_index) +
                                                 " outside stored grid of " +
                                                 std::to_string(stored) + " points");
  }
  const Index n = e.trajectories.front().states[t_index].size();
  const std::size_t count = e.trajectories.size();
  Vector mean = Vector::Zero(n);
  for (const auto& traj : e.trajectories) mean += traj.states[t_index];
  mean /= static_cast<double>(count);

  Matrix cov = Matrix::Zero(n, n);
  if (count > 1) {
    for (const auto& traj : e.trajectories) {
      const Vector d = traj.states[t_index] - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(count - 1);
  }
  return {std::move(mean), std::move(cov), count};
}

OuMoments ou_analytic_moments(double alpha, double sigma, double x0, double t) {
  return ou_analytic_moments(alpha, sigma, x0, 0.0, t);
}

OuMoments ou_analytic_moments(double alpha, double sigma, double mean0, double var0, double t) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidArgument, "OU alpha must be positive");
  const double decay = std::exp(-alpha * t);
  const double stationary = sigma * sigma / (2.0 * alpha);
  return {mean0 * decay, var0 * decay * decay + stationary * (1.0 - decay * decay)};
}

}  // namespace phdiff

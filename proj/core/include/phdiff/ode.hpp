#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "phdiff/types.hpp"

namespace phdiff {

using VectorField = std::function<Vector(double t, const Vector& x)>;

struct OdeSolution {
  std::vector<double> times;
  std::vector<Vector> states;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t evaluations = 0;
};

// Classic fixed-step RK4. Steps are shortened where needed to land exactly on
// each requested output time. `output_times` must be non-decreasing; the
// first entry is the initial time.
OdeSolution integrate_rk4(const VectorField& f, const Vector& x0,
                          const std::vector<double>& output_times, double dt);

struct AdaptiveOptions {
  double rel_tol = 1e-6;
  double abs_tol = 1e-9;
  double max_step = 0.0;   // <= 0: unbounded
  double min_step = 0.0;   // <= 0: 1e-14 * max(1, |t|)
  std::size_t max_steps = 10'000'000;
};

// Dormand-Prince 5(4) with FSAL and a PI step-size controller. Throws
// Error(kStepFailure) when the step underflows min_step or max_steps is
// exhausted, NonFiniteStateError when an accepted state is not finite.
OdeSolution integrate_dopri5(const VectorField& f, const Vector& x0,
                             const std::vector<double>& output_times,
                             const AdaptiveOptions& options = {});

// n evenly spaced points covering [t0, t1] inclusive (n >= 2).
std::vector<double> linspace(double t0, double t1, std::size_t n);

}  // namespace phdiff

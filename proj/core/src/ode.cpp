#include "phdiff/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "phdiff/error.hpp"

namespace phdiff {
namespace {

void check_times(const std::vector<double>& times) {
  if (times.empty()) throw Error(ErrorCode::kInvalidArgument, "no output times requested");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] < times[i - 1]) {
      throw Error(ErrorCode::kInvalidArgument, "output times must be non-decreasing");
    }
  }
}

Vector eval(const VectorField& f, double t, const Vector& x, std::size_t& counter) {
  ++counter;
  return f(t, x);
}

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b_hat (error estimate weights).
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(const Vector& err, const Vector& x, const Vector& x_new,
                  const AdaptiveOptions& o) {
  if (err.size() == 0) return 0.0;
  const Vector scale =
      (o.abs_tol + o.rel_tol * x.cwiseAbs().cwiseMax(x_new.cwiseAbs()).array()).matrix();
  const double value = std::sqrt((err.cwiseQuotient(scale)).squaredNorm() / err.size());
  return std::isfinite(value) ? value : std::numeric_limits<double>::infinity();
}

double initial_step(const VectorField& f, double t0, const Vector& x0, const Vector& f0,
                    const AdaptiveOptions& o, std::size_t& counter) {
  if (x0.size() == 0) return 1.0;
  const Vector scale = (o.abs_tol + o.rel_tol * x0.cwiseAbs().array()).matrix();
  const double d0 = std::sqrt(x0.cwiseQuotient(scale).squaredNorm() / x0.size());
  const double d1 = std::sqrt(f0.cwiseQuotient(scale).squaredNorm() / x0.size());
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  const Vector f1 = eval(f, t0 + h0, x0 + h0 * f0, counter);
  const double d2 = std::sqrt((f1 - f0).cwiseQuotient(scale).squaredNorm() / x0.size()) / h0;
  const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                              : std::pow(0.01 / std::max(d1, d2), 1.0 / 5.0);
  return std::min(100.0 * h0, h1);
}

}  // namespace

std::vector<double> linspace(double t0, double t1, std::size_t n) {
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "linspace needs at least 2 points");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  out.back() = t1;
  return out;
}

OdeSolution integrate_rk4(const VectorField& f, const Vector& x0,
                          const std::vector<double>& output_times, double dt) {
  check_times(output_times);
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "RK4 step must be positive");
  OdeSolution sol;
  Vector x = x0;
  double t = output_times.front();
  sol.times.push_back(t);
  sol.states.push_back(x);
  for (std::size_t i = 1; i < output_times.size(); ++i) {
    const double target = output_times[i];
    while (t < target) {
      double h = dt;
      // Snap onto the target instead of leaving a sliver step.
      if (t + h >= target - 1e-12 * std::max(1.0, std::abs(target))) h = target - t;
      const Vector k1 = eval(f, t, x, sol.evaluations);
      const Vector k2 = eval(f, t + 0.5 * h, x + 0.5 * h * k1, sol.evaluations);
      const Vector k3 = eval(f, t + 0.5 * h, x + 0.5 * h * k2, sol.evaluations);
      const Vector k4 = eval(f, t + h, x + h * k3, sol.evaluations);
      x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t = (h == target - t) ? target : t + h;
      ++sol.accepted_steps;
      if (!x.allFinite()) throw NonFiniteStateError(sol.accepted_steps, t);
    }
    t = target;
    sol.times.push_back(t);
    sol.states.push_back(x);
  }
  return sol;
}

OdeSolution integrate_dopri5(const VectorField& f, const Vector& x0,
                             const std::vector<double>& output_times,
                             const AdaptiveOptions& o) {
  check_times(output_times);
  if (!(o.rel_tol > 0.0) || !(o.abs_tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tolerances must be positive");
  }
  if (!x0.allFinite()) throw NonFiniteStateError(0, output_times.front());

  constexpr double kSafety = 0.9;
  constexpr double kMinFactor = 0.2;
  constexpr double kMaxFactor = 10.0;
  constexpr double kAlpha = 0.2 - 0.04 * 0.75;
  constexpr double kBeta = 0.04;

  OdeSolution sol;
  double t = output_times.front();
  Vector x = x0;
  sol.times.push_back(t);
  sol.states.push_back(x);
  if (output_times.size() == 1) return sol;

  Vector k1 = eval(f, t, x, sol.evaluations);
  double h = initial_step(f, t, x, k1, o, sol.evaluations);
  if (o.max_step > 0.0) h = std::min(h, o.max_step);
  double err_prev = 1e-4;
  bool last_rejected = false;

  for (std::size_t i = 1; i < output_times.size(); ++i) {
    const double target = output_times[i];
    while (t < target) {
      const double min_step = o.min_step > 0.0 ? o.min_step : 1e-14 * std::max(1.0, std::abs(t));
      if (sol.accepted_steps + sol.rejected_steps >= o.max_steps) {
        throw Error(ErrorCode::kStepFailure, "exceeded " + std::to_string(o.max_steps) +
                                                 " steps before t=" + std::to_string(target));
      }
      if (h < min_step) {
        throw Error(ErrorCode::kStepFailure,
                    "step size " + std::to_string(h) + " underflowed at t=" + std::to_string(t));
      }
      bool lands = false;
      double step = h;
      if (t + step >= target - 1e-12 * std::max(1.0, std::abs(target))) {
        step = target - t;
        lands = true;
      }

      const Vector k2 = eval(f, t + c2 * step, x + step * (a21 * k1), sol.evaluations);
      const Vector k3 = eval(f, t + c3 * step, x + step * (a31 * k1 + a32 * k2), sol.evaluations);
      const Vector k4 =
          eval(f, t + c4 * step, x + step * (a41 * k1 + a42 * k2 + a43 * k3), sol.evaluations);
      const Vector k5 = eval(f, t + c5 * step,
                             x + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4),
                             sol.evaluations);
      const Vector k6 = eval(f, t + step,
                             x + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5),
                             sol.evaluations);
      const Vector x_new = x + step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const Vector k7 = eval(f, t + step, x_new, sol.evaluations);
      const Vector err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double err_norm =
          x_new.allFinite() && k7.allFinite() ? error_norm(err, x, x_new, o)
                                              : std::numeric_limits<double>::infinity();

      if (err_norm <= 1.0) {
        double factor = err_norm == 0.0
                            ? kMaxFactor
                            : kSafety * std::pow(err_norm, -kAlpha) * std::pow(err_prev, kBeta);
        factor = std::clamp(factor, kMinFactor, kMaxFactor);
        if (last_rejected) factor = std::min(factor, 1.0);
        err_prev = std::max(err_norm, 1e-4);
        last_rejected = false;

        t = lands ? target : t + step;
        x = x_new;
        k1 = k7;
        ++sol.accepted_steps;
        // A shortened landing step says nothing about the natural step size.
        if (!lands || step >= h) h = step * factor;
        if (o.max_step > 0.0) h = std::min(h, o.max_step);
      } else {
        const double factor =
            std::isfinite(err_norm)
                ? std::max(kMinFactor, kSafety * std::pow(err_norm, -1.0 / 5.0))
                : kMinFactor;
        h = step * factor;
        last_rejected = true;
        ++sol.rejected_steps;
      }
    }
    if (!x.allFinite()) throw NonFiniteStateError(sol.accepted_steps, t);
    sol.times.push_back(target);
    sol.states.push_back(x);
  }
  return sol;
}

}  // namespace phdiff

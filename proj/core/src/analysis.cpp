#include "phdiff/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "phdiff/csv.hpp"
#include "phdiff/error.hpp"
#include "phdiff/random.hpp"

namespace phdiff {

std::vector<EnergySample> energy_along_trajectory(const Trajectory& traj,
                                                  const EnergyModel& model) {
  std::vector<EnergySample> out;
  out.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out.push_back({traj.times[k], model.value(traj.states[k], traj.times[k])});
  }
  return out;
}

double closed_loop_energy_rate(const EnergyModel& model, const StructureMatrices& s,
                               const Vector& x, double t) {
  const Vector grad = model.gradient(x, t);
  return -grad.dot((s.r() + s.ggt()) * grad);
}

std::vector<CheckRecord> lyapunov_rate_check(const Trajectory& traj, const EnergyModel& model,
                                             const StructureMatrices& s,
                                             const LyapunovCheckOptions& options) {
  const auto energy = energy_along_trajectory(traj, model);

  double worst_excess = 0.0;
  std::size_t worst_step = 0;
  for (std::size_t k = 0; k + 1 < energy.size(); ++k) {
    const double allowed = options.slack_rel * (1.0 + std::abs(energy[k].energy));
    const double excess = (energy[k + 1].energy - energy[k].energy) / allowed;
    if (excess > worst_excess) {
      worst_excess = excess;
      worst_step = k;
    }
  }
  CheckRecord monotone = make_check(
      "lyapunov_monotone", worst_excess, 1.0,
      "max increase of H per step in units of slack " + format_compact(options.slack_rel) +
          "*(1+|H|)");
  monotone.context = {{"worst_step", worst_step}, {"points", energy.size()}};

  double worst_rate = 0.0;
  std::size_t compared = 0;
  for (std::size_t k = 1; k + 1 < energy.size(); ++k) {
    const double predicted = closed_loop_energy_rate(model, s, traj.states[k], traj.times[k]);
    if (std::abs(predicted) <= options.rate_floor) continue;
    const double measured = (energy[k + 1].energy - energy[k - 1].energy) /
                            (energy[k + 1].time - energy[k - 1].time);
    worst_rate = std::max(worst_rate, std::abs(measured - predicted) / std::abs(predicted));
    ++compared;
  }
  CheckRecord rate =
      make_check("lyapunov_rate", worst_rate, options.rate_tolerance.value_or(0.0),
                 "max relative mismatch of centred dH/dt vs -gradH^T(R+GG^T)gradH",
                 options.rate_tolerance.has_value());
  if (!options.rate_tolerance) rate.status = CheckStatus::kSkipped;
  rate.context = {{"compared_points", compared}};
  return {std::move(monotone), std::move(rate)};
}

double two_sided_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::kInvalidArgument, "p must lie in (0, 1)");
  // erfc(z / sqrt 2) is decreasing in z; bisect.
  double lo = 0.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

EnergyBalanceReport empirical_energy_balance(const Ensemble& e, const EnergyModel& model,
                                             const StructureMatrices& s,
                                             const EnergyBalanceOptions& options) {
  const std::size_t members = e.trajectories.size();
  if (members < options.min_trajectories) {
    throw Error(ErrorCode::kInsufficientEnsemble,
                std::to_string(members) + " trajectories, need at least " +
                    std::to_string(options.min_trajectories));
  }
  if (e.thin != 1) {
    throw Error(ErrorCode::kInvalidArgument, "energy balance needs unthinned trajectories");
  }
  const auto& times = e.trajectories.front().times;
  const std::size_t points = times.size();
  if (points < 3) throw Error(ErrorCode::kInvalidArgument, "need at least 3 stored times");

  // H and the pointwise right-hand side for every (member, time).
  std::vector<double> energy(members * points);
  std::vector<double> rhs_point(members * points);
  for (std::size_t i = 0; i < members; ++i) {
    const auto& traj = e.trajectories[i];
    for (std::size_t k = 0; k < points; ++k) {
      const Vector& x = traj.states[k];
      const double t = times[k];
      const Vector grad = model.gradient(x, t);
      energy[i * points + k] = model.value(x, t);
      rhs_point[i * points + k] = model.time_derivative(x, t) - grad.dot(s.r() * grad) +
                                  hessian_trace_term(model, x, t, s);
    }
  }

  EnergyBalanceReport report;
  const std::size_t interior = points - 2;
  report.mc_sigmas =
      options.mc_sigmas > 0.0
          ? options.mc_sigmas
          : two_sided_normal_quantile(options.family_alpha / static_cast<double>(interior));
  report.discretization_allowance = options.discretization_c * e.grid.dt();
  const double n = static_cast<double>(members);

  for (std::size_t k = 1; k + 1 < points; ++k) {
    const double span = times[k + 1] - times[k - 1];
    double lhs = 0.0, rhs = 0.0, sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < members; ++i) {
      const double d = (energy[i * points + k + 1] - energy[i * points + k - 1]) / span;
      const double r = rhs_point[i * points + k];
      lhs += d;
      rhs += r;
      sum += d - r;
      sum_sq += (d - r) * (d - r);
    }
    lhs /= n;
    rhs /= n;
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    const double stderr_k = std::sqrt(var / n);

    report.times.push_back(times[k]);
    report.lhs.push_back(lhs);
    report.rhs.push_back(rhs);
    report.mc_stderr.push_back(stderr_k);
    const double budget = report.mc_sigmas * stderr_k + report.discretization_allowance;
    const double normalized = budget > 0.0 ? std::abs(lhs - rhs) / budget
                                           : (lhs == rhs ? 0.0 : std::numeric_limits<double>::infinity());
    if (normalized > report.max_normalized_residual || report.times.size() == 1) {
      report.max_normalized_residual = normalized;
      report.worst_index = report.times.size() - 1;
    }
  }
  return report;
}

namespace {

// Windowed means of lhs - rhs over `windows` equal blocks of interior points.
std::vector<double> windowed_bias(const EnergyBalanceReport& r, double t0, double t1,
                                  std::size_t windows) {
  std::vector<double> sum(windows, 0.0);
  std::vector<std::size_t> count(windows, 0);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    auto w = static_cast<std::size_t>((r.times[k] - t0) / (t1 - t0) * static_cast<double>(windows));
    w = std::min(w, windows - 1);
    sum[w] += r.lhs[k] - r.rhs[k];
    ++count[w];
  }
  for (std::size_t w = 0; w < windows; ++w) {
    if (count[w] > 0) sum[w] /= static_cast<double>(count[w]);
  }
  return sum;
}

}  // namespace

DiscretizationCalibration calibrate_discretization_constant(
    const std::vector<Vector>& init, const TimeGrid& grid, const EnergyModel& model,
    const StructureMatrices& s, std::uint64_t base_seed, unsigned threads) {
  const TimeGrid fine_grid(grid.t_start(), grid.t_end(), grid.dt() / 2.0);
  ForwardOptions coarse_opts;
  coarse_opts.threads = threads;
  coarse_opts.noise_refinement = 2;
  ForwardOptions fine_opts;
  fine_opts.threads = threads;

  const Ensemble coarse = simulate_forward(init, grid, model, s, base_seed, coarse_opts);
  const Ensemble fine = simulate_forward(init, fine_grid, model, s, base_seed, fine_opts);
  EnergyBalanceOptions opts;
  opts.mc_sigmas = 1.0;
  opts.min_trajectories = 1;
  const auto rc = empirical_energy_balance(coarse, model, s, opts);
  const auto rf = empirical_energy_balance(fine, model, s, opts);

  const double span = grid.t_end() - grid.t_start();
  const auto windows = static_cast<std::size_t>(
      std::clamp(span / std::max(10.0 * grid.dt(), span / 20.0), 1.0, 20.0));
  const auto bc = windowed_bias(rc, grid.t_start(), grid.t_end(), windows);
  const auto bf = windowed_bias(rf, grid.t_start(), grid.t_end(), windows);

  DiscretizationCalibration out;
  out.coarse_dt = grid.dt();
  double worst = 0.0;
  for (std::size_t w = 0; w < windows; ++w) {
    out.window_bias.push_back(bc[w] - bf[w]);
    worst = std::max(worst, std::abs(bc[w] - bf[w]));
  }
  out.c = 2.0 * worst / grid.dt();
  return out;
}

Vector passivity_output(const EnergyModel& model, const StructureMatrices& s, const Vector& x,
                        double t) {
  require_dim("energy model", model.dim(), s.n());
  require_dim("x", x.size(), s.n());
  return s.g().transpose() * model.gradient(x, t);
}

namespace {

// Linear interpolation of the empirical quantile function of sorted samples,
// evaluated at the midpoint levels of an n-point grid.
double quantile(const std::vector<double>& sorted, double u) {
  const double pos = u * static_cast<double>(sorted.size()) - 0.5;
  if (pos <= 0.0) return sorted.front();
  const double last = static_cast<double>(sorted.size() - 1);
  if (pos >= last) return sorted.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

}  // namespace

double wasserstein2_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "wasserstein2_1d needs non-empty samples");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double sum = 0.0;
  if (a.size() == b.size()) {
    for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(sum / static_cast<double>(a.size()));
  }
  const std::size_t levels = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < levels; ++i) {
    const double u = (static_cast<double>(i) + 0.5) / static_cast<double>(levels);
    const double d = quantile(a, u) - quantile(b, u);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(levels));
}

double sliced_wasserstein2(const std::vector<Vector>& a, const std::vector<Vector>& b,
                           std::size_t n_projections, std::uint64_t seed) {
  if (a.empty() || b.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "sliced_wasserstein2 needs non-empty samples");
  }
  if (n_projections == 0) throw Error(ErrorCode::kInvalidArgument, "need at least one projection");
  const Index n = a.front().size();
  for (const auto& x : a) require_dim("sample in a", x.size(), n);
  for (const auto& x : b) require_dim("sample in b", x.size(), n);

  const RandomStream stream(seed, StreamDomain::kProjection);
  Vector dir(n);
  std::vector<double> pa(a.size());
  std::vector<double> pb(b.size());
  double sum_sq = 0.0;
  for (std::size_t p = 0; p < n_projections; ++p) {
    // Box-Muller radii are strictly positive, so the norm never vanishes.
    stream.fill_normal(p, std::span<double>(dir.data(), static_cast<std::size_t>(n)));
    dir.normalize();
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] = dir.dot(a[i]);
    for (std::size_t i = 0; i < b.size(); ++i) pb[i] = dir.dot(b[i]);
    const double w = wasserstein2_1d(pa, pb);
    sum_sq += w * w;
  }
  return std::sqrt(sum_sq / static_cast<double>(n_projections));
}

}  // namespace phdiff

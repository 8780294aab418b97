#include "phdiff/runner.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "phdiff/analysis.hpp"
#include "phdiff/checks.hpp"
#include "phdiff/csv.hpp"
#include "phdiff/error.hpp"
#include "phdiff/forward.hpp"
#include "phdiff/reverse.hpp"
#include "phdiff/sampling.hpp"

namespace phdiff {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Owns the artifacts of one run; nothing is written until commit().
class RunWriter {
 public:
  RunWriter(const ExperimentConfig& config, const RunOptions& options)
      : dir_(options.out_dir.empty() ? fs::path(config.output_dir) : options.out_dir) {
    add("config.echo", config_to_json(config).dump(2) + "\n");
  }

  void add(const std::string& name, std::string content) {
    pending_.emplace_back(dir_ / name, std::move(content));
  }
  void add_json(const std::string& name, const json& j) { add(name, j.dump(2) + "\n"); }

  void commit(RunResult& result) {
    for (const auto& [path, content] : pending_) {
      write_file_atomic(path, content);
      result.files.push_back(path);
    }
    result.out_dir = dir_;
    pending_.clear();
  }

 private:
  fs::path dir_;
  std::vector<std::pair<fs::path, std::string>> pending_;
};

std::ostream& log_stream(const RunOptions& o) { return o.log != nullptr ? *o.log : std::cout; }

void prepare(ExperimentConfig& config, const RunOptions& options) {
  if (options.seed) override_seeds(config, *options.seed);
  validate_config(config);
}

std::vector<std::string> state_header(std::vector<std::string> head, Index n) {
  for (Index i = 1; i <= n; ++i) head.push_back("x_" + std::to_string(i));
  return head;
}

std::string trajectories_csv(const std::vector<Trajectory>& trajs, Index n) {
  CsvBuilder csv(state_header({"traj_id", "t"}, n));
  for (const auto& traj : trajs) {
    for (std::size_t k = 0; k < traj.size(); ++k) {
      csv.cell(traj.id).cell(traj.times[k]);
      for (Index i = 0; i < n; ++i) csv.cell(traj.states[k][i]);
      csv.end_row();
    }
  }
  return csv.str();
}

json failures_json(const std::vector<TrajectoryFailure>& failures) {
  json out = json::array();
  for (const auto& f : failures) {
    out.push_back({{"trajectory", f.trajectory}, {"step", f.step}, {"time", f.time}});
  }
  return out;
}

// Equal-width bins over the observed range of each coordinate at the final time.
std::string histogram_csv(const Ensemble& e, std::size_t bins) {
  CsvBuilder csv({"coordinate", "bin_lo", "bin_hi", "count"});
  if (e.trajectories.empty()) return csv.str();
  const Index n = e.trajectories.front().final_state().size();
  for (Index i = 0; i < n; ++i) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& t : e.trajectories) {
      lo = std::min(lo, t.final_state()[i]);
      hi = std::max(hi, t.final_state()[i]);
    }
    if (hi <= lo) hi = lo + 1.0;
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<std::size_t> counts(bins, 0);
    for (const auto& t : e.trajectories) {
      auto b = static_cast<std::size_t>((t.final_state()[i] - lo) / width);
      ++counts[std::min(b, bins - 1)];
    }
    for (std::size_t b = 0; b < bins; ++b) {
      csv.cell(static_cast<std::size_t>(i + 1))
          .cell(lo + width * static_cast<double>(b))
          .cell(b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1))
          .cell(counts[b]);
      csv.end_row();
    }
  }
  return csv.str();
}

json stats_json(const Ensemble& e) {
  const auto times = e.stored_times();
  json per_time = json::array();
  if (!e.trajectories.empty()) {
    for (std::size_t k = 0; k < times.size(); ++k) {
      const auto m = ensemble_stats(e, k);
      per_time.push_back({{"t", times[k]},
                          {"mean", vector_to_json(m.mean)},
                          {"covariance", matrix_to_json(m.covariance)}});
    }
  }
  return {{"n_trajectories", e.trajectories.size() + e.failures.size()},
          {"n_succeeded", e.trajectories.size()},
          {"failures", failures_json(e.failures)},
          {"base_seed", e.base_seed},
          {"dt", e.grid.dt()},
          {"thin", e.thin},
          {"stats", per_time}};
}

void finish(RunResult& result, RunWriter& writer, const RunOptions& options,
            const std::string& summary) {
  writer.commit(result);
  if (!options.quiet) log_stream(options) << summary << "wrote " << result.files.size()
                                          << " files to " << result.out_dir.string() << "\n";
}

}  // namespace

RunResult run_forward(ExperimentConfig config, const RunOptions& options) {
  prepare(config, options);
  if (!config.forward) throw Error(ErrorCode::kConfig, "forward: section missing");
  const auto& f = *config.forward;
  const auto model = make_energy(config.energy);
  const auto s = make_structure(config.structure);

  ForwardOptions fo;
  fo.thin = f.thin;
  fo.threads = options.threads;
  const auto starts = sample_initial(f.init, f.n_trajectories, f.base_seed);
  const Ensemble e =
      simulate_forward(starts, TimeGrid(f.t_start, f.t_end, f.dt), *model, s, f.base_seed, fo);

  RunResult result;
  RunWriter writer(config, options);
  writer.add("forward.csv", trajectories_csv(e.trajectories, s.n()));
  writer.add_json("stats.json", stats_json(e));
  writer.add("histogram.csv", histogram_csv(e, f.histogram_bins));
  result.exit_code = e.trajectories.empty() ? kExitRuntime : kExitOk;
  const std::string summary = "forward: " + std::to_string(e.trajectories.size()) + " trajectories, " +
                              std::to_string(e.failures.size()) + " failed\n";
  finish(result, writer, options, summary);
  return result;
}

RunResult run_reverse(ExperimentConfig config, const RunOptions& options) {
  prepare(config, options);
  if (!config.reverse) throw Error(ErrorCode::kConfig, "reverse: section missing");
  const auto& r = *config.reverse;
  const auto model = make_energy(config.energy);
  const auto s = make_structure(config.structure);
  const auto perturbation = r.perturbation ? make_perturbation(*r.perturbation) : nullptr;
  const auto starts = sample_initial(r.init, r.n_starts, r.seed);

  std::vector<Trajectory> done;
  CsvBuilder cls(state_header({"traj_id", "status", "mode", "distance"}, s.n()));
  CsvBuilder energy({"traj_id", "t", "H"});
  std::size_t failed = 0;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    Trajectory traj;
    try {
      traj = integrate_reverse(starts[k], r.t_start, r.t_end, *model, s, r.integrator,
                               perturbation.get());
    } catch (const Error& e) {
      ++failed;
      cls.cell(k).cell("failed").cell("").cell("");
      for (Index i = 0; i < s.n(); ++i) cls.cell(starts[k][i]);
      cls.end_row();
      continue;
    }
    traj.id = k;
    const Vector& x = traj.final_state();
    std::string status = "unclassified";
    std::string mode;
    double distance = std::numeric_limits<double>::quiet_NaN();
    if (!r.minima.empty()) {
      distance = std::numeric_limits<double>::infinity();
      for (const auto& m : r.minima) distance = std::min(distance, (x - m).norm());
      if (auto idx = classify_equilibrium(x, r.minima, r.equilibrium_tol)) {
        status = "converged";
        mode = std::to_string(*idx);
      } else if (model->gradient(x, r.t_start).norm() <= r.equilibrium_tol) {
        status = "degenerate";
      }
    }
    cls.cell(k).cell(status).cell(mode);
    if (std::isnan(distance)) cls.cell(""); else cls.cell(distance);
    for (Index i = 0; i < s.n(); ++i) cls.cell(x[i]);
    cls.end_row();
    for (const auto& sample : energy_along_trajectory(traj, *model)) {
      energy.cell(k).cell(sample.time).cell(sample.energy);
      energy.end_row();
    }
    done.push_back(std::move(traj));
  }

  RunResult result;
  RunWriter writer(config, options);
  writer.add("reverse.csv", trajectories_csv(done, s.n()));
  writer.add("reverse_classification.csv", cls.str());
  writer.add("reverse_energy.csv", energy.str());
  result.exit_code = failed > 0 ? kExitRuntime : kExitOk;
  finish(result, writer, options,
         "reverse: " + std::to_string(done.size()) + " integrated, " + std::to_string(failed) +
             " failed\n");
  return result;
}

RunResult run_verify(ExperimentConfig config, const RunOptions& options) {
  prepare(config, options);
  const auto model = make_energy(config.energy);
  const auto s = make_structure(config.structure);
  RunResult result;
  result.report = verify_experiment(CheckContext{config, *model, s, options.threads});
  RunWriter writer(config, options);
  writer.add_json("report.json", result.report.to_json());
  writer.add("report.txt", result.report.to_text());
  result.exit_code = result.report.passed() ? kExitOk : kExitCheckFailed;
  finish(result, writer, options, options.quiet ? std::string() : result.report.to_text());
  return result;
}

RunResult run_compare_sde(ExperimentConfig config, const RunOptions& options) {
  prepare(config, options);
  const auto& c = config.compare_sde;
  const auto model = make_energy(config.energy);
  const auto s = make_structure(config.structure);
  const ScoreFn exact = exact_score(*model);
  const double scale = c.score_scale;
  const ScoreFn score = [exact, scale](const Vector& x, double t) -> Vector {
    return scale * exact(x, t);
  };

  // Pointwise drift residuals.
  const auto points = sample_box(s.n(), c.box, c.n_points, c.seed);
  double max_res = 0.0, sum_res = 0.0, max_lin = 0.0, max_ggt = 0.0;
  for (const auto& x : points) {
    const Vector field = ph_vector_field(*model, s, x, 0.0);
    const Vector drift = reverse_sde_drift(*model, s, x, 0.0, score);
    const Vector drift_exact = reverse_sde_drift(*model, s, x, 0.0, exact);
    const Vector ggt_grad = s.ggt() * model->gradient(x, 0.0);
    const double res = (drift - field).cwiseAbs().maxCoeff();
    max_res = std::max(max_res, res);
    sum_res += res;
    max_ggt = std::max(max_ggt, ggt_grad.cwiseAbs().maxCoeff());
    // The drift is affine in the score: the scaled-score drift departs from
    // the exact-score drift by (scale - 1) G G^T grad H.
    max_lin = std::max(max_lin, ((drift - drift_exact) - (scale - 1.0) * ggt_grad).cwiseAbs().maxCoeff());
  }
  const double mean_res = points.empty() ? 0.0 : sum_res / static_cast<double>(points.size());

  RunResult result;
  const bool gated = scale == 1.0;
  auto drift_rec = make_check("drift_equivalence", max_res, c.tolerance,
                              "max |reverse-SDE drift - PH field| over seeded points", gated);
  if (!gated) drift_rec.status = CheckStatus::kSkipped;
  drift_rec.context = {{"mean_residual", mean_res}, {"score_scale", scale}};
  result.report.add(std::move(drift_rec));
  result.report.add(make_check("score_linearity", max_lin, 1e-12 * (1.0 + max_ggt),
                               "max |drift(scaled) - drift(exact) - (scale-1) GG^T gradH|"));

  // End-point clouds of the stochastic and deterministic samplers.
  double w2 = std::numeric_limits<double>::quiet_NaN();
  json sampler = json::object();
  if (config.reverse) {
    const auto& r = *config.reverse;
    const auto starts = sample_initial(r.init, c.n_samples, c.seed);
    ForwardOptions fo;
    fo.threads = options.threads;
    const Ensemble stoch = simulate_reverse_sde(starts, TimeGrid(r.t_start, r.t_end, c.dt), *model,
                                                s, score, c.seed, fo);
    std::vector<Vector> a, b;
    for (const auto& t : stoch.trajectories) a.push_back(t.final_state());
    for (const auto& x0 : starts) {
      b.push_back(integrate_reverse(x0, r.t_start, r.t_end, *model, s, r.integrator).final_state());
    }
    if (!a.empty()) w2 = sliced_wasserstein2(a, b, c.n_projections, c.seed);
    sampler = {{"n_samples", c.n_samples},
               {"dt", c.dt},
               {"stochastic_failures", failures_json(stoch.failures)},
               {"final_sliced_w2", w2}};
    auto rec = make_check("sampler_sliced_w2", w2, std::numeric_limits<double>::infinity(),
                          "sliced W2 between stochastic and deterministic end points (ungated)",
                          false);
    result.report.add(std::move(rec));
  }

  const json out = {{"config", config.name},
                    {"config_hash", config_hash(config)},
                    {"seed", c.seed},
                    {"n_points", points.size()},
                    {"score_scale", scale},
                    {"max_residual", max_res},
                    {"mean_residual", mean_res},
                    {"max_abs_ggt_grad", max_ggt},
                    {"linearity_residual", max_lin},
                    {"gated", gated},
                    {"tolerance", c.tolerance},
                    {"sampler", sampler},
                    {"report", result.report.to_json()}};
  RunWriter writer(config, options);
  writer.add_json("compare_sde.json", out);
  result.exit_code = result.report.passed() ? kExitOk : kExitCheckFailed;
  finish(result, writer, options, options.quiet ? std::string() : result.report.to_text());
  return result;
}

int run_command(const std::string& command, const fs::path& config_path, const RunOptions& options,
                std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return kExitInvalid;
  }
  try {
    if (command == "forward") return run_forward(std::move(config), options).exit_code;
    if (command == "reverse") return run_reverse(std::move(config), options).exit_code;
    if (command == "verify") return run_verify(std::move(config), options).exit_code;
    if (command == "compare-sde") return run_compare_sde(std::move(config), options).exit_code;
    err << "error: unknown command '" << command << "'\n";
    return kExitInvalid;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kConfig:
      case ErrorCode::kDimensionMismatch:
      case ErrorCode::kNotSkew:
      case ErrorCode::kNotSymmetric:
      case ErrorCode::kNotPSD:
      case ErrorCode::kNotPD:
      case ErrorCode::kInvalidArgument:
      case ErrorCode::kAmbiguousMinima:
        return kExitInvalid;
      default:
        return kExitRuntime;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace phdiff

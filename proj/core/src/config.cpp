#include "phdiff/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "phdiff/error.hpp"

namespace phdiff {
namespace {

using nlohmann::json;

// Collects every problem before throwing, so one run reports all bad fields.
class Issues {
 public:
  void add(const std::string& path, const std::string& message) {
    messages_.push_back(path + ": " + message);
  }
  void throw_if_any() const {
    if (messages_.empty()) return;
    std::ostringstream out;
    out << "invalid configuration";
    for (const auto& m : messages_) out << "\n  " << m;
    throw Error(ErrorCode::kConfig, out.str());
  }

 private:
  std::vector<std::string> messages_;
};

void collect_semantic_issues(const ExperimentConfig& c, Issues& issues);

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void reject_unknown(const json& obj, const std::string& path, std::set<std::string> allowed,
                    Issues& issues) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) issues.add(join(path, key), "unknown field");
  }
}

template <typename T>
T read(const json& obj, const std::string& key, const std::string& path, Issues& issues,
       std::optional<T> fallback = std::nullopt) {
  const std::string where = join(path, key);
  if (!obj.contains(key) || obj.at(key).is_null()) {
    if (fallback) return *fallback;
    issues.add(where, "required field missing");
    return T{};
  }
  try {
    const json& v = obj.at(key);
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw std::invalid_argument("expected a number");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer() && !v.is_number_unsigned()) {
        throw std::invalid_argument("expected an integer");
      }
      if (std::is_unsigned_v<T> && v.is_number_integer() && v.get<long long>() < 0) {
        throw std::invalid_argument("expected a non-negative integer");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw std::invalid_argument("expected a string");
    }
    return v.get<T>();
  } catch (const std::exception& e) {
    issues.add(where, e.what());
    return fallback.value_or(T{});
  }
}

const json& section(const json& obj, const std::string& key, const std::string& path,
                    Issues& issues) {
  static const json empty = json::object();
  if (!obj.contains(key)) {
    issues.add(join(path, key), "required section missing");
    return empty;
  }
  if (!obj.at(key).is_object()) {
    issues.add(join(path, key), "expected an object");
    return empty;
  }
  return obj.at(key);
}

Matrix read_matrix(const json& obj, const std::string& key, const std::string& path,
                   Issues& issues) {
  const std::string where = join(path, key);
  if (!obj.contains(key)) {
    issues.add(where, "required field missing");
    return {};
  }
  try {
    return matrix_from_json(obj.at(key), where);
  } catch (const Error& e) {
    issues.add(where, e.what());
    return {};
  }
}

Vector read_vector(const json& obj, const std::string& key, const std::string& path,
                   Issues& issues) {
  const std::string where = join(path, key);
  if (!obj.contains(key)) {
    issues.add(where, "required field missing");
    return {};
  }
  try {
    return vector_from_json(obj.at(key), where);
  } catch (const Error& e) {
    issues.add(where, e.what());
    return {};
  }
}

InitSpec read_init(const json& obj, const std::string& path, Issues& issues) {
  const std::string type = read<std::string>(obj, "type", path, issues);
  if (type == "normal") {
    reject_unknown(obj, path, {"type", "mean", "std"}, issues);
    return NormalInit{read_vector(obj, "mean", path, issues), read<double>(obj, "std", path, issues)};
  }
  if (type == "uniform") {
    reject_unknown(obj, path, {"type", "low", "high"}, issues);
    return UniformInit{read_vector(obj, "low", path, issues), read_vector(obj, "high", path, issues)};
  }
  if (type == "points") {
    reject_unknown(obj, path, {"type", "values"}, issues);
    PointsInit points;
    const Matrix m = read_matrix(obj, "values", path, issues);
    for (Index i = 0; i < m.rows(); ++i) points.points.push_back(m.row(i).transpose());
    return points;
  }
  issues.add(join(path, "type"), "unknown init type '" + type + "' (normal|uniform|points)");
  return NormalInit{};
}

json init_to_json(const InitSpec& spec) {
  if (const auto* n = std::get_if<NormalInit>(&spec)) {
    return {{"type", "normal"}, {"mean", vector_to_json(n->mean)}, {"std", n->std}};
  }
  if (const auto* u = std::get_if<UniformInit>(&spec)) {
    return {{"type", "uniform"}, {"low", vector_to_json(u->low)}, {"high", vector_to_json(u->high)}};
  }
  json values = json::array();
  for (const auto& p : std::get<PointsInit>(spec).points) values.push_back(vector_to_json(p));
  return {{"type", "points"}, {"values", values}};
}

std::string init_problem(const InitSpec& spec, Index n) {
  if (init_dim(spec) != n) {
    return "dimension " + std::to_string(init_dim(spec)) + " does not match state dimension " +
           std::to_string(n);
  }
  if (const auto* normal = std::get_if<NormalInit>(&spec)) {
    if (!(normal->std >= 0.0)) return "std must be non-negative";
  }
  if (const auto* uniform = std::get_if<UniformInit>(&spec)) {
    if (uniform->high.size() != uniform->low.size()) return "low/high size mismatch";
    if ((uniform->high.array() < uniform->low.array()).any()) return "high must be >= low";
  }
  if (const auto* points = std::get_if<PointsInit>(&spec)) {
    if (points->points.empty()) return "values must not be empty";
  }
  return {};
}

IntegratorConfig read_integrator(const json& obj, const std::string& path, Issues& issues) {
  reject_unknown(obj, path, {"method", "dt", "rel_tol", "abs_tol", "max_step", "n_eval"}, issues);
  IntegratorConfig cfg;
  const std::string method = read<std::string>(obj, "method", path, issues, "adaptive_rk45");
  if (method == "fixed_rk4") {
    cfg.method = IntegratorConfig::Method::kFixedRk4;
  } else if (method == "adaptive_rk45") {
    cfg.method = IntegratorConfig::Method::kAdaptiveRk45;
  } else {
    issues.add(join(path, "method"), "unknown method '" + method + "' (fixed_rk4|adaptive_rk45)");
  }
  cfg.dt = read<double>(obj, "dt", path, issues, cfg.dt);
  cfg.rel_tol = read<double>(obj, "rel_tol", path, issues, cfg.rel_tol);
  cfg.abs_tol = read<double>(obj, "abs_tol", path, issues, cfg.abs_tol);
  cfg.max_step = read<double>(obj, "max_step", path, issues, cfg.max_step);
  cfg.n_eval = read<std::size_t>(obj, "n_eval", path, issues, cfg.n_eval);
  return cfg;
}

json integrator_to_json(const IntegratorConfig& cfg) {
  return {{"method", cfg.method == IntegratorConfig::Method::kFixedRk4 ? "fixed_rk4" : "adaptive_rk45"},
          {"dt", cfg.dt},
          {"rel_tol", cfg.rel_tol},
          {"abs_tol", cfg.abs_tol},
          {"max_step", cfg.max_step},
          {"n_eval", cfg.n_eval}};
}

}  // namespace

Matrix matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) {
    throw Error(ErrorCode::kConfig, path + ": expected a non-empty array of rows");
  }
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array()) throw Error(ErrorCode::kConfig, path + ": row " + std::to_string(i) + " is not an array");
    if (i == 0) cols = j[i].size();
    if (j[i].size() != cols) throw Error(ErrorCode::kConfig, path + ": ragged rows");
  }
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) {
        throw Error(ErrorCode::kConfig, path + "[" + std::to_string(i) + "][" + std::to_string(k) +
                                            "]: expected a number");
      }
      m(static_cast<Index>(i), static_cast<Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::kConfig, path + ": expected a non-empty array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw Error(ErrorCode::kConfig, path + "[" + std::to_string(i) + "]: expected a number");
    }
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names = {
      "structure",          "gradient",          "hessian",
      "drift_equivalence",  "closed_loop_composition", "passivity_identity",
      "lyapunov",           "mode_recovery",     "linear_decay",
      "energy_conservation", "energy_balance",   "energy_mean_curve",
      "forward_stationarity", "forward_moments", "iss",
      "contraction",
  };
  return names;
}

ExperimentConfig config_from_json(const json& j) {
  Issues issues;
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "configuration root must be an object");
  reject_unknown(j, "", {"name", "energy", "structure", "forward", "reverse", "checks", "verify",
                         "compare_sde", "output_dir"},
                 issues);

  ExperimentConfig c;
  c.name = read<std::string>(j, "name", "", issues);
  c.output_dir = read<std::string>(j, "output_dir", "", issues, "runs/" + c.name);

  const json& energy = section(j, "energy", "", issues);
  c.energy.model = read<std::string>(energy, "model", "energy", issues);
  c.energy.params = energy;
  c.energy.params.erase("model");

  const json& structure = section(j, "structure", "", issues);
  reject_unknown(structure, "structure", {"j", "r", "g"}, issues);
  c.structure.j = read_matrix(structure, "j", "structure", issues);
  c.structure.r = read_matrix(structure, "r", "structure", issues);
  c.structure.g = read_matrix(structure, "g", "structure", issues);

  if (j.contains("forward") && !j.at("forward").is_null()) {
    const json& f = section(j, "forward", "", issues);
    reject_unknown(f, "forward", {"n_trajectories", "init", "t_start", "t_end", "dt", "base_seed",
                                  "thin", "histogram_bins"},
                   issues);
    ForwardSpec spec;
    spec.n_trajectories = read<std::size_t>(f, "n_trajectories", "forward", issues);
    spec.init = read_init(section(f, "init", "forward", issues), "forward.init", issues);
    spec.t_start = read<double>(f, "t_start", "forward", issues, 0.0);
    spec.t_end = read<double>(f, "t_end", "forward", issues);
    spec.dt = read<double>(f, "dt", "forward", issues);
    spec.base_seed = read<std::uint64_t>(f, "base_seed", "forward", issues);
    spec.thin = read<std::size_t>(f, "thin", "forward", issues, 1);
    spec.histogram_bins = read<std::size_t>(f, "histogram_bins", "forward", issues, 40);
    c.forward = std::move(spec);
  }

  if (j.contains("reverse") && !j.at("reverse").is_null()) {
    const json& r = section(j, "reverse", "", issues);
    reject_unknown(r, "reverse", {"n_starts", "init", "t_start", "t_end", "seed", "integrator",
                                  "perturbation", "minima", "equilibrium_tol"},
                   issues);
    ReverseSpec spec;
    spec.n_starts = read<std::size_t>(r, "n_starts", "reverse", issues);
    spec.init = read_init(section(r, "init", "reverse", issues), "reverse.init", issues);
    spec.t_start = read<double>(r, "t_start", "reverse", issues, 0.0);
    spec.t_end = read<double>(r, "t_end", "reverse", issues);
    spec.seed = read<std::uint64_t>(r, "seed", "reverse", issues);
    if (r.contains("integrator")) {
      spec.integrator = read_integrator(section(r, "integrator", "reverse", issues),
                                        "reverse.integrator", issues);
    }
    if (r.contains("perturbation") && !r.at("perturbation").is_null()) {
      const json& p = section(r, "perturbation", "reverse", issues);
      reject_unknown(p, "reverse.perturbation", {"type", "value", "omega"}, issues);
      PerturbationSpec ps;
      ps.type = read<std::string>(p, "type", "reverse.perturbation", issues, "constant");
      ps.value = read_vector(p, "value", "reverse.perturbation", issues);
      ps.omega = read<double>(p, "omega", "reverse.perturbation", issues, 1.0);
      spec.perturbation = std::move(ps);
    }
    if (r.contains("minima")) {
      const Matrix m = read_matrix(r, "minima", "reverse", issues);
      for (Index i = 0; i < m.rows(); ++i) spec.minima.push_back(m.row(i).transpose());
    }
    spec.equilibrium_tol =
        read<double>(r, "equilibrium_tol", "reverse", issues, kDefaultEquilibriumTolerance);
    c.reverse = std::move(spec);
  }

  if (j.contains("checks")) {
    if (!j.at("checks").is_array()) {
      issues.add("checks", "expected an array of check names");
    } else {
      for (const auto& name : j.at("checks")) {
        if (!name.is_string()) {
          issues.add("checks", "check names must be strings");
          continue;
        }
        c.checks.push_back(name.get<std::string>());
      }
    }
  }

  if (j.contains("verify")) {
    const json& v = section(j, "verify", "", issues);
    VerifySpec d;
    auto& s = c.verify;
    reject_unknown(v, "verify",
                   {"seed", "box", "gradient_points", "gradient_tol", "hessian_tol",
                    "identity_points", "drift_tol", "composition_tol", "structure_samples",
                    "lyapunov_eval_points", "lyapunov_slack", "lyapunov_rate_tol", "decay_tol",
                    "contraction_tol", "contraction_samples", "n_projections", "iss_delta",
                    "iss_tol", "conservation_tol", "energy_curve_init_std",
                    "stationarity_sigmas", "moment_sigmas"},
                   issues);
    s.seed = read<std::uint64_t>(v, "seed", "verify", issues, d.seed);
    s.box = read<double>(v, "box", "verify", issues, d.box);
    s.gradient_points = read<std::size_t>(v, "gradient_points", "verify", issues, d.gradient_points);
    s.gradient_tol = read<double>(v, "gradient_tol", "verify", issues, d.gradient_tol);
    s.hessian_tol = read<double>(v, "hessian_tol", "verify", issues, d.hessian_tol);
    s.identity_points = read<std::size_t>(v, "identity_points", "verify", issues, d.identity_points);
    s.drift_tol = read<double>(v, "drift_tol", "verify", issues, d.drift_tol);
    s.composition_tol = read<double>(v, "composition_tol", "verify", issues, d.composition_tol);
    s.structure_samples =
        read<std::size_t>(v, "structure_samples", "verify", issues, d.structure_samples);
    s.lyapunov_eval_points =
        read<std::size_t>(v, "lyapunov_eval_points", "verify", issues, d.lyapunov_eval_points);
    s.lyapunov_slack = read<double>(v, "lyapunov_slack", "verify", issues, d.lyapunov_slack);
    if (v.contains("lyapunov_rate_tol") && !v.at("lyapunov_rate_tol").is_null()) {
      s.lyapunov_rate_tol = read<double>(v, "lyapunov_rate_tol", "verify", issues);
    }
    s.decay_tol = read<double>(v, "decay_tol", "verify", issues, d.decay_tol);
    s.contraction_tol = read<double>(v, "contraction_tol", "verify", issues, d.contraction_tol);
    s.contraction_samples =
        read<std::size_t>(v, "contraction_samples", "verify", issues, d.contraction_samples);
    s.n_projections = read<std::size_t>(v, "n_projections", "verify", issues, d.n_projections);
    s.iss_delta = read<double>(v, "iss_delta", "verify", issues, d.iss_delta);
    s.iss_tol = read<double>(v, "iss_tol", "verify", issues, d.iss_tol);
    s.conservation_tol = read<double>(v, "conservation_tol", "verify", issues, d.conservation_tol);
    s.energy_curve_init_std =
        read<double>(v, "energy_curve_init_std", "verify", issues, d.energy_curve_init_std);
    s.stationarity_sigmas =
        read<double>(v, "stationarity_sigmas", "verify", issues, d.stationarity_sigmas);
    s.moment_sigmas = read<double>(v, "moment_sigmas", "verify", issues, d.moment_sigmas);
  }

  if (j.contains("compare_sde")) {
    const json& v = section(j, "compare_sde", "", issues);
    CompareSdeSpec d;
    auto& s = c.compare_sde;
    reject_unknown(v, "compare_sde",
                   {"seed", "n_points", "box", "score_scale", "tolerance", "n_samples", "dt",
                    "n_projections"},
                   issues);
    s.seed = read<std::uint64_t>(v, "seed", "compare_sde", issues, d.seed);
    s.n_points = read<std::size_t>(v, "n_points", "compare_sde", issues, d.n_points);
    s.box = read<double>(v, "box", "compare_sde", issues, d.box);
    s.score_scale = read<double>(v, "score_scale", "compare_sde", issues, d.score_scale);
    s.tolerance = read<double>(v, "tolerance", "compare_sde", issues, d.tolerance);
    s.n_samples = read<std::size_t>(v, "n_samples", "compare_sde", issues, d.n_samples);
    s.dt = read<double>(v, "dt", "compare_sde", issues, d.dt);
    s.n_projections = read<std::size_t>(v, "n_projections", "compare_sde", issues, d.n_projections);
  }

  collect_semantic_issues(c, issues);
  issues.throw_if_any();
  return c;
}

void validate_config(const ExperimentConfig& c) {
  Issues issues;
  collect_semantic_issues(c, issues);
  issues.throw_if_any();
}

namespace {

void collect_semantic_issues(const ExperimentConfig& c, Issues& issues) {
  if (c.name.empty()) issues.add("name", "must not be empty");
  if (!EnergyRegistry::instance().contains(c.energy.model)) {
    issues.add("energy.model", "unknown energy model '" + c.energy.model + "'");
  }
  const Index n = c.structure.j.rows();
  if (c.structure.j.cols() != n) issues.add("structure.j", "must be square");
  if (c.structure.r.rows() != n || c.structure.r.cols() != n) {
    issues.add("structure.r", "must be " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (c.structure.g.rows() != n) issues.add("structure.g", "must have " + std::to_string(n) + " rows");
  if (!c.forward && !c.reverse) issues.add("forward|reverse", "at least one section is required");

  if (c.forward) {
    const auto& f = *c.forward;
    if (!(f.dt > 0.0)) issues.add("forward.dt", "must be positive");
    if (!(f.t_end > f.t_start)) issues.add("forward.t_end", "must exceed forward.t_start");
    if (f.thin == 0) issues.add("forward.thin", "must be >= 1");
    if (f.histogram_bins == 0) issues.add("forward.histogram_bins", "must be >= 1");
    if (auto p = init_problem(f.init, n); !p.empty()) issues.add("forward.init", p);
  }
  if (c.reverse) {
    const auto& r = *c.reverse;
    if (!(r.t_end > r.t_start)) issues.add("reverse.t_end", "must exceed reverse.t_start");
    if (auto p = init_problem(r.init, n); !p.empty()) issues.add("reverse.init", p);
    try {
      r.integrator.validate();
    } catch (const Error& e) {
      issues.add("reverse.integrator", e.what());
    }
    if (!(r.equilibrium_tol > 0.0)) issues.add("reverse.equilibrium_tol", "must be positive");
    for (std::size_t i = 0; i < r.minima.size(); ++i) {
      if (r.minima[i].size() != n) {
        issues.add("reverse.minima[" + std::to_string(i) + "]", "dimension mismatch");
      }
    }
    if (r.perturbation) {
      if (r.perturbation->value.size() != n) issues.add("reverse.perturbation.value", "dimension mismatch");
      if (r.perturbation->type != "constant" && r.perturbation->type != "sinusoidal") {
        issues.add("reverse.perturbation.type", "must be constant or sinusoidal");
      }
    }
  }
  const auto& names = known_checks();
  for (const auto& check : c.checks) {
    if (std::find(names.begin(), names.end(), check) == names.end()) {
      issues.add("checks", "unknown check '" + check + "'");
    }
  }
  if (!(c.verify.box > 0.0)) issues.add("verify.box", "must be positive");
  if (c.verify.lyapunov_eval_points < 3) issues.add("verify.lyapunov_eval_points", "must be >= 3");
  if (c.verify.n_projections == 0) issues.add("verify.n_projections", "must be >= 1");
  if (!(c.compare_sde.dt > 0.0)) issues.add("compare_sde.dt", "must be positive");
  if (c.compare_sde.n_projections == 0) issues.add("compare_sde.n_projections", "must be >= 1");
}

}  // namespace

json config_to_json(const ExperimentConfig& c) {
  json energy = c.energy.params;
  energy["model"] = c.energy.model;
  json out = {
      {"name", c.name},
      {"energy", energy},
      {"structure",
       {{"j", matrix_to_json(c.structure.j)},
        {"r", matrix_to_json(c.structure.r)},
        {"g", matrix_to_json(c.structure.g)}}},
      {"checks", c.checks},
      {"output_dir", c.output_dir},
  };
  if (c.forward) {
    const auto& f = *c.forward;
    out["forward"] = {{"n_trajectories", f.n_trajectories}, {"init", init_to_json(f.init)},
                      {"t_start", f.t_start},               {"t_end", f.t_end},
                      {"dt", f.dt},                         {"base_seed", f.base_seed},
                      {"thin", f.thin},                     {"histogram_bins", f.histogram_bins}};
  }
  if (c.reverse) {
    const auto& r = *c.reverse;
    json minima = json::array();
    for (const auto& m : r.minima) minima.push_back(vector_to_json(m));
    json rev = {{"n_starts", r.n_starts},
                {"init", init_to_json(r.init)},
                {"t_start", r.t_start},
                {"t_end", r.t_end},
                {"seed", r.seed},
                {"integrator", integrator_to_json(r.integrator)},
                {"equilibrium_tol", r.equilibrium_tol}};
    if (!minima.empty()) rev["minima"] = minima;
    if (r.perturbation) {
      rev["perturbation"] = {{"type", r.perturbation->type},
                             {"value", vector_to_json(r.perturbation->value)},
                             {"omega", r.perturbation->omega}};
    }
    out["reverse"] = std::move(rev);
  }
  const auto& v = c.verify;
  out["verify"] = {{"seed", v.seed},
                   {"box", v.box},
                   {"gradient_points", v.gradient_points},
                   {"gradient_tol", v.gradient_tol},
                   {"hessian_tol", v.hessian_tol},
                   {"identity_points", v.identity_points},
                   {"drift_tol", v.drift_tol},
                   {"composition_tol", v.composition_tol},
                   {"structure_samples", v.structure_samples},
                   {"lyapunov_eval_points", v.lyapunov_eval_points},
                   {"lyapunov_slack", v.lyapunov_slack},
                   {"lyapunov_rate_tol", v.lyapunov_rate_tol ? json(*v.lyapunov_rate_tol) : json()},
                   {"decay_tol", v.decay_tol},
                   {"contraction_tol", v.contraction_tol},
                   {"contraction_samples", v.contraction_samples},
                   {"n_projections", v.n_projections},
                   {"iss_delta", v.iss_delta},
                   {"iss_tol", v.iss_tol},
                   {"conservation_tol", v.conservation_tol},
                   {"energy_curve_init_std", v.energy_curve_init_std},
                   {"stationarity_sigmas", v.stationarity_sigmas},
                   {"moment_sigmas", v.moment_sigmas}};
  const auto& s = c.compare_sde;
  out["compare_sde"] = {{"seed", s.seed},         {"n_points", s.n_points},
                        {"box", s.box},           {"score_scale", s.score_scale},
                        {"tolerance", s.tolerance}, {"n_samples", s.n_samples},
                        {"dt", s.dt},             {"n_projections", s.n_projections}};
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

void override_seeds(ExperimentConfig& config, std::uint64_t seed) {
  if (config.forward) config.forward->base_seed = seed;
  if (config.reverse) config.reverse->seed = seed;
  config.verify.seed = seed;
  config.compare_sde.seed = seed;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EnergyRegistry::EnergyRegistry() {
  factories_["quadratic"] = [](const json& params) -> EnergyPtr {
    if (!params.contains("p")) throw Error(ErrorCode::kConfig, "energy.p: required for quadratic");
    return std::make_shared<QuadraticEnergy>(matrix_from_json(params.at("p"), "energy.p"));
  };
  factories_["quartic_well"] = [](const json&) -> EnergyPtr {
    return std::make_shared<QuarticWellEnergy>();
  };
}

EnergyRegistry& EnergyRegistry::instance() {
  static EnergyRegistry registry;
  return registry;
}

void EnergyRegistry::add(const std::string& name, EnergyFactory factory) {
  std::lock_guard lock(mutex_);
  factories_[name] = std::move(factory);
}

bool EnergyRegistry::contains(const std::string& name) const {
  std::lock_guard lock(mutex_);
  return factories_.contains(name);
}

EnergyPtr EnergyRegistry::make(const EnergySpec& spec) const {
  EnergyFactory factory;
  {
    std::lock_guard lock(mutex_);
    auto it = factories_.find(spec.model);
    if (it == factories_.end()) {
      throw Error(ErrorCode::kConfig, "energy.model: unknown energy model '" + spec.model + "'");
    }
    factory = it->second;
  }
  return factory(spec.params);
}

EnergyPtr make_energy(const EnergySpec& spec) { return EnergyRegistry::instance().make(spec); }

StructureMatrices make_structure(const StructureSpec& spec) {
  return validate_structure(spec.j, spec.r, spec.g);
}

std::unique_ptr<PerturbationModel> make_perturbation(const PerturbationSpec& spec) {
  if (spec.type == "constant") return std::make_unique<ConstantPerturbation>(spec.value);
  if (spec.type == "sinusoidal") {
    return std::make_unique<SinusoidalPerturbation>(spec.value, spec.omega);
  }
  throw Error(ErrorCode::kConfig, "reverse.perturbation.type: unknown type '" + spec.type + "'");
}

}  // namespace phdiff

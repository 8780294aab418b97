#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phdiff/energy.hpp"
#include "phdiff/reverse.hpp"
#include "phdiff/sampling.hpp"
#include "phdiff/structure.hpp"

namespace phdiff {

// Energy model by registry name; `params` carries model-specific fields
// (e.g. "p" for quadratic).
struct EnergySpec {
  std::string model;
  nlohmann::json params = nlohmann::json::object();
};

struct StructureSpec {
  Matrix j;
  Matrix r;
  Matrix g;
};

struct ForwardSpec {
  std::size_t n_trajectories = 0;
  InitSpec init;
  double t_start = 0.0;
  double t_end = 0.0;
  double dt = 0.0;
  std::uint64_t base_seed = 0;
  std::size_t thin = 1;
  std::size_t histogram_bins = 40;
};

struct PerturbationSpec {
  std::string type = "constant";  // constant | sinusoidal
  Vector value;                    // constant value or sinusoid amplitude
  double omega = 1.0;
};

struct ReverseSpec {
  std::size_t n_starts = 0;
  InitSpec init;
  double t_start = 0.0;
  double t_end = 0.0;
  std::uint64_t seed = 0;
  IntegratorConfig integrator;
  std::optional<PerturbationSpec> perturbation;
  std::vector<Vector> minima;
  double equilibrium_tol = kDefaultEquilibriumTolerance;
};

// Parameters of the verification checks. Tolerances default to the values
// the acceptance suite pins.
struct VerifySpec {
  std::uint64_t seed = 1;
  double box = 2.0;  // seeded sample points uniform on [-box, box]^n
  std::size_t gradient_points = 100;
  double gradient_tol = 1e-5;
  double hessian_tol = 1e-4;
  std::size_t identity_points = 1000;
  double drift_tol = 1e-12;
  double composition_tol = 1e-14;
  std::size_t structure_samples = 1000;
  std::size_t lyapunov_eval_points = 2001;
  double lyapunov_slack = 1e-9;
  std::optional<double> lyapunov_rate_tol;
  double decay_tol = 1e-6;
  double contraction_tol = 1e-4;
  std::size_t contraction_samples = 200;
  std::size_t n_projections = 64;
  double iss_delta = 0.1;
  double iss_tol = 1e-5;
  double conservation_tol = 1e-6;
  double energy_curve_init_std = 2.0;
  double stationarity_sigmas = 3.0;
  double moment_sigmas = 4.0;
};

struct CompareSdeSpec {
  std::uint64_t seed = 7;
  std::size_t n_points = 1000;
  double box = 2.0;
  double score_scale = 1.0;
  double tolerance = 1e-12;
  std::size_t n_samples = 200;
  double dt = 0.01;
  std::size_t n_projections = 64;
};

struct ExperimentConfig {
  std::string name;
  EnergySpec energy;
  StructureSpec structure;
  std::optional<ForwardSpec> forward;
  std::optional<ReverseSpec> reverse;
  std::vector<std::string> checks;
  VerifySpec verify;
  CompareSdeSpec compare_sde;
  std::string output_dir;

  Index dim() const noexcept { return structure.j.rows(); }
};

// Parses and validates; throws Error(kConfig) naming every offending field
// path (e.g. "forward.dt").
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

// Cross-field checks (dimensions, positivity, known names); throws Error(kConfig).
void validate_config(const ExperimentConfig& config);

// Replaces every seed in the config.
void override_seeds(ExperimentConfig& config, std::uint64_t seed);

// FNV-1a of the canonical JSON dump, hex encoded.
std::string config_hash(const ExperimentConfig& config);

// Names accepted in "checks".
const std::vector<std::string>& known_checks();

using EnergyFactory = std::function<EnergyPtr(const nlohmann::json& params)>;

// Name -> energy factory. Built-ins: "quadratic" (param "p"), "quartic_well".
class EnergyRegistry {
 public:
  static EnergyRegistry& instance();

  void add(const std::string& name, EnergyFactory factory);
  bool contains(const std::string& name) const;
  EnergyPtr make(const EnergySpec& spec) const;

 private:
  EnergyRegistry();

  mutable std::mutex mutex_;
  std::map<std::string, EnergyFactory> factories_;
};

EnergyPtr make_energy(const EnergySpec& spec);
StructureMatrices make_structure(const StructureSpec& spec);
std::unique_ptr<PerturbationModel> make_perturbation(const PerturbationSpec& spec);

Matrix matrix_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json matrix_to_json(const Matrix& m);
Vector vector_from_json(const nlohmann::json& j, const std::string& path);
nlohmann::json vector_to_json(const Vector& v);

}  // namespace phdiff

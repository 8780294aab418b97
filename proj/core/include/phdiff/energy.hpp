#pragma once

#include <memory>
#include <optional>
#include <string>

#include "phdiff/structure.hpp"
#include "phdiff/types.hpp"

namespace phdiff {

// Energy (Hamiltonian) H(x, t). The induced density is p_t ∝ exp(-H), so the
// score is -grad H and no normalizer is ever required.
//
// Implementations must be immutable after construction; every method is
// called concurrently from ensemble workers.
class EnergyModel {
 public:
  virtual ~EnergyModel() = default;

  virtual std::string name() const = 0;
  virtual Index dim() const = 0;
  virtual double value(const Vector& x, double t) const = 0;
  virtual Vector gradient(const Vector& x, double t) const = 0;

  // Analytic Hessian when available; the default reports no capability.
  virtual std::optional<Matrix> hessian(const Vector& x, double t) const;
  virtual bool has_hessian() const { return false; }

  // dH/dt at fixed x; identically zero for autonomous models.
  virtual double time_derivative(const Vector& x, double t) const;
  virtual bool autonomous() const { return true; }

  // Flat parameter vector theta.
  virtual Vector params() const { return {}; }
};

using EnergyPtr = std::shared_ptr<const EnergyModel>;

// H(x) = 1/2 x^T P x with P symmetric positive definite.
class QuadraticEnergy final : public EnergyModel {
 public:
  // Throws Error(kNotPD) unless P is symmetric positive definite.
  explicit QuadraticEnergy(Matrix p);

  std::string name() const override { return "quadratic"; }
  Index dim() const override { return p_.rows(); }
  double value(const Vector& x, double t) const override;
  Vector gradient(const Vector& x, double t) const override;
  std::optional<Matrix> hessian(const Vector& x, double t) const override;
  bool has_hessian() const override { return true; }
  Vector params() const override;

  const Matrix& p() const noexcept { return p_; }

 private:
  Matrix p_;
};

// H(x) = (x1^2 - 1)^2 + (x2^2 - 1)^2: four wells at (±1, ±1).
class QuarticWellEnergy final : public EnergyModel {
 public:
  std::string name() const override { return "quartic_well"; }
  Index dim() const override { return 2; }
  double value(const Vector& x, double t) const override;
  Vector gradient(const Vector& x, double t) const override;
  std::optional<Matrix> hessian(const Vector& x, double t) const override;
  bool has_hessian() const override { return true; }
};

// score(x, t) = -grad H(x, t), exactly.
Vector score(const EnergyModel& model, const Vector& x, double t);

// Central differences of value(). h <= 0 selects the per-coordinate step
// eps^(1/3) * (1 + |x_i|).
Vector finite_diff_gradient(const EnergyModel& model, const Vector& x, double t, double h = 0.0);

// Central differences of gradient(), symmetrized.
Matrix finite_diff_hessian(const EnergyModel& model, const Vector& x, double t, double h = 0.0);

enum class HessianFallback { kAllowFiniteDifference, kAnalyticOnly };

// Hessian via the analytic capability or, if permitted, finite differences.
// Throws Error(kHessianUnavailable) otherwise.
Matrix hessian_or_fallback(const EnergyModel& model, const Vector& x, double t,
                           HessianFallback fallback = HessianFallback::kAllowFiniteDifference);

// 1/2 Tr(G G^T Hess H(x, t)): the Ito correction in the energy balance.
double hessian_trace_term(const EnergyModel& model, const Vector& x, double t,
                          const StructureMatrices& s,
                          HessianFallback fallback = HessianFallback::kAllowFiniteDifference);

// Normalized log-density of N(0, P^{-1}), i.e. the density that the quadratic
// energy induces. Throws Error(kNotPD).
double gaussian_log_density(const Matrix& p, const Vector& x);

}  // namespace phdiff

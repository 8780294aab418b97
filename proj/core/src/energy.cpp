#include "phdiff/energy.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "phdiff/error.hpp"

namespace phdiff {
namespace {

double fd_step(double xi, double h) {
  if (h > 0.0) return h;
  return std::cbrt(std::numeric_limits<double>::epsilon()) * (1.0 + std::abs(xi));
}

Eigen::LLT<Eigen::MatrixXd> checked_cholesky(const Matrix& p) {
  if (p.rows() != p.cols() || p.rows() == 0) {
    throw Error(ErrorCode::kNotPD, "P must be a non-empty square matrix");
  }
  const double asym = (p - p.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance) {
    throw Error(ErrorCode::kNotPD, "P is not symmetric (max|P - P^T| = " + std::to_string(asym) + ")");
  }
  Eigen::LLT<Eigen::MatrixXd> llt{Eigen::MatrixXd(p)};
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPD, "P is not positive definite");
  }
  return llt;
}

}  // namespace

std::optional<Matrix> EnergyModel::hessian(const Vector&, double) const { return std::nullopt; }

double EnergyModel::time_derivative(const Vector&, double) const { return 0.0; }

QuadraticEnergy::QuadraticEnergy(Matrix p) : p_(std::move(p)) { checked_cholesky(p_); }

double QuadraticEnergy::value(const Vector& x, double) const {
  require_dim("x", x.size(), dim());
  return 0.5 * x.dot(p_ * x);
}

Vector QuadraticEnergy::gradient(const Vector& x, double) const {
  require_dim("x", x.size(), dim());
  return p_ * x;
}

std::optional<Matrix> QuadraticEnergy::hessian(const Vector& x, double) const {
  require_dim("x", x.size(), dim());
  return p_;
}

Vector QuadraticEnergy::params() const {
  return Eigen::Map<const Vector>(p_.data(), p_.size());
}

double QuarticWellEnergy::value(const Vector& x, double) const {
  require_dim("x", x.size(), 2);
  const double a = x[0] * x[0] - 1.0;
  const double b = x[1] * x[1] - 1.0;
  return a * a + b * b;
}

Vector QuarticWellEnergy::gradient(const Vector& x, double) const {
  require_dim("x", x.size(), 2);
  Vector g(2);
  g[0] = 4.0 * x[0] * (x[0] * x[0] - 1.0);
  g[1] = 4.0 * x[1] * (x[1] * x[1] - 1.0);
  return g;
}

std::optional<Matrix> QuarticWellEnergy::hessian(const Vector& x, double) const {
  require_dim("x", x.size(), 2);
  Matrix h = Matrix::Zero(2, 2);
  h(0, 0) = 12.0 * x[0] * x[0] - 4.0;
  h(1, 1) = 12.0 * x[1] * x[1] - 4.0;
  return h;
}

Vector score(const EnergyModel& model, const Vector& x, double t) {
  require_dim("x", x.size(), model.dim());
  return -model.gradient(x, t);
}

Vector finite_diff_gradient(const EnergyModel& model, const Vector& x, double t, double h) {
  require_dim("x", x.size(), model.dim());
  Vector grad(x.size());
  Vector probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double step = fd_step(x[i], h);
    probe[i] = x[i] + step;
    const double up = model.value(probe, t);
    probe[i] = x[i] - step;
    const double down = model.value(probe, t);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

Matrix finite_diff_hessian(const EnergyModel& model, const Vector& x, double t, double h) {
  require_dim("x", x.size(), model.dim());
  const Index n = x.size();
  Matrix hess(n, n);
  Vector probe = x;
  for (Index i = 0; i < n; ++i) {
    const double step = fd_step(x[i], h);
    probe[i] = x[i] + step;
    const Vector up = model.gradient(probe, t);
    probe[i] = x[i] - step;
    const Vector down = model.gradient(probe, t);
    probe[i] = x[i];
    hess.col(i) = (up - down) / (2.0 * step);
  }
  return 0.5 * (hess + hess.transpose());
}

Matrix hessian_or_fallback(const EnergyModel& model, const Vector& x, double t,
                           HessianFallback fallback) {
  if (model.has_hessian()) {
    if (auto h = model.hessian(x, t)) return *std::move(h);
  }
  if (fallback == HessianFallback::kAnalyticOnly) {
    throw Error(ErrorCode::kHessianUnavailable,
                "model '" + model.name() + "' provides no analytic Hessian");
  }
  return finite_diff_hessian(model, x, t);
}

double hessian_trace_term(const EnergyModel& model, const Vector& x, double t,
                          const StructureMatrices& s, HessianFallback fallback) {
  require_dim("x", x.size(), s.n());
  const Matrix hess = hessian_or_fallback(model, x, t, fallback);
  // Tr(A B) for symmetric A, B is the sum of the elementwise product.
  return 0.5 * s.ggt().cwiseProduct(hess.transpose()).sum();
}

double gaussian_log_density(const Matrix& p, const Vector& x) {
  const auto llt = checked_cholesky(p);
  require_dim("x", x.size(), p.rows());
  const double n = static_cast<double>(x.size());
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * x.dot(p * x) - 0.5 * n * std::log(2.0 * std::numbers::pi) + 0.5 * log_det;
}

}  // namespace phdiff

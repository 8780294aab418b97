#include "phdiff/structure.hpp"

#include <string>
#include <vector>

#include "phdiff/error.hpp"

namespace phdiff {

StructureMatrices::StructureMatrices(Matrix j, Matrix r, Matrix g)
    : j_(std::move(j)), r_(std::move(r)), g_(std::move(g)) {
  ggt_ = g_ * g_.transpose();
  open_loop_ = j_ - r_;
  closed_loop_ = open_loop_ - ggt_;
}

double min_symmetric_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

StructureMatrices validate_structure(const Matrix& j, const Matrix& r, const Matrix& g) {
  if (j.rows() != j.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "J must be square, got " + std::to_string(j.rows()) + "x" +
                    std::to_string(j.cols()));
  }
  const Index n = j.rows();
  if (r.rows() != n || r.cols() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "R must be " + std::to_string(n) + "x" + std::to_string(n) + ", got " +
                    std::to_string(r.rows()) + "x" + std::to_string(r.cols()));
  }
  require_dim("G rows", g.rows(), n);

  std::vector<StructureViolation> violations;
  const double skew = n == 0 ? 0.0 : (j + j.transpose()).cwiseAbs().maxCoeff();
  if (skew > kSkewTolerance) {
    violations.push_back({ErrorCode::kNotSkew, "max|J + J^T|", skew, kSkewTolerance});
  }
  const double asym = n == 0 ? 0.0 : (r - r.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance) {
    violations.push_back({ErrorCode::kNotSymmetric, "max|R - R^T|", asym, kSymmetryTolerance});
  }
  const double lambda = min_symmetric_eigenvalue(r);
  if (lambda < -kPsdTolerance) {
    violations.push_back({ErrorCode::kNotPSD, "min eigenvalue of R", lambda, -kPsdTolerance});
  }
  if (!violations.empty()) throw StructureError(std::move(violations));
  return StructureMatrices(j, r, g);
}

EffectiveDissipation effective_dissipation(const StructureMatrices& s) {
  Matrix d = s.r() + s.ggt();
  const double lambda = min_symmetric_eigenvalue(d);
  return {std::move(d), lambda};
}

double skew_power_check(const StructureMatrices& s, const Vector& v) {
  require_dim("v", v.size(), s.n());
  return v.dot(s.j() * v);
}

}  // namespace phdiff

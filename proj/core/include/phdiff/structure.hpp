#pragma once

#include "phdiff/types.hpp"

namespace phdiff {

// Tolerances for the structural invariants. Entries are assumed O(1).
inline constexpr double kSkewTolerance = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPsdTolerance = 1e-10;

// Constant port-Hamiltonian structure: interconnection J (skew), dissipation R
// (symmetric PSD) and input/noise coupling G (n x m). Only obtainable through
// validate_structure, so every instance satisfies the invariants above.
class StructureMatrices {
 public:
  const Matrix& j() const noexcept { return j_; }
  const Matrix& r() const noexcept { return r_; }
  const Matrix& g() const noexcept { return g_; }
  Index n() const noexcept { return j_.rows(); }
  Index m() const noexcept { return g_.cols(); }

  // G G^T, cached at validation.
  const Matrix& ggt() const noexcept { return ggt_; }
  // J - R (open-loop drift matrix).
  const Matrix& open_loop() const noexcept { return open_loop_; }
  // J - R - G G^T (closed-loop matrix under u = -G^T grad H).
  const Matrix& closed_loop() const noexcept { return closed_loop_; }

 private:
  friend StructureMatrices validate_structure(const Matrix& j, const Matrix& r, const Matrix& g);
  StructureMatrices(Matrix j, Matrix r, Matrix g);

  Matrix j_;
  Matrix r_;
  Matrix g_;
  Matrix ggt_;
  Matrix open_loop_;
  Matrix closed_loop_;
};

struct EffectiveDissipation {
  Matrix d;  // R + G G^T
  double min_eigenvalue;

  // Asymptotic-stability precondition R + G G^T > 0.
  bool positive_definite() const noexcept { return min_eigenvalue > 0.0; }
};

// Throws StructureError listing every violation (NotSkew, NotSymmetric, NotPSD)
// with its residual, or Error(kDimensionMismatch) for shape problems.
StructureMatrices validate_structure(const Matrix& j, const Matrix& r, const Matrix& g);

EffectiveDissipation effective_dissipation(const StructureMatrices& s);

// v^T J v; vanishes for skew J up to rounding.
double skew_power_check(const StructureMatrices& s, const Vector& v);

// Smallest eigenvalue of a symmetric matrix (symmetrized before decomposition).
double min_symmetric_eigenvalue(const Matrix& a);

}  // namespace phdiff

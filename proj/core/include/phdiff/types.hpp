#pragma once

#include <Eigen/Dense>

namespace phdiff {

// Dense row-major storage; all shipped systems are small (n <= 16).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace phdiff

#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace zl {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

/// Family index j (the sequence parameter n in expressions).
using Index = long;

using Schedule = std::vector<Index>;

}  // namespace zl

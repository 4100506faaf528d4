#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "zl/family.hpp"
#include "zl/types.hpp"

namespace zl::test {

inline CVec vec(std::initializer_list<Complex> values) {
  CVec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index a = 0;
  for (Complex z : values) v(a++) = z;
  return v;
}

inline Complex random_complex(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  return {g(rng), g(rng)};
}

/// Point with every coordinate modulus in [lo, hi] and uniform phase.
inline CVec random_annulus_point(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> r(lo, hi), phase(0.0, 2.0 * std::numbers::pi);
  CVec p(n);
  for (int a = 0; a < n; ++a) p(a) = std::polar(r(rng), phase(rng));
  return p;
}

/// Central differences with real step h along each coordinate.
inline CMat finite_difference_jacobian(const HolomorphicFamily& f, const CVec& p, Index j, double h = 1e-5) {
  CMat J(f.target_dim(), f.ambient_dim);
  for (int b = 0; b < f.ambient_dim; ++b) {
    CVec plus = p, minus = p;
    plus(b) += h;
    minus(b) -= h;
    J.col(b) = (eval(f, plus, j) - eval(f, minus, j)) / (2.0 * h);
  }
  return J;
}

inline double relative_error(const CMat& a, const CMat& b) {
  const double scale = std::max(a.norm(), 1e-300);
  return (a - b).norm() / scale;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("zl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace zl::test

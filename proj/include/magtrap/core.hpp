#pragma once

// Shared vocabulary types: fixed-size coordinate vectors and matrices, and the
// exception hierarchy used across the library.

#include <Eigen/Dense>

#include <array>
#include <numbers>
#include <stdexcept>
#include <string>

namespace magtrap {

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;

template <int D>
using Mat = Eigen::Matrix<double, D, D>;

// gamma[k](i, j) = Γ^k_ij
template <int D>
using Christoffel = std::array<Mat<D>, D>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// A point fell outside the open coordinate domain, or an argument is outside
// the interval where a function is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A numerical procedure failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A requested construction is not available for the given scenario.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Scenario or run configuration failed validation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <int D>
inline Vec<D> unit(int i) {
  Vec<D> e = Vec<D>::Zero();
  e[i] = 1.0;
  return e;
}

inline double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w -= kTwoPi;
  return w;
}

}  // namespace magtrap

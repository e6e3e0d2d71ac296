#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace tsne {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// n x 2 map; column l holds the l-th coordinate of every point.
template <typename Scalar>
using Coords = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

using Index = Eigen::Index;

/// Raised when a computation leaves the representable or convergent regime.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A step produced a non-finite or runaway coordinate at a known iteration.
class DivergenceError : public NumericError {
public:
  DivergenceError(const std::string& what, long iteration)
      : NumericError(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  long iteration() const noexcept { return iteration_; }

private:
  long iteration_;
};

/// A ratio that may have a vanishing denominator. Serialized as "inf"
/// rather than a floating-point infinity when `infinite` is set.
struct Ratio {
  double value = 0.0;
  bool infinite = false;

  static Ratio inf() { return {std::numeric_limits<double>::infinity(), true}; }
  static Ratio of(double num, double den, double tiny = 0.0) {
    if (std::abs(den) <= tiny) return inf();
    return {num / den, false};
  }
};

}  // namespace tsne

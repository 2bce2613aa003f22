#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace dses {

/// Largest workspace dimension m supported without heap allocation.
inline constexpr int kMaxDim = 10;

/// A point or direction in the m-dimensional workspace. Storage is inline
/// (no allocation) so per-step vehicle updates stay cheap.
using Point = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using PointRef = Eigen::Ref<const Eigen::VectorXd>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input with the wrong shape or an out-of-domain value.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A modelling assumption the theory relies on does not hold
/// (strong connectivity, positive-definite aggregate curvature).
class AssumptionViolation : public Error {
 public:
  AssumptionViolation(std::string assumption, const std::string& what)
      : Error(what + " [" + assumption + "]"), assumption_(std::move(assumption)) {}
  const std::string& assumption() const noexcept { return assumption_; }

 private:
  std::string assumption_;
};

/// Time step too large for the excitation time scale.
class StabilityGuard : public Error {
 public:
  using Error::Error;
};

/// The directed-controller gain 1/r_ii would blow up.
class GainBlowup : public Error {
 public:
  using Error::Error;
};

/// The max set {z : H z = b} of a quadratic field is empty.
class EmptyArgmax : public Error {
 public:
  using Error::Error;
};

/// The requested computation is not defined for this configuration.
class UnsupportedMode : public Error {
 public:
  using Error::Error;
};

/// Scenario configuration is malformed or semantically invalid.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dses

#pragma once

#include <cstdint>
#include <random>

#include "dses/types.hpp"

namespace dses {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t x) noexcept;

/// Seed of stream `stream` under `master`. Distinct (master, stream) pairs
/// give statistically independent engines.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

/// Standard-normal source for one vehicle. Keyed by (master_seed, stream_id),
/// so a stream's draws never depend on how many other streams exist.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

  double normal() { return dist_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

struct OUParams {
  double epsilon = 0.05;
  double g = 0.6;
};

/// d eta = -(1/eps) eta dt + (g / sqrt(eps)) dw, one independent Brownian
/// motion per component.
class OUProcess {
 public:
  /// Throws InvalidInput unless epsilon > 0 and g >= 0.
  OUProcess(Point eta0, OUParams params, RngStream rng);

  const Point& eta() const noexcept { return eta_; }
  const OUParams& params() const noexcept { return params_; }
  int dimension() const noexcept { return static_cast<int>(eta_.size()); }

  /// Euler-Maruyama step; returns the new state. Throws StabilityGuard when
  /// dt > epsilon / 10.
  const Point& step(double dt);

  /// Exact-in-distribution update (exponential decay plus the exact Gaussian
  /// increment). Any dt > 0.
  const Point& step_exact(double dt);

 private:
  Point eta_;
  OUParams params_;
  RngStream rng_;
};

/// Largest admissible Euler-Maruyama step for the given time scale.
inline double max_ou_step(double epsilon) { return epsilon / 10.0; }

/// Componentwise d sin(eta) = cos(eta) d_eta - 1/2 sin(eta) (g^2/eps) dt,
/// evaluated at the pre-step state eta.
Point ito_sin_increment(const Point& eta, const Point& d_eta, const OUParams& params, double dt);

/// Time average (1/T) int_0^T sin^k(eta(t)) dt by the trapezoid rule,
/// averaged over components. Advances `process` by `horizon`.
double ergodic_moment(OUProcess& process, int k, double horizon, double dt);

/// Closed-form stationary moment of sin^k under the invariant law
/// N(0, g^2/2): 0 for odd k, (1 - exp(-g^2))/2 for k = 2.
double stationary_sin_moment(int k, double g);

}  // namespace dses

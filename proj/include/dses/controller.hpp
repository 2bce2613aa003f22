#pragma once

#include <memory>
#include <optional>
#include <span>

#include "dses/graph.hpp"
#include "dses/types.hpp"

namespace dses {

/// Discrete washout (high-pass s/(s+h)) filter. The state x tracks the
/// low-frequency part of the input; the output is input - x.
class WashoutFilter {
 public:
  WashoutFilter(double h, double x0);

  double h() const noexcept { return h_; }
  double state() const noexcept { return x_; }

  /// Returns Delta = u_in - x (pre-update x), then x += h * Delta * dt.
  double step(double u_in, double dt);

 private:
  double h_;
  double x_;
};

struct ControllerGains {
  double alpha = 0.01;
  double beta = 2.5;
  double gamma = 0.01;
  double h = 1.0;
  /// Directed controller only. The position-coupling factor phi is always
  /// derived from it, never stored.
  std::optional<double> varrho;
};

/// phi = varrho + (1 + alpha) / (alpha varrho).
double phi_from_varrho(double alpha, double varrho);

/// Smaller positive root of varrho^2 - phi varrho + (1 + alpha)/alpha = 0.
/// Throws InvalidInput when phi is too small for a real root.
double varrho_from_phi(double alpha, double phi);

class ControllerConfig {
 public:
  /// Throws InvalidInput unless alpha, beta, gamma, h > 0 (and varrho > 0 if set).
  ControllerConfig(ControllerGains gains, std::shared_ptr<const InteractionGraph> graph);

  const ControllerGains& gains() const noexcept { return gains_; }
  double alpha() const noexcept { return gains_.alpha; }
  double beta() const noexcept { return gains_.beta; }
  double gamma() const noexcept { return gains_.gamma; }
  double h() const noexcept { return gains_.h; }
  bool has_varrho() const noexcept { return gains_.varrho.has_value(); }
  /// Throws UnsupportedMode when varrho is not configured.
  double varrho() const;
  double phi() const;
  const InteractionGraph& graph() const noexcept { return *graph_; }
  const std::shared_ptr<const InteractionGraph>& graph_ptr() const noexcept { return graph_; }

 private:
  ControllerGains gains_;
  std::shared_ptr<const InteractionGraph> graph_;
};

/// What vehicle i can sense about neighbor j: relative position z_j - z_i,
/// relative integrator v_j - v_i and (directed only) r_j - r_i.
struct NeighborSample {
  std::size_t index = 0;
  Point dz;
  Point dv;
  Vector dr;
};

struct ControlOutput {
  /// Position increment u_i dt over one step, Ito excitation term included.
  Point increment;
  /// Consensus-integrator rate dv_i/dt.
  Point v_rate;
  /// Eigenvector-estimate rate dr_i/dt (directed only, else empty).
  Vector r_rate;
};

inline constexpr double kRFloor = 1e-6;

/// Undirected DSES law. Only relative quantities and the local washout
/// output enter. Throws ConfigError when `neighbors` does not list exactly
/// the graph neighbors of i in increasing order.
ControlOutput undirected_control(std::size_t i, std::span<const NeighborSample> neighbors,
                                 double delta, const Point& eta, const Point& d_sin,
                                 const ControllerConfig& cfg, double dt);

/// Directed DSES law: phi-scaled relative positions, gain beta / r_ii, plus
/// the r-consensus rate. Throws GainBlowup when r_ii <= kRFloor.
ControlOutput directed_control(std::size_t i, std::span<const NeighborSample> neighbors,
                               double delta, const Point& eta, const Point& d_sin, double r_ii,
                               const ControllerConfig& cfg, double dt);

}  // namespace dses

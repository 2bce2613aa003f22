#include "dses/controller.hpp"

#include <cmath>
#include <sstream>

namespace dses {
namespace {

bool positive(double x) { return std::isfinite(x) && x > 0.0; }

void check_neighbors(std::size_t i, std::span<const NeighborSample> neighbors,
                     const InteractionGraph& graph) {
  if (i >= graph.size()) throw ConfigError("controller: vehicle index out of range");
  const auto& expected = graph.neighbors(i);
  if (neighbors.size() != expected.size()) {
    std::ostringstream os;
    os << "controller: vehicle " << i << " has " << expected.size() << " neighbors, got "
       << neighbors.size() << " samples";
    throw ConfigError(os.str());
  }
  for (std::size_t k = 0; k < neighbors.size(); ++k)
    if (neighbors[k].index != expected[k]) {
      std::ostringstream os;
      os << "controller: sample " << k << " of vehicle " << i << " is from vehicle "
         << neighbors[k].index << ", expected " << expected[k];
      throw ConfigError(os.str());
    }
}

}  // namespace

WashoutFilter::WashoutFilter(double h, double x0) : h_(h), x_(x0) {
  if (!positive(h_)) throw InvalidInput("washout filter: h must be positive");
}

double WashoutFilter::step(double u_in, double dt) {
  const double delta = u_in - x_;
  x_ += h_ * delta * dt;
  return delta;
}

double phi_from_varrho(double alpha, double varrho) {
  if (!positive(alpha) || !positive(varrho)) throw InvalidInput("phi: alpha and varrho must be positive");
  return varrho + (1.0 + alpha) / (alpha * varrho);
}

double varrho_from_phi(double alpha, double phi) {
  if (!positive(alpha) || !positive(phi)) throw InvalidInput("varrho: alpha and phi must be positive");
  const double c = (1.0 + alpha) / alpha;
  const double disc = phi * phi - 4.0 * c;
  if (disc < 0.0) {
    std::ostringstream os;
    os << "varrho: phi = " << phi << " is below the minimum 2*sqrt((1+alpha)/alpha) = "
       << 2.0 * std::sqrt(c);
    throw InvalidInput(os.str());
  }
  // Smaller root written as c / larger root to avoid cancellation.
  return c / (0.5 * (phi + std::sqrt(disc)));
}

ControllerConfig::ControllerConfig(ControllerGains gains,
                                   std::shared_ptr<const InteractionGraph> graph)
    : gains_(gains), graph_(std::move(graph)) {
  if (!graph_) throw InvalidInput("controller: graph is required");
  if (!positive(gains_.alpha) || !positive(gains_.beta) || !positive(gains_.gamma) ||
      !positive(gains_.h))
    throw InvalidInput("controller: alpha, beta, gamma and h must be positive");
  if (gains_.varrho && !positive(*gains_.varrho))
    throw InvalidInput("controller: varrho must be positive");
}

double ControllerConfig::varrho() const {
  if (!gains_.varrho) throw UnsupportedMode("controller: varrho is not configured");
  return *gains_.varrho;
}

double ControllerConfig::phi() const { return phi_from_varrho(gains_.alpha, varrho()); }

ControlOutput undirected_control(std::size_t i, std::span<const NeighborSample> neighbors,
                                 double delta, const Point& eta, const Point& d_sin,
                                 const ControllerConfig& cfg, double dt) {
  const auto& graph = cfg.graph();
  check_neighbors(i, neighbors, graph);
  const auto m = eta.size();
  Point consensus = Point::Zero(m);
  Point v_rate = Point::Zero(m);
  for (const auto& s : neighbors) {
    const double a = graph.weight(i, s.index);
    consensus += a * (s.dz + s.dv);
    v_rate -= a * s.dz;
  }
  ControlOutput out;
  out.increment.resize(m);
  for (Eigen::Index k = 0; k < m; ++k)
    out.increment[k] = (cfg.alpha() * consensus[k] + cfg.beta() * std::sin(eta[k]) * delta) * dt +
                       cfg.gamma() * d_sin[k];
  out.v_rate = v_rate;
  return out;
}

ControlOutput directed_control(std::size_t i, std::span<const NeighborSample> neighbors,
                               double delta, const Point& eta, const Point& d_sin, double r_ii,
                               const ControllerConfig& cfg, double dt) {
  const auto& graph = cfg.graph();
  check_neighbors(i, neighbors, graph);
  if (!(r_ii > kRFloor)) {
    std::ostringstream os;
    os << "controller: r_ii = " << r_ii << " of vehicle " << i << " is at or below the floor "
       << kRFloor;
    throw GainBlowup(os.str());
  }
  const double phi = cfg.phi();
  const auto m = eta.size();
  const auto n = static_cast<Eigen::Index>(graph.size());
  Point consensus = Point::Zero(m);
  Point v_rate = Point::Zero(m);
  Vector r_rate = Vector::Zero(n);
  for (const auto& s : neighbors) {
    const double a = graph.weight(i, s.index);
    consensus += a * (phi * s.dz + s.dv);
    v_rate -= a * s.dz;
    if (s.dr.size() != n) throw InvalidInput("directed controller: r difference must be an n-vector");
    r_rate += a * s.dr;
  }
  const double gain = cfg.beta() / r_ii;
  ControlOutput out;
  out.increment.resize(m);
  for (Eigen::Index k = 0; k < m; ++k)
    out.increment[k] = (cfg.alpha() * consensus[k] + gain * std::sin(eta[k]) * delta) * dt +
                       cfg.gamma() * d_sin[k];
  out.v_rate = v_rate;
  out.r_rate = std::move(r_rate);
  return out;
}

}  // namespace dses

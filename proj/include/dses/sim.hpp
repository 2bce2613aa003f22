#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dses/controller.hpp"
#include "dses/excitation.hpp"
#include "dses/fields.hpp"
#include "dses/graph.hpp"

namespace dses {

enum class SimMode { Undirected, Directed, AveragedUndirected, AveragedDirected };

std::string to_string(SimMode mode);
SimMode sim_mode_from_string(const std::string& name);
bool is_directed(SimMode mode) noexcept;
bool is_averaged(SimMode mode) noexcept;

struct SimConfig {
  SimMode mode = SimMode::Undirected;
  double t0 = 0.0;
  double t_end = 2000.0;
  double dt = 1e-3;
  std::size_t sample_stride = 100;
  std::uint64_t master_seed = 0;

  std::shared_ptr<const FieldSet> fields;
  std::shared_ptr<const InteractionGraph> graph;
  ControllerGains gains;
  OUParams excitation;

  std::vector<Vector> initial_positions;
  /// Empty means all zeros.
  std::vector<Vector> initial_integrators;
  /// Source position used for error columns. Computed from the fields when
  /// they are all quadratic and this is unset.
  std::optional<Vector> source;
};

/// Checks every configuration invariant (shapes, gains, step guard,
/// connectivity, graph/mode agreement). Throws on the first violation.
void validate(const SimConfig& cfg);

/// z* for the configuration: the explicit source if set, else the closed
/// form for quadratic fields, else nullopt.
std::optional<Vector> resolve_source(const SimConfig& cfg);

struct VehicleState {
  Point z;
  Point v;
  WashoutFilter washout;
  OUProcess excitation;
};

struct WorldState {
  double t = 0.0;
  long long step_index = 0;
  std::vector<VehicleState> vehicles;
  /// Column i is vehicle i's left-eigenvector estimate r_i (directed only).
  Matrix r;
};

/// Time-sampled per-vehicle rows. Row (s, i) is sample s of vehicle i.
class TrajectoryRecord {
 public:
  TrajectoryRecord() = default;
  TrajectoryRecord(std::size_t vehicles, int dimension, bool has_source, bool has_r);

  std::size_t vehicles() const noexcept { return n_; }
  int dimension() const noexcept { return m_; }
  bool has_source() const noexcept { return has_source_; }
  bool has_r() const noexcept { return has_r_; }
  std::size_t samples() const noexcept { return times_.size(); }
  const std::vector<double>& times() const noexcept { return times_; }

  Eigen::Map<const Vector> z(std::size_t s, std::size_t i) const;
  Eigen::Map<const Vector> v(std::size_t s, std::size_t i) const;
  double f(std::size_t s, std::size_t i) const { return f_[s * n_ + i]; }
  double err_tilde(std::size_t s, std::size_t i) const { return err_tilde_[s * n_ + i]; }
  double err_consensus(std::size_t s, std::size_t i) const { return err_consensus_[s * n_ + i]; }
  /// r estimate matrix at sample s (column i = r_i). Directed runs only.
  Eigen::Map<const Matrix> r(std::size_t s) const;

  /// Largest err_tilde over vehicles at sample s.
  double max_err_tilde(std::size_t s) const;
  double max_err_consensus(std::size_t s) const;

  void append(double t, const std::vector<Point>& z, const std::vector<Point>& v,
              const std::vector<double>& f, const std::vector<double>& err_tilde,
              const Matrix* r);

  bool operator==(const TrajectoryRecord& other) const = default;

 private:
  std::size_t n_ = 0;
  int m_ = 0;
  bool has_source_ = false;
  bool has_r_ = false;
  std::vector<double> times_;
  std::vector<double> z_, v_, f_, err_tilde_, err_consensus_, r_;
};

/// A non-finite state appeared. Carries the trajectory up to the failure
/// when raised from run().
class DivergenceError : public Error {
 public:
  DivergenceError(std::size_t vehicle, double t);
  std::size_t vehicle() const noexcept { return vehicle_; }
  double time() const noexcept { return t_; }
  std::shared_ptr<const TrajectoryRecord> partial() const noexcept { return partial_; }
  void attach(TrajectoryRecord record);

 private:
  std::size_t vehicle_;
  double t_;
  std::shared_ptr<const TrajectoryRecord> partial_;
};

/// Closed-loop stochastic simulation of the networked vehicles. Owns its
/// world state; configuration is validated once at construction.
class Simulation {
 public:
  explicit Simulation(SimConfig cfg);

  const SimConfig& config() const noexcept { return cfg_; }
  const WorldState& state() const noexcept { return world_; }
  const std::optional<Vector>& source() const noexcept { return source_; }

  /// One synchronous Euler-Maruyama step: every vehicle reads the pre-step
  /// world, then all updates are committed together.
  void step();

  /// Appends the current state to `record`.
  void sample(TrajectoryRecord& record) const;

  /// Steps to t_end sampling every sample_stride steps (plus the initial row).
  TrajectoryRecord run();

 private:
  SimConfig cfg_;
  ControllerConfig controller_;
  std::optional<Vector> source_;
  std::vector<std::size_t> vehicle_neighbors_;
  WorldState world_;
  std::vector<NeighborSample> scratch_;
  std::vector<Point> next_z_, next_v_;
  Matrix next_r_;
};

/// run() for a stochastic mode.
TrajectoryRecord run(const SimConfig& cfg);

/// Deterministic averaged system integrated with fixed-step RK4 in
/// (z~, v[, r]). Requires quadratic fields. Stochastic modes map to their
/// averaged counterparts.
TrajectoryRecord run_averaged(const SimConfig& cfg);

/// Weights xi / sum(xi) the r-estimates converge to under the standard
/// initialization; all ones / n for undirected graphs.
Vector eigenvector_limit(const InteractionGraph& graph);

/// Equilibrium integrator state v_eq of the averaged system (stacked, mn),
/// with the conserved weighted sum fixed by the initial integrators.
Vector averaged_v_equilibrium(const SimConfig& cfg);

/// Right-hand side of the averaged system at stacked state (z~, v) with the
/// r-estimates frozen at `r_diag` (all ones for undirected). Used by the
/// Lyapunov checks.
Vector averaged_rhs(const SimConfig& cfg, const Vector& state, const Vector& r_diag);

/// Exponential envelope rho e^{-rate (t - t0)} + delta. An unset rho is
/// taken per trajectory as max_i ||z~_i(t0)||.
struct Envelope {
  std::optional<double> rho;
  double rate = 0.0;
  double delta = std::numeric_limits<double>::infinity();
  double value(double rho_used, double t, double t0) const;
};

struct MonteCarloOptions {
  std::size_t trials = 20;
  Envelope envelope;
  /// Final fraction of the horizon used for time-averaged positions.
  double window_fraction = 0.2;
  /// Radius for the time-to-tolerance statistic.
  double tolerance = 0.15;
  /// Point the window distance is measured from; the source when unset.
  std::optional<Vector> reference;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;
  /// Keep trial 0's trajectory in MonteCarloStats::first_record.
  bool keep_first = false;
};

struct TrialSummary {
  std::uint64_t seed = 0;
  /// max_i ||z~_i|| at the final sample.
  double terminal_error = 0.0;
  /// max_i || mean over the final window of z_i - reference ||.
  double window_distance = 0.0;
  /// First sample time after which max_i ||z~_i|| stays within tolerance;
  /// +inf if never.
  double time_to_tolerance = std::numeric_limits<double>::infinity();
  std::vector<bool> within_envelope;
  /// Set when the trial diverged.
  std::string error;
};

struct MonteCarloStats {
  std::vector<double> times;
  /// Per sample time, fraction of trials whose max_i ||z~_i|| is inside the envelope.
  std::vector<double> fraction_within;
  std::vector<TrialSummary> trials;
  double terminal_q10 = 0.0, terminal_q50 = 0.0, terminal_q90 = 0.0;
  std::optional<TrajectoryRecord> first_record;

  std::size_t count_window_within(double radius) const;
  double median_time_to_tolerance() const;
};

/// Window and tolerance statistics of one trajectory against z*.
TrialSummary summarize_trial(const TrajectoryRecord& record, const Vector& source,
                             const MonteCarloOptions& options);

/// Runs `options.trials` independent trials with seeds master_seed + k.
/// Results are stored by trial index, so statistics do not depend on
/// scheduling.
MonteCarloStats monte_carlo(const SimConfig& cfg, const MonteCarloOptions& options);

}  // namespace dses

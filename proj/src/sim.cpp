#include "dses/sim.hpp"

#include <cmath>
#include <sstream>

namespace dses {
namespace {

ControllerConfig make_controller(const SimConfig& cfg) {
  validate(cfg);
  return ControllerConfig(cfg.gains, cfg.graph);
}

std::string describe_size(const char* what, std::size_t got, std::size_t want) {
  std::ostringstream os;
  os << what << ": got " << got << ", expected " << want;
  return os.str();
}

}  // namespace

std::string to_string(SimMode mode) {
  switch (mode) {
    case SimMode::Undirected: return "undirected";
    case SimMode::Directed: return "directed";
    case SimMode::AveragedUndirected: return "averaged_undirected";
    case SimMode::AveragedDirected: return "averaged_directed";
  }
  return "?";
}

SimMode sim_mode_from_string(const std::string& name) {
  for (auto m : {SimMode::Undirected, SimMode::Directed, SimMode::AveragedUndirected,
                 SimMode::AveragedDirected})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown sim mode '" + name + "'");
}

bool is_directed(SimMode mode) noexcept {
  return mode == SimMode::Directed || mode == SimMode::AveragedDirected;
}

bool is_averaged(SimMode mode) noexcept {
  return mode == SimMode::AveragedUndirected || mode == SimMode::AveragedDirected;
}

void validate(const SimConfig& cfg) {
  if (!cfg.fields) throw ConfigError("sim: no field set");
  if (!cfg.graph) throw ConfigError("sim: no interaction graph");
  const std::size_t n = cfg.graph->size();
  const int m = cfg.fields->dimension();
  if (n == 0) throw ConfigError("sim: empty graph");
  if (cfg.fields->size() != n) throw ConfigError(describe_size("sim: field count", cfg.fields->size(), n));
  if (m < 1 || m > kMaxDim) throw ConfigError("sim: dimension must be between 1 and 10");
  if (cfg.initial_positions.size() != n)
    throw ConfigError(describe_size("sim: initial position count", cfg.initial_positions.size(), n));
  for (const auto& z : cfg.initial_positions)
    if (z.size() != m || !z.allFinite()) throw ConfigError("sim: initial positions must be finite m-vectors");
  if (!cfg.initial_integrators.empty()) {
    if (cfg.initial_integrators.size() != n)
      throw ConfigError(describe_size("sim: initial integrator count", cfg.initial_integrators.size(), n));
    for (const auto& v : cfg.initial_integrators)
      if (v.size() != m || !v.allFinite()) throw ConfigError("sim: initial integrators must be finite m-vectors");
  }
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("sim: dt must be positive");
  if (!std::isfinite(cfg.t0) || !std::isfinite(cfg.t_end) || cfg.t_end < cfg.t0)
    throw ConfigError("sim: need finite t0 <= t_end");
  if (cfg.sample_stride < 1) throw ConfigError("sim: sample_stride must be at least 1");
  if (cfg.source && cfg.source->size() != m) throw ConfigError("sim: source has the wrong dimension");

  if (!is_directed(cfg.mode) && cfg.graph->directed())
    throw ConfigError("sim: mode '" + to_string(cfg.mode) + "' needs an undirected graph");
  if (is_directed(cfg.mode) && !cfg.gains.varrho)
    throw ConfigError("sim: directed modes need varrho (or phi)");
  ControllerConfig check(cfg.gains, cfg.graph);
  (void)check;

  if (!(cfg.excitation.epsilon > 0.0) || !(cfg.excitation.g > 0.0))
    throw ConfigError("sim: excitation epsilon and g must be positive");
  if (!is_averaged(cfg.mode) && cfg.dt > max_ou_step(cfg.excitation.epsilon) * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "sim: dt = " << cfg.dt << " exceeds epsilon/10 = " << max_ou_step(cfg.excitation.epsilon);
    throw StabilityGuard(os.str());
  }
  if (is_averaged(cfg.mode) && !cfg.fields->all_quadratic())
    throw UnsupportedMode("sim: the averaged system needs quadratic fields (Assumption 2)");
  if (!is_strongly_connected(*cfg.graph))
    throw AssumptionViolation("Assumption 1: strongly connected graph",
                              "sim: interaction graph is not strongly connected");
}

std::optional<Vector> resolve_source(const SimConfig& cfg) {
  if (cfg.source) return cfg.source;
  if (cfg.fields && cfg.fields->all_quadratic()) return aggregate_optimum(*cfg.fields);
  return std::nullopt;
}

// --- TrajectoryRecord ---------------------------------------------------

TrajectoryRecord::TrajectoryRecord(std::size_t vehicles, int dimension, bool has_source, bool has_r)
    : n_(vehicles), m_(dimension), has_source_(has_source), has_r_(has_r) {}

Eigen::Map<const Vector> TrajectoryRecord::z(std::size_t s, std::size_t i) const {
  return Eigen::Map<const Vector>(z_.data() + (s * n_ + i) * m_, m_);
}

Eigen::Map<const Vector> TrajectoryRecord::v(std::size_t s, std::size_t i) const {
  return Eigen::Map<const Vector>(v_.data() + (s * n_ + i) * m_, m_);
}

Eigen::Map<const Matrix> TrajectoryRecord::r(std::size_t s) const {
  if (!has_r_) throw InvalidInput("trajectory: no r estimates recorded");
  const auto n = static_cast<Eigen::Index>(n_);
  return Eigen::Map<const Matrix>(r_.data() + s * n_ * n_, n, n);
}

double TrajectoryRecord::max_err_tilde(std::size_t s) const {
  if (!has_source_) throw InvalidInput("trajectory: no err_tilde column (source unknown)");
  double out = 0.0;
  for (std::size_t i = 0; i < n_; ++i) out = std::max(out, err_tilde(s, i));
  return out;
}

double TrajectoryRecord::max_err_consensus(std::size_t s) const {
  double out = 0.0;
  for (std::size_t i = 0; i < n_; ++i) out = std::max(out, err_consensus(s, i));
  return out;
}

void TrajectoryRecord::append(double t, const std::vector<Point>& z, const std::vector<Point>& v,
                              const std::vector<double>& f, const std::vector<double>& err_tilde,
                              const Matrix* r) {
  if (z.size() != n_ || v.size() != n_ || f.size() != n_)
    throw InvalidInput("trajectory: row has the wrong vehicle count");
  if (has_source_ && err_tilde.size() != n_) throw InvalidInput("trajectory: missing err_tilde");
  if (has_r_ && !r) throw InvalidInput("trajectory: missing r estimates");
  if (!times_.empty() && t < times_.back()) throw InvalidInput("trajectory: time went backwards");
  times_.push_back(t);

  Point mean = Point::Zero(m_);
  for (const auto& zi : z) mean += zi;
  mean /= static_cast<double>(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    z_.insert(z_.end(), z[i].data(), z[i].data() + m_);
    v_.insert(v_.end(), v[i].data(), v[i].data() + m_);
    f_.push_back(f[i]);
    err_consensus_.push_back((z[i] - mean).norm());
    if (has_source_) err_tilde_.push_back(err_tilde[i]);
  }
  if (has_r_) r_.insert(r_.end(), r->data(), r->data() + r->size());
}

// --- DivergenceError ----------------------------------------------------

DivergenceError::DivergenceError(std::size_t vehicle, double t)
    : Error([&] {
        std::ostringstream os;
        os << "sim: non-finite state at vehicle " << vehicle << ", t = " << t;
        return os.str();
      }()),
      vehicle_(vehicle),
      t_(t) {}

void DivergenceError::attach(TrajectoryRecord record) {
  partial_ = std::make_shared<const TrajectoryRecord>(std::move(record));
}

// --- Simulation ---------------------------------------------------------

Simulation::Simulation(SimConfig cfg)
    : cfg_(std::move(cfg)), controller_(make_controller(cfg_)), source_(resolve_source(cfg_)) {
  if (is_averaged(cfg_.mode))
    throw UnsupportedMode("sim: averaged modes are integrated by run_averaged");
  const std::size_t n = cfg_.graph->size();
  const int m = cfg_.fields->dimension();
  world_.t = cfg_.t0;
  world_.vehicles.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Point z = cfg_.initial_positions[i];
    Point v = cfg_.initial_integrators.empty() ? Point(Point::Zero(m)) : Point(cfg_.initial_integrators[i]);
    const double f0 = eval_field((*cfg_.fields)[i], z);
    world_.vehicles.push_back(VehicleState{
        z, v, WashoutFilter(cfg_.gains.h, f0),
        OUProcess(Point::Zero(m), cfg_.excitation, RngStream(cfg_.master_seed, i))});
  }
  if (is_directed(cfg_.mode)) {
    world_.r = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    next_r_ = world_.r;
  }
  next_z_.resize(n);
  next_v_.resize(n);
  std::size_t max_deg = 0;
  for (std::size_t i = 0; i < n; ++i) max_deg = std::max(max_deg, cfg_.graph->neighbors(i).size());
  scratch_.resize(max_deg);
  for (auto& s : scratch_) {
    s.dz.resize(m);
    s.dv.resize(m);
    if (is_directed(cfg_.mode)) s.dr.resize(static_cast<Eigen::Index>(n));
  }
}

void Simulation::step() {
  const auto& graph = *cfg_.graph;
  const std::size_t n = graph.size();
  const bool directed = is_directed(cfg_.mode);
  const double dt = cfg_.dt;

  for (std::size_t i = 0; i < n; ++i) {
    auto& veh = world_.vehicles[i];
    const double y = eval_field((*cfg_.fields)[i], veh.z);
    const double delta = veh.washout.step(y, dt);
    const Point eta = veh.excitation.eta();
    const Point d_eta = veh.excitation.step(dt) - eta;
    const Point d_sin = ito_sin_increment(eta, d_eta, cfg_.excitation, dt);

    const auto& nbrs = graph.neighbors(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const auto& other = world_.vehicles[nbrs[k]];
      auto& s = scratch_[k];
      s.index = nbrs[k];
      s.dz = other.z - veh.z;
      s.dv = other.v - veh.v;
      if (directed) s.dr = world_.r.col(static_cast<Eigen::Index>(nbrs[k])) - world_.r.col(static_cast<Eigen::Index>(i));
    }
    const std::span<const NeighborSample> samples(scratch_.data(), nbrs.size());
    const auto ii = static_cast<Eigen::Index>(i);
    if (directed) {
      const auto out = directed_control(i, samples, delta, eta, d_sin, world_.r(ii, ii), controller_, dt);
      next_z_[i] = veh.z + out.increment;
      next_v_[i] = veh.v + out.v_rate * dt;
      next_r_.col(ii) = world_.r.col(ii) + out.r_rate * dt;
    } else {
      const auto out = undirected_control(i, samples, delta, eta, d_sin, controller_, dt);
      next_z_[i] = veh.z + out.increment;
      next_v_[i] = veh.v + out.v_rate * dt;
    }
  }

  world_.step_index += 1;
  world_.t = cfg_.t0 + static_cast<double>(world_.step_index) * dt;
  for (std::size_t i = 0; i < n; ++i) {
    auto& veh = world_.vehicles[i];
    veh.z = next_z_[i];
    veh.v = next_v_[i];
    if (!veh.z.allFinite() || !veh.v.allFinite() || !std::isfinite(veh.washout.state()) ||
        (directed && !next_r_.col(static_cast<Eigen::Index>(i)).allFinite()))
      throw DivergenceError(i, world_.t);
  }
  if (directed) world_.r.swap(next_r_);
}

void Simulation::sample(TrajectoryRecord& record) const {
  const std::size_t n = world_.vehicles.size();
  std::vector<Point> z(n), v(n);
  std::vector<double> f(n), err;
  if (source_) err.resize(n);
  const double gamma = cfg_.gains.gamma;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& veh = world_.vehicles[i];
    z[i] = veh.z;
    v[i] = veh.v;
    f[i] = eval_field((*cfg_.fields)[i], veh.z);
    if (source_) {
      const Point sin_eta = veh.excitation.eta().array().sin().matrix();
      err[i] = (veh.z - gamma * sin_eta - *source_).norm();
    }
  }
  record.append(world_.t, z, v, f, err, is_directed(cfg_.mode) ? &world_.r : nullptr);
}

TrajectoryRecord Simulation::run() {
  TrajectoryRecord record(world_.vehicles.size(), cfg_.fields->dimension(), source_.has_value(),
                          is_directed(cfg_.mode));
  sample(record);
  const auto steps = static_cast<long long>(std::llround((cfg_.t_end - cfg_.t0) / cfg_.dt));
  const auto stride = static_cast<long long>(cfg_.sample_stride);
  try {
    for (long long k = world_.step_index; k < steps; ++k) {
      step();
      if (world_.step_index % stride == 0) sample(record);
    }
  } catch (DivergenceError& e) {
    e.attach(std::move(record));
    throw;
  }
  return record;
}

TrajectoryRecord run(const SimConfig& cfg) {
  if (is_averaged(cfg.mode)) return run_averaged(cfg);
  Simulation sim(cfg);
  return sim.run();
}

}  // namespace dses

#include <cmath>

#include <Eigen/QR>

#include "dses/analysis.hpp"
#include "dses/sim.hpp"

namespace dses {
namespace {

// Everything the averaged right-hand side needs, in column-per-vehicle form.
struct AveragedModel {
  int m = 0;
  Eigen::Index n = 0;
  bool directed = false;
  double alpha = 0.0;
  double phi = 1.0;
  double kb = 0.0;  // kappa * beta
  Matrix L;
  std::vector<Matrix> H;
  Matrix grad_offset;  // column i: H_i z* - b_i
  Vector source;
};

AveragedModel build_model(const SimConfig& cfg) {
  validate(cfg);
  if (!cfg.fields->all_quadratic())
    throw UnsupportedMode("averaged system: non-quadratic fields are outside Assumption 2");
  AveragedModel mdl;
  mdl.m = cfg.fields->dimension();
  mdl.n = static_cast<Eigen::Index>(cfg.graph->size());
  mdl.directed = is_directed(cfg.mode);
  mdl.alpha = cfg.gains.alpha;
  mdl.phi = mdl.directed ? phi_from_varrho(cfg.gains.alpha, *cfg.gains.varrho) : 1.0;
  mdl.kb = kappa(cfg.gains.gamma, cfg.excitation.g) * cfg.gains.beta;
  mdl.L = laplacian(*cfg.graph);
  mdl.source = *resolve_source(cfg);
  mdl.grad_offset.resize(mdl.m, mdl.n);
  for (Eigen::Index i = 0; i < mdl.n; ++i) {
    const auto& q = std::get<QuadraticField>((*cfg.fields)[static_cast<std::size_t>(i)]);
    mdl.H.push_back(q.H());
    mdl.grad_offset.col(i) = q.H() * mdl.source - q.b();
  }
  return mdl;
}

// d/dt of (Zt, V, R) with R frozen when `r_rate` is false.
void rhs(const AveragedModel& mdl, const Matrix& Zt, const Matrix& V, const Matrix& R, Matrix& dZ,
         Matrix& dV, Matrix& dR, bool r_rate) {
  const Matrix Lt = mdl.L.transpose();
  dZ = -mdl.alpha * (mdl.phi * Zt + V) * Lt;
  for (Eigen::Index i = 0; i < mdl.n; ++i) {
    const double scale = mdl.directed ? mdl.kb / R(i, i) : mdl.kb;
    dZ.col(i) -= scale * (mdl.H[static_cast<std::size_t>(i)] * Zt.col(i) + mdl.grad_offset.col(i));
  }
  dV = Zt * Lt;
  if (r_rate) dR = -R * Lt;
}

}  // namespace

Vector eigenvector_limit(const InteractionGraph& graph) {
  const auto s = spectral_summary(graph);
  return s.xi / s.xi.sum();
}

Vector averaged_v_equilibrium(const SimConfig& cfg) {
  const auto mdl = build_model(cfg);
  const auto n = mdl.n;
  const Vector xi = spectral_summary(*cfg.graph).xi;
  const Vector w = mdl.directed ? Vector(eigenvector_limit(*cfg.graph)) : Vector(Vector::Ones(n));

  // alpha L V' = -kb R^{-1} G' (rows = vehicles), plus the conserved
  // xi-weighted integrator sum.
  Matrix G(n, mdl.m);
  for (Eigen::Index i = 0; i < n; ++i) G.row(i) = -(mdl.kb / w[i] / mdl.alpha) * mdl.grad_offset.col(i).transpose();
  Matrix V0 = Matrix::Zero(mdl.m, n);
  if (!cfg.initial_integrators.empty())
    for (Eigen::Index i = 0; i < n; ++i) V0.col(i) = cfg.initial_integrators[static_cast<std::size_t>(i)];
  Matrix A(n + 1, n);
  A.topRows(n) = mdl.L;
  A.row(n) = xi.transpose();
  Matrix rhs_m(n + 1, mdl.m);
  rhs_m.topRows(n) = G;
  rhs_m.row(n) = (V0 * xi).transpose();
  const Matrix Vt = A.colPivHouseholderQr().solve(rhs_m);  // n x m
  Vector out(mdl.m * n);
  for (Eigen::Index i = 0; i < n; ++i) out.segment(i * mdl.m, mdl.m) = Vt.row(i).transpose();
  return out;
}

Vector averaged_rhs(const SimConfig& cfg, const Vector& state, const Vector& r_diag) {
  const auto mdl = build_model(cfg);
  const auto mn = mdl.m * mdl.n;
  if (state.size() != 2 * mn) throw InvalidInput("averaged_rhs: state must have length 2mn");
  if (r_diag.size() != mdl.n) throw InvalidInput("averaged_rhs: r_diag must have length n");
  const Matrix Zt = Eigen::Map<const Matrix>(state.data(), mdl.m, mdl.n);
  const Matrix V = Eigen::Map<const Matrix>(state.data() + mn, mdl.m, mdl.n);
  const Matrix R = r_diag.asDiagonal();
  Matrix dZ, dV, dR;
  rhs(mdl, Zt, V, R, dZ, dV, dR, false);
  Vector out(2 * mn);
  out.head(mn) = Eigen::Map<const Vector>(dZ.data(), mn);
  out.tail(mn) = Eigen::Map<const Vector>(dV.data(), mn);
  return out;
}

TrajectoryRecord run_averaged(const SimConfig& cfg_in) {
  SimConfig cfg = cfg_in;
  if (cfg.mode == SimMode::Undirected) cfg.mode = SimMode::AveragedUndirected;
  if (cfg.mode == SimMode::Directed) cfg.mode = SimMode::AveragedDirected;
  const auto mdl = build_model(cfg);
  const auto n = mdl.n;
  const int m = mdl.m;
  const bool directed = mdl.directed;

  Matrix Zt(m, n), V = Matrix::Zero(m, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Zt.col(i) = cfg.initial_positions[static_cast<std::size_t>(i)] - mdl.source;
    if (!cfg.initial_integrators.empty()) V.col(i) = cfg.initial_integrators[static_cast<std::size_t>(i)];
  }
  Matrix R = Matrix::Identity(n, n);

  TrajectoryRecord record(static_cast<std::size_t>(n), m, true, directed);
  std::vector<Point> zs(static_cast<std::size_t>(n)), vs(static_cast<std::size_t>(n));
  std::vector<double> fs(static_cast<std::size_t>(n)), errs(static_cast<std::size_t>(n));
  auto sample = [&](double t) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      zs[k] = Zt.col(i) + mdl.source;
      vs[k] = V.col(i);
      fs[k] = eval_field((*cfg.fields)[k], zs[k]);
      errs[k] = Zt.col(i).norm();
    }
    record.append(t, zs, vs, fs, errs, directed ? &R : nullptr);
  };

  sample(cfg.t0);
  const auto steps = static_cast<long long>(std::llround((cfg.t_end - cfg.t0) / cfg.dt));
  const auto stride = static_cast<long long>(cfg.sample_stride);
  const double h = cfg.dt;
  Matrix k1z, k1v, k1r, k2z, k2v, k2r, k3z, k3v, k3r, k4z, k4v, k4r;
  for (long long s = 1; s <= steps; ++s) {
    rhs(mdl, Zt, V, R, k1z, k1v, k1r, directed);
    const Matrix R2 = directed ? Matrix(R + 0.5 * h * k1r) : R;
    rhs(mdl, Zt + 0.5 * h * k1z, V + 0.5 * h * k1v, R2, k2z, k2v, k2r, directed);
    const Matrix R3 = directed ? Matrix(R + 0.5 * h * k2r) : R;
    rhs(mdl, Zt + 0.5 * h * k2z, V + 0.5 * h * k2v, R3, k3z, k3v, k3r, directed);
    const Matrix R4 = directed ? Matrix(R + h * k3r) : R;
    rhs(mdl, Zt + h * k3z, V + h * k3v, R4, k4z, k4v, k4r, directed);
    Zt += (h / 6.0) * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
    V += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (directed) R += (h / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
    const double t = cfg.t0 + static_cast<double>(s) * h;
    if (!Zt.allFinite() || !V.allFinite() || (directed && !R.allFinite())) {
      DivergenceError err(0, t);
      err.attach(std::move(record));
      throw err;
    }
    if (directed)
      for (Eigen::Index i = 0; i < n; ++i)
        if (!(R(i, i) > kRFloor)) throw GainBlowup("averaged system: r_ii fell to the floor");
    if (s % stride == 0) sample(t);
  }
  return record;
}

}  // namespace dses

#include "dses/analysis.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

namespace dses {
namespace {

double min_eig(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eig(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(S.rows() - 1);
}

const QuadraticField& quadratic_at(const FieldSet& fields, std::size_t i) {
  const auto* q = std::get_if<QuadraticField>(&fields[i]);
  if (!q) throw UnsupportedMode("rate analysis: not applicable to non-quadratic fields (Assumption 2 scope)");
  return *q;
}

}  // namespace

double kappa(double gamma, double g) { return 0.5 * gamma * (1.0 - std::exp(-g * g)); }

Matrix block_curvature(const FieldSet& fields) {
  const int m = fields.dimension();
  const auto n = static_cast<Eigen::Index>(fields.size());
  Matrix Hd = Matrix::Zero(n * m, n * m);
  for (Eigen::Index i = 0; i < n; ++i)
    Hd.block(i * m, i * m, m, m) = quadratic_at(fields, static_cast<std::size_t>(i)).H();
  return Hd;
}

RateReport assemble_M(const InteractionGraph& graph, const FieldSet& fields, double alpha,
                      double beta, double gamma, double g) {
  if (graph.directed()) throw InvalidInput("assemble_M: needs an undirected graph");
  if (graph.size() != fields.size()) throw InvalidInput("assemble_M: graph and field set sizes differ");
  if (!(alpha >= 0.0) || !(beta > 0.0) || !(gamma >= 0.0) || !(g >= 0.0))
    throw InvalidInput("assemble_M: gains must be non-negative");
  const int m = fields.dimension();
  RateReport rep;
  rep.kappa = kappa(gamma, g);
  const Matrix L = laplacian(graph);
  rep.M = alpha * Eigen::kroneckerProduct(L, Matrix::Identity(m, m)).eval() +
          rep.kappa * beta * block_curvature(fields);
  rep.lambda1 = min_eig(rep.M);

  const double tol = 1e-9 * std::max(1.0, rep.M.cwiseAbs().maxCoeff());
  if (rep.lambda1 <= tol) {
    if (!is_strongly_connected(graph))
      rep.violation = "Assumption 1: graph is not connected, so M is singular";
    else
      rep.violation = "Assumption 2: curvature sum is not positive definite, so M is singular";
  }
  if (is_strongly_connected(graph)) {
    const auto s = spectral_summary(graph);
    rep.lambda_L = s.lambda_L;
    rep.ell = s.ell;
  }
  return rep;
}

std::pair<Matrix, Matrix> weyl_matrices(double alpha, double varrho, double kappa_beta) {
  const double r = varrho;
  Matrix P(2, 2), Q(2, 2);
  P << r * r * r + 2.0 * r + (alpha + 1.0) / (alpha * r), 1.0 + r * r, 1.0 + r * r, r;
  P *= 0.5 * alpha;
  Q << 1.0 + r * r, 0.5 * r, 0.5 * r, 0.0;
  Q *= kappa_beta;
  return {P, Q};
}

double weyl_margin(double alpha, double varrho, double kappa_beta, double lambda_L,
                   double lambda_H) {
  const auto [P, Q] = weyl_matrices(alpha, varrho, kappa_beta);
  return min_eig(P) * lambda_L - max_eig(-Q) * lambda_H;
}

std::optional<double> locate_rho0(double alpha, double kappa_beta, double lambda_L,
                                  double lambda_H, double varrho_max) {
  auto margin = [&](double r) { return weyl_margin(alpha, r, kappa_beta, lambda_L, lambda_H); };
  constexpr int kScan = 1200;
  constexpr double kDecades = 12.0;
  double prev = varrho_max * std::pow(10.0, -kDecades);
  if (!(margin(prev) > 0.0)) return std::nullopt;
  for (int k = 1; k <= kScan; ++k) {
    const double cur = varrho_max * std::pow(10.0, -kDecades + kDecades * k / kScan);
    if (margin(cur) > 0.0) {
      prev = cur;
      continue;
    }
    double lo = prev, hi = cur;
    while ((hi - lo) > 1e-4 * hi) {
      const double mid = 0.5 * (lo + hi);
      (margin(mid) > 0.0 ? lo : hi) = mid;
    }
    return lo;
  }
  return std::nullopt;
}

RateReport directed_rate_report(const InteractionGraph& graph, const FieldSet& fields,
                                double alpha, double beta, double gamma, double g,
                                double varrho) {
  if (graph.size() != fields.size()) throw InvalidInput("directed_rate_report: graph and field set sizes differ");
  if (!(alpha > 0.0) || !(beta > 0.0) || !(gamma > 0.0) || !(g > 0.0) || !(varrho > 0.0))
    throw InvalidInput("directed_rate_report: gains and varrho must be positive");
  const auto s = spectral_summary(graph);
  RateReport rep;
  rep.directed = true;
  rep.kappa = kappa(gamma, g);
  rep.lambda1 = std::numeric_limits<double>::quiet_NaN();
  rep.varrho = varrho;
  const double kb = rep.kappa * beta;
  std::tie(rep.P, rep.Q) = weyl_matrices(alpha, varrho, kb);
  rep.lambda_P = min_eig(rep.P);
  rep.lambda_Q = max_eig(-rep.Q);
  for (std::size_t i = 0; i < fields.size(); ++i)
    rep.lambda_H = std::max(rep.lambda_H, max_eig(quadratic_at(fields, i).H()));
  rep.lambda_L = s.lambda_L;
  rep.ell = s.ell;
  rep.weyl_margin = rep.lambda_P * rep.lambda_L - rep.lambda_Q * rep.lambda_H;
  rep.rho0 = locate_rho0(alpha, kb, rep.lambda_L, rep.lambda_H);
  rep.certified = rep.weyl_margin > 0.0;
  rep.lambda2_proxy = rep.ell;
  if (!rep.certified) {
    std::ostringstream os;
    os << "rate not certified: weyl_margin = " << rep.weyl_margin << " <= 0 at varrho = " << varrho;
    if (rep.rho0) os << " (margin is positive below varrho0 = " << *rep.rho0 << ")";
    rep.warnings.push_back(os.str());
  }
  rep.warnings.push_back("certified-rate unavailable: lambda2_proxy is ell only");
  return rep;
}

RateReport rate_report(const SimConfig& cfg) {
  validate(cfg);
  if (!cfg.fields->all_quadratic())
    throw UnsupportedMode("rate analysis: not applicable (Assumption 2 scope)");
  if (is_directed(cfg.mode))
    return directed_rate_report(*cfg.graph, *cfg.fields, cfg.gains.alpha, cfg.gains.beta,
                                cfg.gains.gamma, cfg.excitation.g, *cfg.gains.varrho);
  return assemble_M(*cfg.graph, *cfg.fields, cfg.gains.alpha, cfg.gains.beta, cfg.gains.gamma,
                    cfg.excitation.g);
}

EnvelopeCheck envelope_check(const TrajectoryRecord& record, double rate, double delta,
                             std::optional<double> rho) {
  if (!record.has_source()) throw InvalidInput("envelope_check: trajectory has no err_tilde column");
  EnvelopeCheck out;
  const std::size_t S = record.samples();
  if (S == 0) return out;
  out.rho_hat = rho.value_or(record.max_err_tilde(0));
  const Envelope env{out.rho_hat, rate, delta};
  const double t0 = record.times().front();
  out.violated.resize(S);
  std::size_t bad = 0;
  for (std::size_t s = 0; s < S; ++s) {
    out.violated[s] = record.max_err_tilde(s) > env.value(out.rho_hat, record.times()[s], t0);
    bad += out.violated[s] ? 1 : 0;
  }
  out.violation_fraction = static_cast<double>(bad) / static_cast<double>(S);
  return out;
}

}  // namespace dses

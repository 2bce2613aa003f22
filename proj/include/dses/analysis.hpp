#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dses/fields.hpp"
#include "dses/graph.hpp"
#include "dses/sim.hpp"

namespace dses {

/// kappa = (gamma / 2)(1 - exp(-g^2)), the averaged ES gain factor.
double kappa(double gamma, double g);

/// Convergence-rate quantities of the averaged system.
///
/// Undirected: M = alpha (L (x) I_m) + kappa beta blockdiag(H_1..H_n) and
/// lambda1 = lambda_min(M). Directed: the Weyl-inequality certificate
/// lambda_P lambda_L - lambda_Q lambda_H built from the 2x2 matrices P, Q of
/// the Lyapunov analysis, together with the r-estimate rate ell. No decay
/// constant is certified for the directed case beyond the sign of the margin;
/// lambda2_proxy is ell and `certified` says whether the margin is positive.
struct RateReport {
  bool directed = false;
  double kappa = 0.0;
  Matrix M;
  double lambda1 = 0.0;
  /// Set when lambda1 <= tolerance; names the failed assumption.
  std::optional<std::string> violation;

  Matrix P, Q;
  double lambda_P = 0.0;
  double lambda_Q = 0.0;
  double lambda_H = 0.0;
  double lambda_L = 0.0;
  double ell = 0.0;
  double varrho = 0.0;
  double weyl_margin = 0.0;
  std::optional<double> rho0;
  double lambda2_proxy = 0.0;
  bool certified = false;
  std::vector<std::string> warnings;
};

/// blockdiag(H_1, ..., H_n). Quadratic field sets only.
Matrix block_curvature(const FieldSet& fields);

/// Builds M and lambda1. alpha may be zero here (degenerate checks only).
/// Never throws for lambda1 <= tol; the report's `violation` is set instead.
RateReport assemble_M(const InteractionGraph& graph, const FieldSet& fields, double alpha,
                      double beta, double gamma, double g);

/// The Lyapunov-derivative matrices
///   P = alpha/2 [[rho^3 + 2 rho + (alpha+1)/(alpha rho), 1 + rho^2], [1 + rho^2, rho]]
///   Q = kappa beta [[1 + rho^2, rho/2], [rho/2, 0]].
std::pair<Matrix, Matrix> weyl_matrices(double alpha, double varrho, double kappa_beta);

/// lambda_P lambda_L - lambda_Q lambda_H at the given varrho.
double weyl_margin(double alpha, double varrho, double kappa_beta, double lambda_L,
                   double lambda_H);

/// Smallest varrho at which the margin changes sign from positive, located by
/// a logarithmic scan of (0, varrho_max] and bisection to 1e-4 relative
/// accuracy. nullopt when the scan finds no sign change.
std::optional<double> locate_rho0(double alpha, double kappa_beta, double lambda_L,
                                  double lambda_H, double varrho_max = 1e3);

RateReport directed_rate_report(const InteractionGraph& graph, const FieldSet& fields,
                                double alpha, double beta, double gamma, double g,
                                double varrho);

/// Report for a validated simulation config: undirected or directed
/// according to the mode. Throws UnsupportedMode for non-quadratic fields.
RateReport rate_report(const SimConfig& cfg);

struct EnvelopeCheck {
  double rho_hat = 0.0;
  /// Per sample: some vehicle exceeds rho_hat e^{-rate (t - t0)} + delta.
  std::vector<bool> violated;
  double violation_fraction = 0.0;
};

/// rho_hat defaults to max_i ||z~_i(t0)||. Requires the err_tilde column.
EnvelopeCheck envelope_check(const TrajectoryRecord& record, double rate, double delta,
                             std::optional<double> rho = std::nullopt);

}  // namespace dses

#include "dses/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

namespace dses {
namespace {

std::vector<bool> reachable_from(const Matrix& adj, std::size_t root, bool transpose) {
  const auto n = static_cast<std::size_t>(adj.rows());
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> stack{root};
  seen[root] = true;
  while (!stack.empty()) {
    const auto u = stack.back();
    stack.pop_back();
    for (std::size_t v = 0; v < n; ++v) {
      const double w = transpose ? adj(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u))
                                 : adj(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v));
      if (w > 0.0 && !seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

InteractionGraph::InteractionGraph(Matrix adjacency, bool directed)
    : adjacency_(std::move(adjacency)), directed_(directed) {
  const auto n = adjacency_.rows();
  if (n == 0 || adjacency_.cols() != n) throw InvalidInput("graph: adjacency must be square and non-empty");
  if (!adjacency_.allFinite()) throw InvalidInput("graph: non-finite weight");
  if ((adjacency_.array() < 0.0).any()) throw InvalidInput("graph: negative weight");
  if (adjacency_.diagonal().cwiseAbs().maxCoeff() != 0.0)
    throw InvalidInput("graph: self-loops (nonzero diagonal) are not allowed");
  if (!directed_ && (adjacency_ - adjacency_.transpose()).cwiseAbs().maxCoeff() != 0.0)
    throw InvalidInput("graph: undirected graph requires a symmetric adjacency matrix");
  neighbors_.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (adjacency_(i, j) > 0.0) neighbors_[static_cast<std::size_t>(i)].push_back(static_cast<std::size_t>(j));
}

InteractionGraph InteractionGraph::from_edges(
    std::size_t n, const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges,
    bool directed) {
  Matrix adj = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& [from, to, w] : edges) {
    if (from >= n || to >= n) throw InvalidInput("graph: edge endpoint out of range");
    const auto i = static_cast<Eigen::Index>(from);
    const auto j = static_cast<Eigen::Index>(to);
    adj(i, j) = w;
    if (!directed) adj(j, i) = w;
  }
  return InteractionGraph(std::move(adj), directed);
}

Matrix laplacian(const InteractionGraph& graph) {
  const Matrix& a = graph.adjacency();
  Matrix L = -a;
  L.diagonal() = a.rowwise().sum();
  return L;
}

bool is_strongly_connected(const InteractionGraph& graph) {
  const Matrix& adj = graph.adjacency();
  auto all = [](const std::vector<bool>& v) { return std::all_of(v.begin(), v.end(), [](bool b) { return b; }); };
  return all(reachable_from(adj, 0, false)) && all(reachable_from(adj, 0, true));
}

SpectralSummary spectral_summary(const InteractionGraph& graph) {
  if (!is_strongly_connected(graph))
    throw AssumptionViolation("Assumption 1: strongly connected graph",
                              "interaction graph is not strongly connected");
  SpectralSummary s;
  s.L = laplacian(graph);
  const auto n = s.L.rows();

  Eigen::EigenSolver<Matrix> es(s.L);
  const auto& ev = es.eigenvalues();
  Eigen::Index zero_idx = 0;
  for (Eigen::Index k = 1; k < n; ++k)
    if (std::abs(ev[k]) < std::abs(ev[zero_idx])) zero_idx = k;
  s.ell = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < n; ++k) {
    s.eigenvalues.push_back(ev[k]);
    if (k != zero_idx) s.ell = std::min(s.ell, ev[k].real());
  }
  if (n == 1) s.ell = 0.0;

  // Left null vector: eigenvector of L' for the eigenvalue of least modulus.
  Eigen::EigenSolver<Matrix> left(s.L.transpose());
  const auto& lev = left.eigenvalues();
  Eigen::Index li = 0;
  for (Eigen::Index k = 1; k < n; ++k)
    if (std::abs(lev[k]) < std::abs(lev[li])) li = k;
  Vector xi = left.eigenvectors().col(li).real();
  if (xi.sum() < 0.0) xi = -xi;
  xi *= static_cast<double>(n) / xi.sum();
  if ((xi.array() <= 0.0).any())
    throw Error("spectral_summary: left null vector is not positive");
  const double residual = (xi.transpose() * s.L).cwiseAbs().maxCoeff();
  if (residual > 1e-10 * std::max(1.0, s.L.cwiseAbs().maxCoeff()) * static_cast<double>(n)) {
    std::ostringstream os;
    os << "spectral_summary: left null vector residual " << residual;
    throw Error(os.str());
  }
  s.xi = xi;

  if (n == 1) {
    s.lambda_L = 0.0;
    return s;
  }
  Matrix sym = graph.directed() ? Matrix(xi.asDiagonal() * s.L + s.L.transpose() * xi.asDiagonal())
                                : s.L;
  Vector lam = Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (sym + sym.transpose()),
                                                     Eigen::EigenvaluesOnly)
                   .eigenvalues();
  // Ascending order; index 0 is the simple zero eigenvalue.
  s.lambda_L = lam[1];
  return s;
}

}  // namespace dses

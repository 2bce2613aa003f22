#pragma once

#include <complex>
#include <tuple>
#include <vector>

#include "dses/types.hpp"

namespace dses {

/// Weighted interaction graph. adjacency(i, j) > 0 means vehicle i measures
/// its position relative to vehicle j, i.e. j is a neighbor of i.
class InteractionGraph {
 public:
  /// Throws InvalidInput on negative or non-finite weights, a nonzero
  /// diagonal, or an asymmetric matrix when `directed` is false.
  InteractionGraph(Matrix adjacency, bool directed);

  /// Edge (from, to, weight) means a(from, to) = weight. For undirected
  /// graphs the reverse edge is added.
  static InteractionGraph from_edges(std::size_t n,
                                     const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges,
                                     bool directed);

  std::size_t size() const noexcept { return static_cast<std::size_t>(adjacency_.rows()); }
  bool directed() const noexcept { return directed_; }
  const Matrix& adjacency() const noexcept { return adjacency_; }
  double weight(std::size_t i, std::size_t j) const {
    return adjacency_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  /// Neighbors of i in increasing index order.
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_[i]; }

 private:
  Matrix adjacency_;
  bool directed_;
  std::vector<std::vector<std::size_t>> neighbors_;
};

/// l_ii = sum_j a_ij, l_ij = -a_ij.
Matrix laplacian(const InteractionGraph& graph);

/// True iff every ordered pair of nodes is joined by a directed path.
bool is_strongly_connected(const InteractionGraph& graph);

struct SpectralSummary {
  Matrix L;
  /// Positive left null vector of L, normalized so its entries sum to n.
  Vector xi;
  /// Smallest nonzero eigenvalue of L (undirected) or of Xi L + L' Xi (directed).
  double lambda_L = 0.0;
  /// Smallest real part among the nonzero eigenvalues of L.
  double ell = 0.0;
  std::vector<std::complex<double>> eigenvalues;
};

/// Throws AssumptionViolation when the graph is not strongly connected.
SpectralSummary spectral_summary(const InteractionGraph& graph);

}  // namespace dses

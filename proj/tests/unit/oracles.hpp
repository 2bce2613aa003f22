#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's solvers: linear algebra is hand-rolled on std::vector.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "dses/types.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat from_eigen(const dses::Matrix& A) {
  Mat out(static_cast<std::size_t>(A.rows()), std::vector<double>(static_cast<std::size_t>(A.cols())));
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = A(i, j);
  return out;
}

inline std::vector<double> matvec(const Mat& A, const std::vector<double>& x) {
  std::vector<double> y(A.size(), 0.0);
  for (std::size_t i = 0; i < A.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) y[i] += A[i][j] * x[j];
  return y;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void normalize(std::vector<double>& x) {
  const double n = std::sqrt(dot(x, x));
  for (auto& v : x) v /= n;
}

// Gaussian elimination with partial pivoting. Returns false if singular.
inline bool solve(Mat A, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = A.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(A[i][k]) > std::abs(A[p][k])) p = i;
    if (std::abs(A[p][k]) < 1e-300) return false;
    std::swap(A[k], A[p]);
    std::swap(b[k], b[p]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = A[i][k] / A[k][k];
      for (std::size_t j = k; j < n; ++j) A[i][j] -= f * A[k][j];
      b[i] -= f * b[k];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= A[i][j] * x[j];
    x[i] = s / A[i][i];
  }
  return true;
}

// Dominant eigenpair of a symmetric matrix by power iteration, orthogonal
// to the vectors in `deflate`.
inline std::pair<double, std::vector<double>> power_iteration(const Mat& A, const std::vector<std::vector<double>>& deflate,
                                                              int iters = 20000, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N;
  std::vector<double> x(A.size());
  for (auto& v : x) v = N(rng);
  auto project = [&](std::vector<double>& y) {
    for (const auto& d : deflate) {
      const double c = dot(y, d);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] -= c * d[i];
    }
  };
  project(x);
  normalize(x);
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    auto y = matvec(A, x);
    project(y);
    const double next = dot(x, y);
    normalize(y);
    x = y;
    if (k > 50 && std::abs(next - lambda) <= 1e-15 * std::max(1.0, std::abs(next))) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return {lambda, x};
}

// All eigenvalues of a small symmetric matrix, largest first, by power
// iteration on A + shift I with deflation (shift makes it PSD so the
// dominant eigenvalue is the largest).
inline std::vector<double> eigenvalues_by_deflation(const Mat& A) {
  double shift = 0.0;
  for (const auto& row : A) {
    double s = 0.0;
    for (double v : row) s += std::abs(v);
    shift = std::max(shift, s);
  }
  Mat B = A;
  for (std::size_t i = 0; i < B.size(); ++i) B[i][i] += shift;
  std::vector<std::vector<double>> found;
  std::vector<double> out;
  for (std::size_t k = 0; k < A.size(); ++k) {
    auto [lam, v] = power_iteration(B, found, 200000, 11 + k);
    found.push_back(v);
    out.push_back(lam - shift);
  }
  return out;
}

// Smallest eigenvalue of a symmetric positive definite matrix: power
// iteration on A^{-1} (applied through the hand-rolled solver), finished
// with a Rayleigh quotient on A.
inline double smallest_eigenvalue_spd(const Mat& A, int iters = 5000) {
  std::vector<double> x(A.size(), 1.0);
  x[0] += 0.5;
  normalize(x);
  for (int k = 0; k < iters; ++k) {
    std::vector<double> y;
    if (!solve(A, x, y)) return 0.0;
    normalize(y);
    double diff = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) diff = std::max(diff, std::abs(std::abs(y[i]) - std::abs(x[i])));
    x = y;
    if (diff < 1e-15) break;
  }
  return dot(x, matvec(A, x));
}

// Argmax of F over a square grid [lo, hi]^2 with spacing `step`.
inline std::pair<double, double> grid_argmax_2d(const std::function<double(double, double)>& F, double lo, double hi,
                                                double step) {
  double best = -INFINITY;
  std::pair<double, double> arg{lo, lo};
  const auto count = static_cast<long>(std::llround((hi - lo) / step));
  for (long i = 0; i <= count; ++i)
    for (long j = 0; j <= count; ++j) {
      const double x = lo + static_cast<double>(i) * step;
      const double y = lo + static_cast<double>(j) * step;
      const double v = F(x, y);
      if (v > best) {
        best = v;
        arg = {x, y};
      }
    }
  return arg;
}

inline double central_difference(const std::function<double(double)>& f, double x, double h = 1e-5) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Golden-section minimization of a unimodal function on [a, b].
inline double golden_min(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  while (b - a > tol) {
    if (f(c) < f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - r * (b - a);
    d = a + r * (b - a);
  }
  return f((a + b) / 2.0);
}

}  // namespace oracle

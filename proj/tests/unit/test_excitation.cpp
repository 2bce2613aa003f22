#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "dses/excitation.hpp"

using namespace dses;

namespace {

Point p1(double x) { return Point::Constant(1, x); }

// Path samples of a scalar OU process.
std::vector<double> ou_path(double g, double eps, double dt, long long steps, std::uint64_t seed, std::uint64_t stream = 0) {
  OUProcess p(p1(0.0), {eps, g}, RngStream(seed, stream));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (long long k = 0; k < steps; ++k) out.push_back(p.step(dt)[0]);
  return out;
}

double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

}  // namespace

TEST_CASE("noise-free step is pure decay") {
  Point eta0(2);
  eta0 << 1.0, 0.0;
  OUProcess p(eta0, {0.05, 0.0}, RngStream(1, 0));
  const Point& eta = p.step(0.001);
  CHECK(eta[0] == doctest::Approx(0.98).epsilon(1e-15));
  CHECK(eta[1] == 0.0);
}

TEST_CASE("step size guard") {
  OUProcess p(p1(0.0), {0.05, 0.6}, RngStream(1, 0));
  CHECK_NOTHROW(p.step(0.005));
  CHECK_THROWS_AS(p.step(0.0051), StabilityGuard);
  CHECK_THROWS_AS(OUProcess(p1(0.0), {0.0, 0.6}, RngStream(1, 0)), InvalidInput);
}

TEST_CASE("long-run mean is zero within three standard errors") {
  const double g = 0.6, eps = 0.05, dt = 1e-3;
  auto path = ou_path(g, eps, dt, 1'000'000, 4);
  path.erase(path.begin(), path.begin() + 10'000);  // t in [10, 1000]
  // Time average of an OU path: variance ~ 2 (g^2/2) eps / T.
  const double T = static_cast<double>(path.size()) * dt;
  const double se = std::sqrt(2.0 * 0.5 * g * g * eps / T);
  CHECK(std::abs(mean(path)) <= 3.0 * se);
}

TEST_CASE("stationary variance g^2/2 within 5 percent") {
  const auto path = ou_path(0.6, 0.05, 1e-3, 1'000'000, 6);
  CHECK(variance(path) == doctest::Approx(0.18).epsilon(0.05));

  // Exact-in-distribution stepper as a cross-check on the same statistic.
  OUProcess p(p1(0.0), {0.05, 0.6}, RngStream(6, 1));
  std::vector<double> exact;
  for (int k = 0; k < 200'000; ++k) exact.push_back(p.step_exact(0.01)[0]);
  CHECK(variance(exact) == doctest::Approx(0.18).epsilon(0.05));
}

TEST_CASE("seed determinism and stream independence") {
  const auto a = ou_path(0.6, 0.05, 1e-3, 5000, 42);
  const auto b = ou_path(0.6, 0.05, 1e-3, 5000, 42);
  CHECK(a == b);
  const auto c = ou_path(0.6, 0.05, 1e-3, 5000, 42, 1);
  CHECK(a != c);
  CHECK(derive_seed(1, 0) != derive_seed(0, 1));
}

TEST_CASE("Ito increment at rest without noise is the raw increment") {
  const Point d = p1(0.0123);
  CHECK(ito_sin_increment(p1(0.0), d, {0.05, 0.0}, 1e-3)[0] == 0.0123);
}

TEST_CASE("Ito correction at eta = pi/2") {
  Point eta(2), d(2);
  eta << M_PI / 2, M_PI / 2;
  d << 0.0, 0.0;
  const Point inc = ito_sin_increment(eta, d, {0.05, 0.6}, 1e-3);
  CHECK(inc[0] == doctest::Approx(-0.0036).epsilon(1e-12));
  CHECK(inc[1] == doctest::Approx(-0.0036).epsilon(1e-12));
}

TEST_CASE("summed Ito increments track sin(eta_T) - sin(eta_0), shrinking with dt") {
  // Same Brownian path at two resolutions; 200 paths over t in [0, 1].
  const double g = 0.6, eps = 0.05, T = 1.0;
  const OUParams par{eps, g};
  auto path_error = [&](const std::vector<double>& dw, double dt) {
    double eta = 0.3, sum = 0.0;
    const double eta0 = eta;
    for (double w : dw) {
      const double d = -eta / eps * dt + g / std::sqrt(eps) * w;
      sum += ito_sin_increment(p1(eta), p1(d), par, dt)[0];
      eta += d;
    }
    return sum - (std::sin(eta) - std::sin(eta0));
  };
  std::mt19937_64 rng(10);
  std::normal_distribution<double> N;
  double rms_coarse = 0.0, rms_fine = 0.0;
  const int paths = 200;
  const double dt = 2e-3;
  const auto steps = static_cast<std::size_t>(T / dt);
  for (int p = 0; p < paths; ++p) {
    std::vector<double> fine(2 * steps), coarse(steps);
    for (auto& w : fine) w = N(rng) * std::sqrt(dt / 2);
    for (std::size_t k = 0; k < steps; ++k) coarse[k] = fine[2 * k] + fine[2 * k + 1];
    rms_coarse += std::pow(path_error(coarse, dt), 2);
    rms_fine += std::pow(path_error(fine, dt / 2), 2);
  }
  rms_coarse = std::sqrt(rms_coarse / paths);
  rms_fine = std::sqrt(rms_fine / paths);
  MESSAGE("rms error dt=" << dt << ": " << rms_coarse << ", dt/2: " << rms_fine);
  CHECK(rms_fine < rms_coarse);
  // Strong order 1/2 gives 0.71, order 1 gives 0.5.
  CHECK(rms_fine / rms_coarse >= 0.4);
  CHECK(rms_fine / rms_coarse <= 0.85);
}

TEST_CASE("ergodic moments of sin(eta) at g = 0.6") {
  const double g = 0.6;
  for (int k : {1, 2, 3}) {
    OUProcess p(p1(0.0), {0.05, g}, RngStream(3, static_cast<std::uint64_t>(k)));
    const double m = ergodic_moment(p, k, 2000.0, 1e-3);
    CHECK(std::abs(m - stationary_sin_moment(k, g)) <= 0.01);
    if (k == 2) CHECK(std::abs(m - 0.15106) <= 0.01);
  }
  CHECK(stationary_sin_moment(2, g) == doctest::Approx(0.5 * (1.0 - std::exp(-0.36))));
}

TEST_CASE("independent vehicle streams: cross-correlation and product moment") {
  const double dt = 1e-3;
  const long long steps = 2'000'000;
  OUProcess a(p1(0.0), {0.05, 0.6}, RngStream(5, 0));
  OUProcess b(p1(0.0), {0.05, 0.6}, RngStream(5, 1));
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (long long k = 0; k < steps; ++k) {
    const double x = std::sin(a.step(dt)[0]);
    const double y = std::sin(b.step(dt)[0]);
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
    sab += x * y;
  }
  const double n = static_cast<double>(steps);
  const double cov = sab / n - (sa / n) * (sb / n);
  const double corr = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  CHECK(std::abs(corr) <= 0.02);
  CHECK(std::abs(sab / n) <= 0.01);
}

TEST_CASE("empirical law of eta is close to N(0, g^2/2)") {
  auto path = ou_path(0.6, 0.05, 1e-3, 2'000'000, 12);
  std::sort(path.begin(), path.end());
  const double sd = 0.6 / std::sqrt(2.0);
  double ks = 0.0;
  const double n = static_cast<double>(path.size());
  for (std::size_t i = 0; i < path.size(); i += 97) {
    const double cdf = 0.5 * std::erfc(-path[i] / (sd * std::sqrt(2.0)));
    ks = std::max(ks, std::max(std::abs(cdf - static_cast<double>(i) / n), std::abs(cdf - static_cast<double>(i + 1) / n)));
  }
  CHECK(ks <= 0.02);
}

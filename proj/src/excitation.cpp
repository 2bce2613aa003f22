#include "dses/excitation.hpp"

#include <cmath>
#include <sstream>

namespace dses {

std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id) {
  const std::uint64_t s = derive_seed(master_seed, stream_id);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32)};
  engine_.seed(seq);
}

OUProcess::OUProcess(Point eta0, OUParams params, RngStream rng)
    : eta_(std::move(eta0)), params_(params), rng_(std::move(rng)) {
  if (!(params_.epsilon > 0.0) || !std::isfinite(params_.epsilon))
    throw InvalidInput("OU process: epsilon must be positive");
  if (!(params_.g >= 0.0) || !std::isfinite(params_.g))
    throw InvalidInput("OU process: g must be non-negative");
  if (eta_.size() < 1) throw InvalidInput("OU process: empty state");
}

const Point& OUProcess::step(double dt) {
  if (!(dt > 0.0)) throw InvalidInput("OU step: dt must be positive");
  // Small relative slack so dt = eps/10 computed in floating point passes.
  if (dt > max_ou_step(params_.epsilon) * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "OU step: dt = " << dt << " exceeds epsilon/10 = " << max_ou_step(params_.epsilon);
    throw StabilityGuard(os.str());
  }
  const double decay = dt / params_.epsilon;
  const double diffusion = params_.g / std::sqrt(params_.epsilon) * std::sqrt(dt);
  for (Eigen::Index k = 0; k < eta_.size(); ++k)
    eta_[k] += -eta_[k] * decay + diffusion * rng_.normal();
  return eta_;
}

const Point& OUProcess::step_exact(double dt) {
  if (!(dt > 0.0)) throw InvalidInput("OU step: dt must be positive");
  const double a = std::exp(-dt / params_.epsilon);
  // Stationary variance g^2/2 times (1 - a^2).
  const double sd = params_.g * std::sqrt(0.5 * (1.0 - a * a));
  for (Eigen::Index k = 0; k < eta_.size(); ++k) eta_[k] = a * eta_[k] + sd * rng_.normal();
  return eta_;
}

Point ito_sin_increment(const Point& eta, const Point& d_eta, const OUParams& params, double dt) {
  if (eta.size() != d_eta.size()) throw InvalidInput("ito_sin_increment: dimension mismatch");
  const double quad_var = params.g * params.g / params.epsilon * dt;
  Point out(eta.size());
  for (Eigen::Index k = 0; k < eta.size(); ++k)
    out[k] = std::cos(eta[k]) * d_eta[k] - 0.5 * std::sin(eta[k]) * quad_var;
  return out;
}

double ergodic_moment(OUProcess& process, int k, double horizon, double dt) {
  if (k < 1 || k > 3) throw InvalidInput("ergodic_moment: k must be 1, 2 or 3");
  if (!(horizon > 0.0)) throw InvalidInput("ergodic_moment: horizon must be positive");
  const auto steps = static_cast<long long>(std::llround(horizon / dt));
  if (steps < 1) throw InvalidInput("ergodic_moment: horizon shorter than one step");
  auto sample = [k](const Point& eta) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < eta.size(); ++c) s += std::pow(std::sin(eta[c]), k);
    return s / static_cast<double>(eta.size());
  };
  double prev = sample(process.eta());
  double integral = 0.0;
  for (long long n = 0; n < steps; ++n) {
    const double cur = sample(process.step(dt));
    integral += 0.5 * (prev + cur) * dt;
    prev = cur;
  }
  return integral / (static_cast<double>(steps) * dt);
}

double stationary_sin_moment(int k, double g) {
  switch (k) {
    case 1:
    case 3:
      return 0.0;
    case 2:
      return 0.5 * (1.0 - std::exp(-g * g));
    default:
      throw InvalidInput("stationary_sin_moment: k must be 1, 2 or 3");
  }
}

}  // namespace dses

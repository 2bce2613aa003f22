#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "dses/sim.hpp"

namespace dses {
namespace {

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  const double w = pos - static_cast<double>(lo);
  if (w == 0.0 || xs[lo] == xs[hi]) return xs[lo];  // equal ends also covers inf
  return xs[lo] + w * (xs[hi] - xs[lo]);
}

}  // namespace

double Envelope::value(double rho_used, double t, double t0) const {
  if (std::isinf(delta)) return delta;
  return rho_used * std::exp(-rate * (t - t0)) + delta;
}

TrialSummary summarize_trial(const TrajectoryRecord& record, const Vector& source,
                             const MonteCarloOptions& options) {
  TrialSummary out;
  const std::size_t S = record.samples();
  const std::size_t n = record.vehicles();
  if (S == 0) return out;
  const auto& t = record.times();
  out.terminal_error = record.max_err_tilde(S - 1);

  const double t_start = t.front();
  const double t_stop = t.back();
  const double window_start = t_stop - options.window_fraction * (t_stop - t_start);
  const Vector ref = options.reference.value_or(source);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Vector mean = Vector::Zero(record.dimension());
    std::size_t count = 0;
    for (std::size_t s = 0; s < S; ++s)
      if (t[s] >= window_start) {
        mean += record.z(s, i);
        ++count;
      }
    mean /= static_cast<double>(count);
    worst = std::max(worst, (mean - ref).norm());
  }
  out.window_distance = worst;

  std::size_t last_out = S;
  for (std::size_t s = 0; s < S; ++s)
    if (record.max_err_tilde(s) > options.tolerance) last_out = s;
  if (last_out == S)
    out.time_to_tolerance = t.front();
  else if (last_out + 1 < S)
    out.time_to_tolerance = t[last_out + 1];

  const double rho = options.envelope.rho.value_or(record.max_err_tilde(0));
  out.within_envelope.resize(S);
  for (std::size_t s = 0; s < S; ++s)
    out.within_envelope[s] = record.max_err_tilde(s) <= options.envelope.value(rho, t[s], t.front());
  return out;
}

std::size_t MonteCarloStats::count_window_within(double radius) const {
  return static_cast<std::size_t>(std::count_if(trials.begin(), trials.end(), [&](const TrialSummary& s) {
    return s.error.empty() && s.window_distance <= radius;
  }));
}

double MonteCarloStats::median_time_to_tolerance() const {
  std::vector<double> xs;
  for (const auto& s : trials) xs.push_back(s.error.empty() ? s.time_to_tolerance
                                                            : std::numeric_limits<double>::infinity());
  return quantile(std::move(xs), 0.5);
}

MonteCarloStats monte_carlo(const SimConfig& cfg, const MonteCarloOptions& options) {
  if (options.trials < 1) throw InvalidInput("monte_carlo: need at least one trial");
  validate(cfg);
  const auto source = resolve_source(cfg);
  if (!source) throw InvalidInput("monte_carlo: the source position is unknown");

  std::vector<TrialSummary> results(options.trials);
  std::vector<std::vector<double>> times(options.trials);
  std::optional<TrajectoryRecord> first;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next.fetch_add(1); k < options.trials; k = next.fetch_add(1)) {
      SimConfig trial = cfg;
      trial.master_seed = cfg.master_seed + k;
      try {
        const auto record = run(trial);
        results[k] = summarize_trial(record, *source, options);
        times[k] = record.times();
        if (k == 0 && options.keep_first) first = record;
      } catch (const DivergenceError& e) {
        results[k].error = e.what();
        results[k].terminal_error = std::numeric_limits<double>::infinity();
        results[k].window_distance = std::numeric_limits<double>::infinity();
      }
      results[k].seed = trial.master_seed;
    }
  };
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(options.trials));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  MonteCarloStats stats;
  for (const auto& ts : times)
    if (ts.size() > stats.times.size()) stats.times = ts;
  stats.fraction_within.assign(stats.times.size(), 0.0);
  std::vector<double> terminal;
  for (const auto& r : results) {
    terminal.push_back(r.terminal_error);
    for (std::size_t s = 0; s < r.within_envelope.size() && s < stats.times.size(); ++s)
      if (r.within_envelope[s]) stats.fraction_within[s] += 1.0;
  }
  for (auto& f : stats.fraction_within) f /= static_cast<double>(options.trials);
  stats.terminal_q10 = quantile(terminal, 0.1);
  stats.terminal_q50 = quantile(terminal, 0.5);
  stats.terminal_q90 = quantile(terminal, 0.9);
  stats.trials = std::move(results);
  stats.first_record = std::move(first);
  return stats;
}

}  // namespace dses

#include "dses/cli.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "dses/analysis.hpp"
#include "dses/io.hpp"

namespace dses::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json finite_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

void write_record(const TrajectoryRecord& record, const ScenarioConfig& cfg, const fs::path& dir) {
  if (cfg.output.trajectory_csv) {
    std::ostringstream os;
    write_trajectory_csv(os, record);
    write_text(dir / "trajectory.csv", os.str());
    if (record.has_r()) {
      std::ostringstream er;
      write_eigvec_csv(er, record);
      write_text(dir / "eigvec.csv", er.str());
    }
  }
  if (cfg.output.plot_data)
    for (std::size_t i = 0; i < record.vehicles(); ++i) {
      std::ostringstream os;
      write_vehicle_plot_csv(os, record, i);
      write_text(dir / ("plot_vehicle_" + std::to_string(i) + ".csv"), os.str());
    }
}

json terminal_json(const TrajectoryRecord& record, const std::optional<Vector>& source) {
  json out = json::array();
  if (record.samples() == 0) return out;
  const std::size_t s = record.samples() - 1;
  for (std::size_t i = 0; i < record.vehicles(); ++i) {
    json v = {{"vehicle", i}, {"z", vector_json(record.z(s, i))}, {"f", record.f(s, i)}};
    if (source) v["distance"] = (record.z(s, i) - *source).norm();
    if (record.has_source()) v["err_tilde"] = record.err_tilde(s, i);
    out.push_back(v);
  }
  return out;
}

// Decay rate used for envelopes: lambda1 when certified (undirected,
// quadratic), ell for directed runs (uncertified), none otherwise.
std::optional<double> envelope_rate(const SimConfig& sc) {
  if (!sc.fields->all_quadratic()) return std::nullopt;
  const auto rep = rate_report(sc);
  return rep.directed ? rep.ell : rep.lambda1;
}

}  // namespace

json rate_section(const ScenarioConfig& cfg) {
  const auto sc = build_sim_config(cfg);
  if (!sc.fields->all_quadratic())
    return {{"status", "not applicable (Assumption 2 scope)"}};
  return to_json(rate_report(sc));
}

ScenarioConfig resolve_scenario(const RunOptions& options) {
  if (options.config.has_value() == options.preset.has_value())
    throw ConfigError("give exactly one of --config or --preset");
  json doc = options.config ? parse_json_text(read_text(*options.config), options.config->string())
                            : preset_document(*options.preset);
  std::vector<std::string> sets = options.sets;
  if (options.seed) sets.push_back("sim.master_seed=" + std::to_string(*options.seed));
  if (options.trials) sets.push_back("sim.trials=" + std::to_string(*options.trials));
  return load_config_document(std::move(doc), sets);
}

ScenarioResult run_scenario(const ScenarioConfig& cfg, const fs::path& dir) {
  const SimConfig sc = build_sim_config(cfg);
  const auto source = resolve_source(sc);
  fs::create_directories(dir);

  json summary;
  summary["schema_version"] = kSummarySchemaVersion;
  summary["kind"] = "dses-run-summary";
  summary["name"] = cfg.name;
  summary["mode"] = cfg.sim.mode;
  summary["master_seed"] = cfg.sim.master_seed;
  summary["trials"] = cfg.sim.trials;
  summary["source"] = source ? vector_json(*source) : json(nullptr);
  summary["rate"] = rate_section(cfg);
  summary["config"] = to_json(cfg);

  const std::optional<AcceptanceSpec> acc = cfg.acceptance;
  std::optional<Vector> reference = source;
  if (acc && !acc->reference.empty())
    reference = Eigen::Map<const Vector>(acc->reference.data(), static_cast<Eigen::Index>(acc->reference.size()));
  summary["reference"] = reference ? vector_json(*reference) : json(nullptr);

  ScenarioResult result;
  std::optional<TrajectoryRecord> record;
  std::optional<MonteCarloStats> stats;
  const auto rate = envelope_rate(sc);

  if (source) {
    MonteCarloOptions mo;
    mo.trials = cfg.sim.trials;
    mo.threads = cfg.sim.threads;
    mo.keep_first = true;
    mo.reference = reference;
    if (acc) {
      mo.window_fraction = acc->window_fraction;
      mo.tolerance = acc->radius;
    }
    if (rate) {
      mo.envelope.rate = *rate;
      mo.envelope.delta = acc && acc->envelope_delta ? *acc->envelope_delta : mo.tolerance;
    }
    stats = monte_carlo(sc, mo);
    record = stats->first_record;
    summary["monte_carlo"] = to_json(*stats);
    summary["envelope"] = {{"rate", finite_or_null(mo.envelope.rate)},
                           {"delta", finite_or_null(mo.envelope.delta)},
                           {"certified", rate.has_value() && !is_directed(sc.mode)}};
  } else {
    try {
      record = run(sc);
    } catch (const DivergenceError& e) {
      if (e.partial()) write_record(*e.partial(), cfg, dir);
      summary["error"] = e.what();
      write_text(dir / "summary.json", summary.dump(2) + "\n");
      throw;
    }
  }
  if (record) {
    write_record(*record, cfg, dir);
    summary["terminal"] = terminal_json(*record, source);
  }

  if (acc) {
    json aj = to_json(cfg)["acceptance"];
    if (is_averaged(sc.mode) && acc->envelope_delta && rate && record) {
      const auto check = envelope_check(*record, *rate, *acc->envelope_delta);
      result.accepted = check.violation_fraction == 0.0;
      aj["envelope_check"] = to_json(check);
    } else if (stats && reference) {
      const std::size_t pass = stats->count_window_within(acc->radius);
      const double frac = static_cast<double>(pass) / static_cast<double>(stats->trials.size());
      result.accepted = frac >= acc->min_pass_fraction;
      aj["window_pass_count"] = pass;
      aj["window_pass_fraction"] = frac;
    } else {
      throw ConfigError("acceptance: no reference point to measure against (set fields.source, "
                        "fields.refine_start or acceptance.reference)");
    }
    aj["passed"] = *result.accepted;
    summary["acceptance"] = aj;
  }
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  result.summary = std::move(summary);
  return result;
}

int cmd_run(const RunOptions& options, std::ostream& log) {
  const auto cfg = resolve_scenario(options);
  std::vector<std::pair<std::string, ScenarioConfig>> jobs;
  if (cfg.variants.empty()) {
    jobs.emplace_back("", cfg);
  } else {
    for (const auto& v : cfg.variants) jobs.emplace_back(v.name, variant(cfg, v.name));
  }
  bool all_ok = true;
  json index = json::array();
  for (const auto& [name, job] : jobs) {
    const fs::path dir = name.empty() ? options.out : options.out / name;
    const auto res = run_scenario(job, dir);
    log << (job.name.empty() ? "scenario" : job.name) << ": wrote " << dir.string();
    if (res.accepted) log << (*res.accepted ? " [envelope ok]" : " [envelope VIOLATED]");
    log << '\n';
    if (res.accepted && !*res.accepted) all_ok = false;
    index.push_back({{"variant", name}, {"dir", dir.string()}, {"accepted", res.accepted ? json(*res.accepted) : json(nullptr)}});
  }
  if (!cfg.variants.empty())
    write_text(options.out / "variants.json", json{{"name", cfg.name}, {"variants", index}}.dump(2) + "\n");
  return all_ok ? kOk : kEnvelopeViolated;
}

int cmd_report(const fs::path& run_dir, const fs::path& out_in, std::ostream& log) {
  const fs::path out = out_in.empty() ? run_dir : out_in;
  const fs::path summary_path = run_dir / "summary.json";
  const fs::path traj_path = run_dir / "trajectory.csv";
  if (!fs::exists(summary_path)) throw Error("report: missing " + summary_path.string());
  if (!fs::exists(traj_path)) throw Error("report: missing " + traj_path.string());
  const json summary = parse_json_text(read_text(summary_path), summary_path.string());
  if (!summary.contains("config")) throw Error("report: summary.json carries no config echo");
  const auto cfg = parse_config(summary.at("config"));
  const auto sc = build_sim_config(cfg);

  std::ifstream traj(traj_path);
  std::ifstream eig;
  const fs::path eig_path = run_dir / "eigvec.csv";
  if (fs::exists(eig_path)) eig.open(eig_path);
  const auto record = read_trajectory_csv(traj, eig.is_open() ? &eig : nullptr);

  json report;
  report["schema_version"] = kSummarySchemaVersion;
  report["kind"] = "dses-rate-report";
  report["name"] = cfg.name;
  report["rate"] = rate_section(cfg);
  if (record.has_source() && report["rate"].contains("lambda1")) {
    const double delta = cfg.acceptance && cfg.acceptance->envelope_delta ? *cfg.acceptance->envelope_delta
                                                                         : (cfg.acceptance ? cfg.acceptance->radius : 0.15);
    auto check = to_json(envelope_check(record, report["rate"]["lambda1"].get<double>(), delta));
    check["delta"] = delta;
    report["envelope"] = check;
  }
  if (record.has_r()) {
    const Vector limit = eigenvector_limit(*sc.graph);
    const auto R = record.r(record.samples() - 1);
    report["r_diagonal_final"] = vector_json(R.diagonal());
    report["r_diagonal_limit"] = vector_json(limit);
  }
  fs::create_directories(out);
  for (std::size_t i = 0; i < record.vehicles(); ++i) {
    std::ostringstream os;
    write_vehicle_plot_csv(os, record, i);
    write_text(out / ("plot_vehicle_" + std::to_string(i) + ".csv"), os.str());
  }
  write_text(out / "report.json", report.dump(2) + "\n");
  log << "report: wrote " << (out / "report.json").string() << '\n';
  return kOk;
}

int cmd_presets(std::ostream& log) {
  for (const auto& name : preset_names()) {
    const auto doc = preset_document(name);
    log << name << "  " << doc.value("description", std::string()) << '\n';
  }
  return kOk;
}

int cmd_validate(const RunOptions& options, std::ostream& log) {
  const auto cfg = resolve_scenario(options);
  log << "ok: " << (cfg.name.empty() ? "scenario" : cfg.name);
  if (!cfg.variants.empty()) log << " (" << cfg.variants.size() << " variants)";
  log << '\n';
  return kOk;
}

}  // namespace dses::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dses/sim.hpp"

namespace dses {

inline constexpr int kConfigSchemaVersion = 1;

using Rows = std::vector<std::vector<double>>;

struct FieldSpec {
  enum class Kind { Quadratic, Analytic, Gramian };
  Kind kind = Kind::Quadratic;
  // quadratic
  Rows H;
  std::vector<double> b;
  double c = 0.0;
  // analytic
  std::string formula_id;
  std::map<std::string, double> params;
  // gramian: measurements either given or generated from `state`
  Rows A, C;
  Rows measurements;
  std::vector<double> state;

  bool operator==(const FieldSpec&) const = default;
};

struct GraphSpec {
  bool directed = false;
  std::size_t n = 0;
  Rows adjacency;
  struct Edge {
    std::size_t from = 0, to = 0;
    double weight = 1.0;
    bool operator==(const Edge&) const = default;
  };
  std::vector<Edge> edges;
  bool operator==(const GraphSpec&) const = default;
};

struct ControllerSpec {
  double alpha = 0.01, beta = 2.5, gamma = 0.01, h = 1.0;
  std::optional<double> varrho;
  std::optional<double> phi;
  bool operator==(const ControllerSpec&) const = default;
};

struct SimSpec {
  std::string mode = "undirected";
  double dt = 1e-3, t0 = 0.0, t_end = 2000.0;
  Rows initial_positions;
  Rows initial_integrators;
  std::uint64_t master_seed = 0;
  std::size_t trials = 1;
  unsigned threads = 0;
  bool operator==(const SimSpec&) const = default;
};

struct OutputSpec {
  std::size_t sample_stride = 100;
  bool trajectory_csv = true;
  bool plot_data = false;
  bool operator==(const OutputSpec&) const = default;
};

/// The envelope a run declares for itself. A stochastic run passes when at
/// least min_pass_fraction of trials have every vehicle's final-window mean
/// within `radius` of the reference; an averaged run passes when no sample
/// violates rho_hat e^{-lambda1 t} + envelope_delta.
struct AcceptanceSpec {
  double radius = 0.15;
  double window_fraction = 0.2;
  double min_pass_fraction = 0.9;
  std::optional<double> envelope_delta;
  /// Reference point; defaults to the resolved source.
  std::vector<double> reference;
  bool operator==(const AcceptanceSpec&) const = default;
};

struct VariantSpec {
  std::string name;
  nlohmann::json overrides = nlohmann::json::object();
  bool operator==(const VariantSpec&) const = default;
};

struct ScenarioConfig {
  int schema_version = kConfigSchemaVersion;
  std::string name;
  std::string description;
  int dimension = 2;
  std::vector<FieldSpec> fields;
  /// Explicit source position; otherwise closed form (quadratic sets) or
  /// local refinement from refine_start (when set).
  std::vector<double> source;
  std::vector<double> refine_start;
  ControllerSpec controller;
  GraphSpec graph;
  OUParams excitation;
  SimSpec sim;
  OutputSpec output;
  std::optional<AcceptanceSpec> acceptance;
  std::vector<VariantSpec> variants;

  bool operator==(const ScenarioConfig& o) const;
};

/// Structural parse with unknown-key rejection. Semantic checks happen in
/// build_sim_config.
ScenarioConfig parse_config(const nlohmann::json& doc);
nlohmann::json to_json(const ScenarioConfig& cfg);
std::string serialize(const ScenarioConfig& cfg);

/// Parses JSON text; syntax errors report line and column.
nlohmann::json parse_json_text(const std::string& text, const std::string& origin);

/// "a.b.c=value": value is read as JSON when it parses, else as a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);
void apply_override(nlohmann::json& doc, const std::string& dotted_key, const nlohmann::json& value);

std::vector<std::string> preset_names();
nlohmann::json preset_document(const std::string& name);

/// Loads, applies overrides, parses, and fully validates (build_sim_config).
ScenarioConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides = {});
ScenarioConfig load_preset(const std::string& name, const std::vector<std::string>& overrides = {});
ScenarioConfig load_config_document(nlohmann::json doc, const std::vector<std::string>& overrides = {});

/// The named variant with its overrides applied (variants list dropped).
ScenarioConfig variant(const ScenarioConfig& cfg, const std::string& name);

FieldSet build_field_set(const ScenarioConfig& cfg);
InteractionGraph build_graph(const ScenarioConfig& cfg);

/// Everything a simulation needs, with every invariant checked. Errors name
/// the violated invariant and the assumption it maps to.
SimConfig build_sim_config(const ScenarioConfig& cfg);

}  // namespace dses

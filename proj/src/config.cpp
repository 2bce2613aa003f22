#include "dses/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dses/io.hpp"

namespace dses {
namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_presets();
}

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!ok) {
      std::string list;
      for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
      throw ConfigError("config: unknown key '" + key + "' in '" + where + "' (allowed: " + list + ")");
    }
  }
}

template <class T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: '" + where + "." + key + "' has the wrong type");
  }
}

template <class T>
T require(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError("config: missing '" + where + "." + key + "'");
  return get<T>(j, key, where, T{});
}

Matrix to_matrix(const Rows& rows, const std::string& what) {
  if (rows.empty()) return Matrix(0, 0);
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.front().size());
  Matrix M(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != c)
      throw ConfigError("config: " + what + " has ragged rows");
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return M;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

FieldSpec parse_field(const json& j, const std::string& where) {
  FieldSpec f;
  const auto type = require<std::string>(j, "type", where);
  if (type == "quadratic") {
    check_keys(j, where, {"type", "H", "b", "c"});
    f.kind = FieldSpec::Kind::Quadratic;
    f.H = require<Rows>(j, "H", where);
    f.b = require<std::vector<double>>(j, "b", where);
    f.c = get<double>(j, "c", where, 0.0);
  } else if (type == "analytic") {
    check_keys(j, where, {"type", "formula_id", "params"});
    f.kind = FieldSpec::Kind::Analytic;
    f.formula_id = require<std::string>(j, "formula_id", where);
    f.params = get<std::map<std::string, double>>(j, "params", where, {});
  } else if (type == "gramian") {
    check_keys(j, where, {"type", "A", "C", "measurements", "state"});
    f.kind = FieldSpec::Kind::Gramian;
    f.A = require<Rows>(j, "A", where);
    f.C = require<Rows>(j, "C", where);
    f.measurements = get<Rows>(j, "measurements", where, {});
    f.state = get<std::vector<double>>(j, "state", where, {});
    if (f.measurements.empty() == f.state.empty())
      throw ConfigError("config: '" + where + "' needs exactly one of 'measurements' or 'state'");
  } else {
    throw ConfigError("config: '" + where + ".type' must be quadratic, analytic or gramian, got '" + type + "'");
  }
  return f;
}

json field_json(const FieldSpec& f) {
  switch (f.kind) {
    case FieldSpec::Kind::Quadratic:
      return {{"type", "quadratic"}, {"H", f.H}, {"b", f.b}, {"c", f.c}};
    case FieldSpec::Kind::Analytic:
      return {{"type", "analytic"}, {"formula_id", f.formula_id}, {"params", f.params}};
    case FieldSpec::Kind::Gramian: {
      json j = {{"type", "gramian"}, {"A", f.A}, {"C", f.C}};
      if (!f.measurements.empty()) j["measurements"] = f.measurements;
      if (!f.state.empty()) j["state"] = f.state;
      return j;
    }
  }
  return {};
}

std::vector<Vector> gramian_measurements(const FieldSpec& f, const Matrix& A, const Matrix& C) {
  std::vector<Vector> out;
  if (!f.measurements.empty()) {
    for (const auto& m : f.measurements) out.push_back(to_vector(m));
    return out;
  }
  const Vector x0 = to_vector(f.state);
  if (x0.size() != A.cols()) throw ConfigError("config: gramian state has the wrong dimension");
  Vector x = x0;
  for (Eigen::Index k = 0; k < A.rows(); ++k) {
    out.push_back(C * x);
    x = A * x;
  }
  return out;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + std::min(byte, text.size()), '\n'));
}

}  // namespace

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
  return schema_version == o.schema_version && name == o.name && description == o.description &&
         dimension == o.dimension && fields == o.fields && source == o.source &&
         refine_start == o.refine_start && controller == o.controller && graph == o.graph &&
         excitation.epsilon == o.excitation.epsilon && excitation.g == o.excitation.g &&
         sim == o.sim && output == o.output && acceptance == o.acceptance && variants == o.variants;
}

ScenarioConfig parse_config(const json& doc) {
  check_keys(doc, "<root>", {"$schema", "schema_version", "name", "description", "fields", "graph",
                             "controller", "excitation", "sim", "output", "acceptance", "variants"});
  ScenarioConfig cfg;
  cfg.schema_version = get<int>(doc, "schema_version", "<root>", kConfigSchemaVersion);
  if (cfg.schema_version != kConfigSchemaVersion)
    throw ConfigError("config: unsupported schema_version " + std::to_string(cfg.schema_version));
  cfg.name = get<std::string>(doc, "name", "<root>", "");
  cfg.description = get<std::string>(doc, "description", "<root>", "");

  if (!doc.contains("fields")) throw ConfigError("config: missing 'fields'");
  const auto& fj = doc.at("fields");
  check_keys(fj, "fields", {"dimension", "items", "source", "refine_start"});
  cfg.dimension = require<int>(fj, "dimension", "fields");
  if (!fj.contains("items") || !fj.at("items").is_array() || fj.at("items").empty())
    throw ConfigError("config: 'fields.items' must be a non-empty array");
  for (std::size_t i = 0; i < fj.at("items").size(); ++i)
    cfg.fields.push_back(parse_field(fj.at("items").at(i), "fields.items." + std::to_string(i)));
  cfg.source = get<std::vector<double>>(fj, "source", "fields", {});
  cfg.refine_start = get<std::vector<double>>(fj, "refine_start", "fields", {});

  if (!doc.contains("graph")) throw ConfigError("config: missing 'graph'");
  const auto& gj = doc.at("graph");
  check_keys(gj, "graph", {"directed", "n", "adjacency", "edges"});
  cfg.graph.directed = get<bool>(gj, "directed", "graph", false);
  cfg.graph.n = require<std::size_t>(gj, "n", "graph");
  cfg.graph.adjacency = get<Rows>(gj, "adjacency", "graph", {});
  if (gj.contains("edges")) {
    for (const auto& e : gj.at("edges")) {
      if (!e.is_array() || e.size() < 2 || e.size() > 3)
        throw ConfigError("config: 'graph.edges' entries are [from, to] or [from, to, weight]");
      GraphSpec::Edge edge;
      edge.from = e.at(0).get<std::size_t>();
      edge.to = e.at(1).get<std::size_t>();
      edge.weight = e.size() == 3 ? e.at(2).get<double>() : 1.0;
      cfg.graph.edges.push_back(edge);
    }
  }
  if (cfg.graph.adjacency.empty() == !gj.contains("edges"))
    throw ConfigError("config: 'graph' needs exactly one of 'adjacency' or 'edges'");

  if (doc.contains("controller")) {
    const auto& cj = doc.at("controller");
    check_keys(cj, "controller", {"alpha", "beta", "gamma", "h", "varrho", "phi"});
    auto& c = cfg.controller;
    c.alpha = get<double>(cj, "alpha", "controller", c.alpha);
    c.beta = get<double>(cj, "beta", "controller", c.beta);
    c.gamma = get<double>(cj, "gamma", "controller", c.gamma);
    c.h = get<double>(cj, "h", "controller", c.h);
    if (cj.contains("varrho")) c.varrho = get<double>(cj, "varrho", "controller", 0.0);
    if (cj.contains("phi")) c.phi = get<double>(cj, "phi", "controller", 0.0);
  }
  if (doc.contains("excitation")) {
    const auto& ej = doc.at("excitation");
    check_keys(ej, "excitation", {"epsilon", "g"});
    cfg.excitation.epsilon = get<double>(ej, "epsilon", "excitation", cfg.excitation.epsilon);
    cfg.excitation.g = get<double>(ej, "g", "excitation", cfg.excitation.g);
  }
  if (!doc.contains("sim")) throw ConfigError("config: missing 'sim'");
  {
    const auto& sj = doc.at("sim");
    check_keys(sj, "sim", {"mode", "dt", "t0", "t_end", "initial_positions", "initial_integrators",
                           "master_seed", "trials", "threads"});
    auto& s = cfg.sim;
    s.mode = get<std::string>(sj, "mode", "sim", s.mode);
    sim_mode_from_string(s.mode);
    s.dt = get<double>(sj, "dt", "sim", s.dt);
    s.t0 = get<double>(sj, "t0", "sim", s.t0);
    s.t_end = get<double>(sj, "t_end", "sim", s.t_end);
    s.initial_positions = require<Rows>(sj, "initial_positions", "sim");
    s.initial_integrators = get<Rows>(sj, "initial_integrators", "sim", {});
    s.master_seed = get<std::uint64_t>(sj, "master_seed", "sim", s.master_seed);
    s.trials = get<std::size_t>(sj, "trials", "sim", s.trials);
    s.threads = get<unsigned>(sj, "threads", "sim", s.threads);
    if (s.trials < 1) throw ConfigError("config: 'sim.trials' must be at least 1");
  }
  if (doc.contains("output")) {
    const auto& oj = doc.at("output");
    check_keys(oj, "output", {"sample_stride", "trajectory_csv", "plot_data"});
    auto& o = cfg.output;
    o.sample_stride = get<std::size_t>(oj, "sample_stride", "output", o.sample_stride);
    o.trajectory_csv = get<bool>(oj, "trajectory_csv", "output", o.trajectory_csv);
    o.plot_data = get<bool>(oj, "plot_data", "output", o.plot_data);
  }
  if (doc.contains("acceptance")) {
    const auto& aj = doc.at("acceptance");
    check_keys(aj, "acceptance", {"radius", "window_fraction", "min_pass_fraction", "envelope_delta", "reference"});
    AcceptanceSpec a;
    a.radius = get<double>(aj, "radius", "acceptance", a.radius);
    a.window_fraction = get<double>(aj, "window_fraction", "acceptance", a.window_fraction);
    a.min_pass_fraction = get<double>(aj, "min_pass_fraction", "acceptance", a.min_pass_fraction);
    if (aj.contains("envelope_delta")) a.envelope_delta = get<double>(aj, "envelope_delta", "acceptance", 0.0);
    a.reference = get<std::vector<double>>(aj, "reference", "acceptance", {});
    if (!(a.window_fraction > 0.0 && a.window_fraction <= 1.0))
      throw ConfigError("config: 'acceptance.window_fraction' must be in (0, 1]");
    cfg.acceptance = a;
  }
  if (doc.contains("variants")) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < doc.at("variants").size(); ++i) {
      const auto& vj = doc.at("variants").at(i);
      const std::string where = "variants." + std::to_string(i);
      check_keys(vj, where, {"name", "overrides"});
      VariantSpec v;
      v.name = require<std::string>(vj, "name", where);
      if (!seen.insert(v.name).second) throw ConfigError("config: duplicate variant '" + v.name + "'");
      v.overrides = vj.value("overrides", json::object());
      if (!v.overrides.is_object()) throw ConfigError("config: '" + where + ".overrides' must be an object");
      cfg.variants.push_back(std::move(v));
    }
  }
  return cfg;
}

json to_json(const ScenarioConfig& cfg) {
  json doc;
  doc["schema_version"] = cfg.schema_version;
  doc["name"] = cfg.name;
  doc["description"] = cfg.description;
  json items = json::array();
  for (const auto& f : cfg.fields) items.push_back(field_json(f));
  doc["fields"] = {{"dimension", cfg.dimension}, {"items", items}};
  if (!cfg.source.empty()) doc["fields"]["source"] = cfg.source;
  if (!cfg.refine_start.empty()) doc["fields"]["refine_start"] = cfg.refine_start;

  json g = {{"directed", cfg.graph.directed}, {"n", cfg.graph.n}};
  if (!cfg.graph.adjacency.empty()) {
    g["adjacency"] = cfg.graph.adjacency;
  } else {
    json edges = json::array();
    for (const auto& e : cfg.graph.edges) edges.push_back({e.from, e.to, e.weight});
    g["edges"] = edges;
  }
  doc["graph"] = g;

  const auto& c = cfg.controller;
  doc["controller"] = {{"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma}, {"h", c.h}};
  if (c.varrho) doc["controller"]["varrho"] = *c.varrho;
  if (c.phi) doc["controller"]["phi"] = *c.phi;
  doc["excitation"] = {{"epsilon", cfg.excitation.epsilon}, {"g", cfg.excitation.g}};

  const auto& s = cfg.sim;
  doc["sim"] = {{"mode", s.mode},         {"dt", s.dt},
                {"t0", s.t0},             {"t_end", s.t_end},
                {"initial_positions", s.initial_positions},
                {"master_seed", s.master_seed},
                {"trials", s.trials},     {"threads", s.threads}};
  if (!s.initial_integrators.empty()) doc["sim"]["initial_integrators"] = s.initial_integrators;
  doc["output"] = {{"sample_stride", cfg.output.sample_stride},
                   {"trajectory_csv", cfg.output.trajectory_csv},
                   {"plot_data", cfg.output.plot_data}};
  if (cfg.acceptance) {
    const auto& a = *cfg.acceptance;
    doc["acceptance"] = {{"radius", a.radius}, {"window_fraction", a.window_fraction},
                         {"min_pass_fraction", a.min_pass_fraction}};
    if (a.envelope_delta) doc["acceptance"]["envelope_delta"] = *a.envelope_delta;
    if (!a.reference.empty()) doc["acceptance"]["reference"] = a.reference;
  }
  if (!cfg.variants.empty()) {
    json vs = json::array();
    for (const auto& v : cfg.variants) vs.push_back({{"name", v.name}, {"overrides", v.overrides}});
    doc["variants"] = vs;
  }
  return doc;
}

std::string serialize(const ScenarioConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::ostringstream os;
    os << origin << ":" << line_of(text, e.byte > 0 ? e.byte - 1 : 0) << ": JSON syntax error: " << e.what();
    throw ConfigError(os.str());
  }
}

void apply_override(json& doc, const std::string& dotted_key, const json& value) {
  if (dotted_key.empty()) throw ConfigError("override: empty key");
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted_key.find('.', start);
    const std::string part = dotted_key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override: malformed key '" + dotted_key + "'");
    json* child = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        throw ConfigError("override: '" + part + "' is not an array index in '" + dotted_key + "'");
      }
      if (idx >= node->size()) throw ConfigError("override: index out of range in '" + dotted_key + "'");
      child = &(*node)[idx];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object()) throw ConfigError("override: '" + dotted_key + "' descends into a scalar");
      child = &(*node)[part];
    }
    if (dot == std::string::npos) {
      *child = value;
      return;
    }
    node = child;
    start = dot + 1;
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override: expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  apply_override(doc, key, value);
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : detail::embedded_presets()) out.emplace_back(name);
  return out;
}

json preset_document(const std::string& name) {
  for (const auto& [n, text] : detail::embedded_presets())
    if (n == name) return parse_json_text(std::string(text), "preset " + name);
  throw ConfigError("unknown preset '" + name + "'");
}

ScenarioConfig load_config_document(json doc, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) apply_override(doc, o);
  auto cfg = parse_config(doc);
  build_sim_config(cfg);
  for (const auto& v : cfg.variants) build_sim_config(variant(cfg, v.name));
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  return load_config_document(parse_json_text(read_text(path), path.string()), overrides);
}

ScenarioConfig load_preset(const std::string& name, const std::vector<std::string>& overrides) {
  return load_config_document(preset_document(name), overrides);
}

ScenarioConfig variant(const ScenarioConfig& cfg, const std::string& name) {
  const auto it = std::find_if(cfg.variants.begin(), cfg.variants.end(),
                               [&](const VariantSpec& v) { return v.name == name; });
  if (it == cfg.variants.end()) throw ConfigError("config: no variant named '" + name + "'");
  json doc = to_json(cfg);
  doc.erase("variants");
  for (const auto& [key, value] : it->overrides.items()) apply_override(doc, key, value);
  doc["name"] = cfg.name + "." + name;
  return parse_config(doc);
}

FieldSet build_field_set(const ScenarioConfig& cfg) {
  const int m = cfg.dimension;
  if (m < 1 || m > kMaxDim) throw ConfigError("config: 'fields.dimension' must be between 1 and 10");
  std::vector<Field> fields;
  for (std::size_t i = 0; i < cfg.fields.size(); ++i) {
    const auto& f = cfg.fields[i];
    const std::string where = "fields.items." + std::to_string(i);
    try {
      switch (f.kind) {
        case FieldSpec::Kind::Quadratic:
          fields.emplace_back(QuadraticField(to_matrix(f.H, where + ".H"), to_vector(f.b), f.c));
          break;
        case FieldSpec::Kind::Analytic:
          fields.emplace_back(AnalyticField(f.formula_id, m, f.params));
          break;
        case FieldSpec::Kind::Gramian: {
          const Matrix A = to_matrix(f.A, where + ".A");
          const Matrix C = to_matrix(f.C, where + ".C");
          fields.emplace_back(gramian_field(A, C, gramian_measurements(f, A, C)));
          break;
        }
      }
    } catch (const InvalidInput& e) {
      throw ConfigError("config: '" + where + "': " + e.what());
    }
    if (field_dimension(fields.back()) != m)
      throw ConfigError("config: '" + where + "' does not have dimension " + std::to_string(m));
  }
  return FieldSet(std::move(fields));
}

InteractionGraph build_graph(const ScenarioConfig& cfg) {
  const auto& g = cfg.graph;
  try {
    if (!g.adjacency.empty()) {
      const Matrix A = to_matrix(g.adjacency, "graph.adjacency");
      if (A.rows() != static_cast<Eigen::Index>(g.n) || A.cols() != A.rows())
        throw ConfigError("config: 'graph.adjacency' must be n x n");
      return InteractionGraph(A, g.directed);
    }
    std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
    for (const auto& e : g.edges) edges.emplace_back(e.from, e.to, e.weight);
    return InteractionGraph::from_edges(g.n, edges, g.directed);
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("config: 'graph': ") + e.what());
  }
}

SimConfig build_sim_config(const ScenarioConfig& cfg) {
  SimConfig sc;
  sc.mode = sim_mode_from_string(cfg.sim.mode);
  sc.t0 = cfg.sim.t0;
  sc.t_end = cfg.sim.t_end;
  sc.dt = cfg.sim.dt;
  sc.sample_stride = cfg.output.sample_stride;
  sc.master_seed = cfg.sim.master_seed;
  auto fields = std::make_shared<const FieldSet>(build_field_set(cfg));
  sc.fields = fields;
  sc.graph = std::make_shared<const InteractionGraph>(build_graph(cfg));

  const auto& c = cfg.controller;
  sc.gains.alpha = c.alpha;
  sc.gains.beta = c.beta;
  sc.gains.gamma = c.gamma;
  sc.gains.h = c.h;
  try {
    if (c.varrho && c.phi) {
      if (std::abs(phi_from_varrho(c.alpha, *c.varrho) - *c.phi) > 1e-6 * *c.phi)
        throw ConfigError("config: 'controller.varrho' and 'controller.phi' disagree");
      sc.gains.varrho = *c.varrho;
    } else if (c.varrho) {
      sc.gains.varrho = *c.varrho;
    } else if (c.phi) {
      sc.gains.varrho = varrho_from_phi(c.alpha, *c.phi);
    }
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("config: 'controller': ") + e.what());
  }
  sc.excitation = cfg.excitation;
  for (const auto& z : cfg.sim.initial_positions) sc.initial_positions.push_back(to_vector(z));
  for (const auto& v : cfg.sim.initial_integrators) sc.initial_integrators.push_back(to_vector(v));

  if (!cfg.source.empty()) {
    sc.source = to_vector(cfg.source);
  } else if (!cfg.refine_start.empty()) {
    if (static_cast<int>(cfg.refine_start.size()) != cfg.dimension)
      throw ConfigError("config: 'fields.refine_start' has the wrong dimension");
    sc.source = refine_local_maximum(*fields, to_vector(cfg.refine_start));
  }
  try {
    validate(sc);
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (cfg.acceptance && !cfg.acceptance->reference.empty() &&
      static_cast<int>(cfg.acceptance->reference.size()) != cfg.dimension)
    throw ConfigError("config: 'acceptance.reference' has the wrong dimension");
  return sc;
}

}  // namespace dses

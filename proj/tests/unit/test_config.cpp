#include <doctest.h>

#include "dses/config.hpp"
#include "support.hpp"

using namespace dses;
using nlohmann::json;
using support::vec2;

TEST_CASE("undirected preset values") {
  const auto cfg = load_preset("sec4_undirected");
  const auto sc = build_sim_config(cfg);
  CHECK(sc.mode == SimMode::Undirected);
  CHECK(sc.excitation.epsilon == 0.05);
  CHECK(sc.excitation.g == 0.6);
  CHECK(sc.gains.alpha == 0.01);
  CHECK(sc.gains.beta == 2.5);
  CHECK(sc.gains.gamma == 0.01);
  CHECK(sc.gains.h == 1.0);
  REQUIRE(sc.initial_positions.size() == 4);
  CHECK(sc.initial_positions[0] == vec2(0, 0));
  CHECK(sc.initial_positions[1] == vec2(0.9, 0));
  CHECK(sc.initial_positions[2] == vec2(0.9, 0.9));
  CHECK(sc.initial_positions[3] == vec2(0, 0.9));
  const auto q = support::sec4_quadratics();
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& f = std::get<QuadraticField>((*sc.fields)[i]);
    CHECK((f.H() - q[i].H()).norm() <= 1e-15);
    CHECK(f.b() == q[i].b());
    CHECK(f.c() == q[i].c());
  }
}

TEST_CASE("non-quadratic preset values") {
  const auto cfg = load_preset("sec4_nonquadratic");
  const auto sc = build_sim_config(cfg);
  const auto& f1 = std::get<QuadraticField>((*sc.fields)[0]);
  const auto& f2 = std::get<QuadraticField>((*sc.fields)[1]);
  CHECK(f1.b() == vec2(2, -1));
  CHECK(f2.b() == vec2(-0.5, 1));
  CHECK(f1.c() == -1.0);
  CHECK(f2.c() == 0.0);
  CHECK(std::holds_alternative<AnalyticField>((*sc.fields)[2]));
  CHECK(std::holds_alternative<AnalyticField>((*sc.fields)[3]));
  // The reference is the local maximizer of the sum reached from the quoted
  // point, which sits about 0.25 away from it.
  REQUIRE(sc.source);
  CHECK((*sc.source - vec2(1.6040, 1.8472)).norm() < 1e-3);
  CHECK(sc.fields->aggregate(*sc.source) > sc.fields->aggregate(vec2(1.443, 2.041)));
}

TEST_CASE("every preset loads and validates") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    CHECK_NOTHROW(build_sim_config(load_preset(name)));
  }
  CHECK_THROWS_AS(load_preset("no_such_preset"), ConfigError);
}

TEST_CASE("disconnected graph is rejected citing Assumption 1") {
  auto doc = preset_document("sec4_undirected");
  doc["graph"]["edges"] = json::array({json::array({0, 1}), json::array({2, 3})});
  try {
    (void)load_config_document(doc);
    FAIL("expected rejection");
  } catch (const AssumptionViolation& e) {
    CHECK(std::string(e.what()).find("Assumption 1") != std::string::npos);
  }
}

TEST_CASE("indefinite curvature is rejected") {
  auto doc = preset_document("sec4_undirected");
  doc["fields"]["items"][3]["H"] = json::array({json::array({3.0, -1.0}), json::array({-1.0, 0.33})});
  CHECK_THROWS_WITH_AS(load_config_document(doc), doctest::Contains("positive semi-definite"), ConfigError);
}

TEST_CASE("non-positive gain is rejected") {
  CHECK_THROWS_WITH_AS(load_preset("sec4_undirected", {"controller.beta=0"}), doctest::Contains("must be positive"), ConfigError);
}

TEST_CASE("serialization round trip") {
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const auto cfg = load_preset(name);
    const auto back = parse_config(json::parse(serialize(cfg)));
    CHECK(back == cfg);
  }
}

TEST_CASE("syntax errors carry the line number") {
  const std::string text = "{\n  \"name\": \"x\",\n  \"sim\": {\n    \"dt\": 0.001,,\n  }\n}\n";
  try {
    (void)parse_json_text(text, "broken.json");
    FAIL("expected a syntax error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("broken.json:4") != std::string::npos);
  }
}

TEST_CASE("unknown keys are rejected") {
  auto doc = preset_document("sec4_undirected");
  doc["controller"]["betta"] = 2.5;
  try {
    (void)load_config_document(doc);
    FAIL("expected rejection");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("betta") != std::string::npos);
  }
}

TEST_CASE("dotted overrides") {
  json doc = {{"a", {{"b", 1}}}};
  apply_override(doc, "a.b=2.5");
  apply_override(doc, "a.c=[1,2]");
  apply_override(doc, "a.d=hello");
  CHECK(doc["a"]["b"] == 2.5);
  CHECK(doc["a"]["c"] == json::array({1, 2}));
  CHECK(doc["a"]["d"] == "hello");
}

TEST_CASE("directed preset: phi maps to the smaller varrho root") {
  const auto sc = build_sim_config(load_preset("sec4_directed"));
  CHECK(sc.mode == SimMode::Directed);
  REQUIRE(sc.gains.varrho);
  const double rho = *sc.gains.varrho, a = sc.gains.alpha;
  CHECK(rho + (1.0 + a) / (a * rho) == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(rho < std::sqrt((1.0 + a) / a));
}

TEST_CASE("parameter study variants") {
  const auto cfg = load_preset("sec4_param_study");
  REQUIRE(cfg.variants.size() == 2);
  const auto a = build_sim_config(variant(cfg, "consensus_start"));
  CHECK(a.gains.alpha == 0.005);
  for (const auto& z : a.initial_positions) CHECK(z == vec2(0.5, 0.5));
  const auto b = build_sim_config(variant(cfg, "local_optima_start"));
  CHECK(b.gains.beta == 1.25);
  CHECK(b.initial_positions[2] == vec2(0.75, 1.58));
  CHECK_THROWS_AS(variant(cfg, "nope"), ConfigError);
}

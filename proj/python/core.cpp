#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dses/analysis.hpp"
#include "dses/config.hpp"
#include "dses/excitation.hpp"
#include "dses/fields.hpp"
#include "dses/graph.hpp"
#include "dses/io.hpp"
#include "dses/sim.hpp"

namespace py = pybind11;

namespace {

dses::ScenarioConfig load(const std::string& text, const std::vector<std::string>& overrides) {
  return dses::load_config_document(dses::parse_json_text(text, "<python>"), overrides);
}

// Copies a record into numpy arrays shaped (samples, vehicles[, dim]).
py::dict record_arrays(const dses::TrajectoryRecord& rec) {
  const auto S = static_cast<py::ssize_t>(rec.samples());
  const auto n = static_cast<py::ssize_t>(rec.vehicles());
  const auto m = static_cast<py::ssize_t>(rec.dimension());
  py::array_t<double> t(S), z({S, n, m}), v({S, n, m}), f({S, n}), ec({S, n});
  auto tz = z.mutable_unchecked<3>();
  auto tv = v.mutable_unchecked<3>();
  auto tf = f.mutable_unchecked<2>();
  auto te = ec.mutable_unchecked<2>();
  auto tt = t.mutable_unchecked<1>();
  for (py::ssize_t s = 0; s < S; ++s) {
    tt(s) = rec.times()[static_cast<std::size_t>(s)];
    for (py::ssize_t i = 0; i < n; ++i) {
      const auto zi = rec.z(static_cast<std::size_t>(s), static_cast<std::size_t>(i));
      const auto vi = rec.v(static_cast<std::size_t>(s), static_cast<std::size_t>(i));
      for (py::ssize_t k = 0; k < m; ++k) {
        tz(s, i, k) = zi(k);
        tv(s, i, k) = vi(k);
      }
      tf(s, i) = rec.f(static_cast<std::size_t>(s), static_cast<std::size_t>(i));
      te(s, i) = rec.err_consensus(static_cast<std::size_t>(s), static_cast<std::size_t>(i));
    }
  }
  py::dict out;
  out["t"] = t;
  out["z"] = z;
  out["v"] = v;
  out["f"] = f;
  out["err_consensus"] = ec;
  out["err_tilde"] = py::none();
  out["r"] = py::none();
  if (rec.has_source()) {
    py::array_t<double> et({S, n});
    auto a = et.mutable_unchecked<2>();
    for (py::ssize_t s = 0; s < S; ++s)
      for (py::ssize_t i = 0; i < n; ++i)
        a(s, i) = rec.err_tilde(static_cast<std::size_t>(s), static_cast<std::size_t>(i));
    out["err_tilde"] = et;
  }
  if (rec.has_r()) {
    py::array_t<double> r({S, n, n});
    auto a = r.mutable_unchecked<3>();
    for (py::ssize_t s = 0; s < S; ++s) {
      const auto R = rec.r(static_cast<std::size_t>(s));
      for (py::ssize_t i = 0; i < n; ++i)
        for (py::ssize_t j = 0; j < n; ++j) a(s, i, j) = R(j, i);  // row i = r_i
    }
    out["r"] = r;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distributed stochastic extremum seeking: C++ core bindings";

  static py::exception<dses::Error> base_error(m, "DsesError", PyExc_RuntimeError);
  py::register_exception<dses::ConfigError>(m, "ConfigError", base_error.ptr());
  py::register_exception<dses::InvalidInput>(m, "InvalidInput", base_error.ptr());
  py::register_exception<dses::AssumptionViolation>(m, "AssumptionViolation", base_error.ptr());
  py::register_exception<dses::DivergenceError>(m, "DivergenceError", base_error.ptr());
  py::register_exception<dses::UnsupportedMode>(m, "UnsupportedMode", base_error.ptr());

  m.def("kappa", &dses::kappa, py::arg("gamma"), py::arg("g"));

  m.def("preset_names", &dses::preset_names);
  m.def("preset_text", [](const std::string& name) { return dses::preset_document(name).dump(); },
        py::arg("name"));

  // Canonical JSON text of a validated scenario (round-trips through the loader).
  m.def("normalize", [](const std::string& text, const std::vector<std::string>& overrides) {
        return dses::serialize(load(text, overrides));
      },
      py::arg("text"), py::arg("overrides") = std::vector<std::string>{});

  m.def("simulate", [](const std::string& text, const std::vector<std::string>& overrides) {
        const auto cfg = load(text, overrides);
        const auto sc = dses::build_sim_config(cfg);
        dses::TrajectoryRecord rec;
        {
          py::gil_scoped_release nogil;
          rec = dses::run(sc);
        }
        auto out = record_arrays(rec);
        const auto src = dses::resolve_source(sc);
        out["source"] = src ? py::cast(Eigen::VectorXd(*src)) : py::none();
        return out;
      },
      py::arg("text"), py::arg("overrides") = std::vector<std::string>{},
      "Runs one trial of the scenario (first seed). Averaged modes integrate the deterministic model.");

  m.def("rate_report_text", [](const std::string& text, const std::vector<std::string>& overrides) {
        return dses::to_json(dses::rate_report(dses::build_sim_config(load(text, overrides)))).dump();
      },
      py::arg("text"), py::arg("overrides") = std::vector<std::string>{});

  m.def("aggregate_optimum", [](const std::vector<Eigen::MatrixXd>& H, const std::vector<Eigen::VectorXd>& b) {
        if (H.size() != b.size()) throw dses::InvalidInput("aggregate_optimum: H and b lengths differ");
        std::vector<dses::Field> fields;
        for (std::size_t i = 0; i < H.size(); ++i) fields.emplace_back(dses::QuadraticField(H[i], b[i], 0.0));
        return Eigen::VectorXd(dses::aggregate_optimum(dses::FieldSet(std::move(fields))));
      },
      py::arg("H"), py::arg("b"));

  m.def("spectral_summary", [](const Eigen::MatrixXd& adjacency, bool directed) {
        const auto s = dses::spectral_summary(dses::InteractionGraph(adjacency, directed));
        py::dict out;
        out["L"] = Eigen::MatrixXd(s.L);
        out["xi"] = Eigen::VectorXd(s.xi);
        out["lambda_L"] = s.lambda_L;
        out["ell"] = s.ell;
        out["eigenvalues"] = s.eigenvalues;
        return out;
      },
      py::arg("adjacency"), py::arg("directed"));

  m.def("ergodic_moment", [](int k, double g, double epsilon, double horizon, double dt, std::uint64_t seed) {
        dses::OUProcess p(dses::Point::Zero(1), dses::OUParams{epsilon, g}, dses::RngStream(seed, 0));
        py::gil_scoped_release nogil;
        return dses::ergodic_moment(p, k, horizon, dt);
      },
      py::arg("k"), py::arg("g"), py::arg("epsilon"), py::arg("horizon"), py::arg("dt"), py::arg("seed") = 1);
}

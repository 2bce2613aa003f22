#pragma once

#include <memory>
#include <vector>

#include "dses/fields.hpp"
#include "dses/graph.hpp"
#include "dses/sim.hpp"

namespace support {

inline dses::Matrix mat2(double a, double b, double c, double d) {
  dses::Matrix M(2, 2);
  M << a, b, c, d;
  return M;
}

inline dses::Vector vec2(double x, double y) { return dses::Vector{{x, y}}; }

// The four source-seeking fields with curvature = -(printed Hessian).
inline std::vector<dses::QuadraticField> sec4_quadratics() {
  return {dses::QuadraticField(mat2(2, -1, -1, 0.5), vec2(1.5, -0.75), 0.44),
          dses::QuadraticField(mat2(0.25, -0.5, -0.5, 1), vec2(-0.5, 1), 0.5),
          dses::QuadraticField(mat2(0.5, -1.5, -1.5, 4.5), vec2(-2, 6), -3),
          dses::QuadraticField(mat2(3, -1, -1, 1.0 / 3.0), vec2(2.5, -5.0 / 6.0), -0.042)};
}

inline dses::FieldSet sec4_fields() {
  std::vector<dses::Field> f;
  for (auto& q : sec4_quadratics()) f.emplace_back(q);
  return dses::FieldSet(std::move(f));
}

inline std::shared_ptr<const dses::InteractionGraph> cycle(std::size_t n, bool directed) {
  std::vector<std::tuple<std::size_t, std::size_t, double>> edges;
  for (std::size_t i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n, 1.0);
  return std::make_shared<const dses::InteractionGraph>(dses::InteractionGraph::from_edges(n, edges, directed));
}

// Undirected paper setup with a short horizon.
inline dses::SimConfig sec4_sim(double t_end = 10.0) {
  dses::SimConfig c;
  c.mode = dses::SimMode::Undirected;
  c.t_end = t_end;
  c.dt = 1e-3;
  c.sample_stride = 100;
  c.master_seed = 1;
  c.fields = std::make_shared<const dses::FieldSet>(sec4_fields());
  c.graph = cycle(4, false);
  c.gains = {0.01, 2.5, 0.01, 1.0, std::nullopt};
  c.excitation = {0.05, 0.6};
  c.initial_positions = {vec2(0, 0), vec2(0.9, 0), vec2(0.9, 0.9), vec2(0, 0.9)};
  return c;
}

}  // namespace support

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "dses/analysis.hpp"
#include "dses/sim.hpp"

namespace dses {

inline constexpr int kSummarySchemaVersion = 1;

/// t,vehicle,z1..zm,v1..vm,f,err_tilde,err_consensus. err_tilde is left out
/// when the record has no source.
std::string trajectory_csv_header(const TrajectoryRecord& record);
void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record);

/// t,vehicle,r1..rn: row (t, i) is vehicle i's estimate r_i. Directed only.
void write_eigvec_csv(std::ostream& os, const TrajectoryRecord& record);

/// Reads back write_trajectory_csv output (plus the optional eigvec file).
/// Values round-trip exactly.
TrajectoryRecord read_trajectory_csv(std::istream& traj, std::istream* eigvec = nullptr);

/// Plot data: one file per vehicle with t,x1..xm,f.
void write_vehicle_plot_csv(std::ostream& os, const TrajectoryRecord& record, std::size_t vehicle);

nlohmann::json to_json(const RateReport& report);
nlohmann::json to_json(const MonteCarloStats& stats);
nlohmann::json to_json(const EnvelopeCheck& check);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace dses

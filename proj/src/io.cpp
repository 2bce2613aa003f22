#include "dses/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dses {
namespace {

// Shortest representation that parses back to the same double.
void put(std::ostream& os, double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  os.write(buf, res.ptr - buf);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    // from_chars does not accept "inf"/"nan" spellings from every writer
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw InvalidInput("csv: bad number '" + s + "'");
  }
  return x;
}

nlohmann::json finite_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

nlohmann::json matrix_json(const Matrix& M) {
  auto rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

std::string trajectory_csv_header(const TrajectoryRecord& record) {
  std::ostringstream os;
  os << "t,vehicle";
  for (int k = 1; k <= record.dimension(); ++k) os << ",z" << k;
  for (int k = 1; k <= record.dimension(); ++k) os << ",v" << k;
  os << ",f";
  if (record.has_source()) os << ",err_tilde";
  os << ",err_consensus";
  return os.str();
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& record) {
  os << trajectory_csv_header(record) << '\n';
  for (std::size_t s = 0; s < record.samples(); ++s)
    for (std::size_t i = 0; i < record.vehicles(); ++i) {
      put(os, record.times()[s]);
      os << ',' << i;
      for (double x : record.z(s, i)) os << ',', put(os, x);
      for (double x : record.v(s, i)) os << ',', put(os, x);
      os << ',';
      put(os, record.f(s, i));
      if (record.has_source()) os << ',', put(os, record.err_tilde(s, i));
      os << ',';
      put(os, record.err_consensus(s, i));
      os << '\n';
    }
}

void write_eigvec_csv(std::ostream& os, const TrajectoryRecord& record) {
  if (!record.has_r()) throw InvalidInput("eigvec csv: record has no r estimates");
  os << "t,vehicle";
  for (std::size_t k = 1; k <= record.vehicles(); ++k) os << ",r" << k;
  os << '\n';
  for (std::size_t s = 0; s < record.samples(); ++s) {
    const auto R = record.r(s);
    for (std::size_t i = 0; i < record.vehicles(); ++i) {
      put(os, record.times()[s]);
      os << ',' << i;
      for (Eigen::Index k = 0; k < R.rows(); ++k) os << ',', put(os, R(k, static_cast<Eigen::Index>(i)));
      os << '\n';
    }
  }
}

TrajectoryRecord read_trajectory_csv(std::istream& traj, std::istream* eigvec) {
  std::string line;
  if (!std::getline(traj, line)) throw InvalidInput("trajectory csv: empty file");
  const auto header = split(line);
  int m = 0;
  bool has_err = false;
  for (const auto& h : header) {
    if (h.size() > 1 && h[0] == 'z') ++m;
    if (h == "err_tilde") has_err = true;
  }
  const std::size_t cols = 2 + 2 * static_cast<std::size_t>(m) + 1 + (has_err ? 1 : 0) + 1;
  if (m < 1 || header.size() != cols || header[0] != "t" || header[1] != "vehicle")
    throw InvalidInput("trajectory csv: unrecognized header '" + line + "'");

  struct Row {
    double t;
    std::size_t vehicle;
    Point z, v;
    double f, err;
  };
  std::vector<Row> rows;
  std::size_t n = 0;
  while (std::getline(traj, line)) {
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != cols) throw InvalidInput("trajectory csv: wrong column count in '" + line + "'");
    Row r;
    r.t = parse_double(c[0]);
    r.vehicle = static_cast<std::size_t>(std::stoul(c[1]));
    r.z.resize(m);
    r.v.resize(m);
    for (int k = 0; k < m; ++k) {
      r.z[k] = parse_double(c[2 + k]);
      r.v[k] = parse_double(c[2 + m + k]);
    }
    r.f = parse_double(c[2 + 2 * m]);
    r.err = has_err ? parse_double(c[3 + 2 * m]) : 0.0;
    n = std::max(n, r.vehicle + 1);
    rows.push_back(std::move(r));
  }
  if (n == 0 || rows.size() % n != 0) throw InvalidInput("trajectory csv: incomplete sample block");
  const std::size_t S = rows.size() / n;

  std::vector<Matrix> rs;
  if (eigvec) {
    if (!std::getline(*eigvec, line)) throw InvalidInput("eigvec csv: empty file");
    if (split(line).size() != 2 + n) throw InvalidInput("eigvec csv: header does not match vehicle count");
    rs.assign(S, Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
    std::size_t k = 0;
    while (std::getline(*eigvec, line)) {
      if (line.empty()) continue;
      const auto c = split(line);
      if (c.size() != 2 + n || k / n >= S) throw InvalidInput("eigvec csv: malformed row");
      const auto i = static_cast<Eigen::Index>(std::stoul(c[1]));
      for (std::size_t j = 0; j < n; ++j) rs[k / n](static_cast<Eigen::Index>(j), i) = parse_double(c[2 + j]);
      ++k;
    }
    if (k != S * n) throw InvalidInput("eigvec csv: sample count does not match the trajectory");
  }

  TrajectoryRecord record(n, m, has_err, eigvec != nullptr);
  std::vector<Point> z(n), v(n);
  std::vector<double> f(n), err(has_err ? n : 0);
  for (std::size_t s = 0; s < S; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = rows[s * n + i];
      if (r.vehicle != i || r.t != rows[s * n].t) throw InvalidInput("trajectory csv: rows out of order");
      z[i] = r.z;
      v[i] = r.v;
      f[i] = r.f;
      if (has_err) err[i] = r.err;
    }
    record.append(rows[s * n].t, z, v, f, err, eigvec ? &rs[s] : nullptr);
  }
  return record;
}

void write_vehicle_plot_csv(std::ostream& os, const TrajectoryRecord& record, std::size_t vehicle) {
  if (vehicle >= record.vehicles()) throw InvalidInput("plot csv: vehicle index out of range");
  os << "t";
  for (int k = 1; k <= record.dimension(); ++k) os << ",x" << k;
  os << ",f\n";
  for (std::size_t s = 0; s < record.samples(); ++s) {
    put(os, record.times()[s]);
    for (double x : record.z(s, vehicle)) os << ',', put(os, x);
    os << ',';
    put(os, record.f(s, vehicle));
    os << '\n';
  }
}

nlohmann::json to_json(const RateReport& r) {
  nlohmann::json j;
  j["directed"] = r.directed;
  j["kappa"] = r.kappa;
  j["ell"] = r.ell;
  j["lambda_L"] = r.lambda_L;
  if (!r.directed) {
    j["lambda1"] = r.lambda1;
    if (r.violation) j["violation"] = *r.violation;
  } else {
    j["varrho"] = r.varrho;
    j["P"] = matrix_json(r.P);
    j["Q"] = matrix_json(r.Q);
    j["lambda_P"] = r.lambda_P;
    j["lambda_Q"] = r.lambda_Q;
    j["lambda_H"] = r.lambda_H;
    j["weyl_margin"] = r.weyl_margin;
    if (r.rho0) j["rho0"] = *r.rho0;
    j["lambda2_proxy"] = r.lambda2_proxy;
    j["certified"] = r.certified;
  }
  j["warnings"] = r.warnings;
  return j;
}

nlohmann::json to_json(const MonteCarloStats& stats) {
  nlohmann::json j;
  j["terminal_quantiles"] = {{"q10", finite_or_null(stats.terminal_q10)},
                             {"q50", finite_or_null(stats.terminal_q50)},
                             {"q90", finite_or_null(stats.terminal_q90)}};
  j["median_time_to_tolerance"] = finite_or_null(stats.median_time_to_tolerance());
  auto trials = nlohmann::json::array();
  for (const auto& t : stats.trials) {
    nlohmann::json tj = {{"seed", t.seed},
                         {"terminal_error", finite_or_null(t.terminal_error)},
                         {"window_distance", finite_or_null(t.window_distance)},
                         {"time_to_tolerance", finite_or_null(t.time_to_tolerance)}};
    if (!t.error.empty()) tj["error"] = t.error;
    trials.push_back(tj);
  }
  j["trials"] = trials;
  // Envelope fraction thinned to at most ~200 points for the summary.
  auto env = nlohmann::json::array();
  const std::size_t S = stats.times.size();
  const std::size_t stride = std::max<std::size_t>(1, S / 200);
  for (std::size_t s = 0; s < S; s += stride) env.push_back({stats.times[s], stats.fraction_within[s]});
  j["fraction_within_envelope"] = env;
  return j;
}

nlohmann::json to_json(const EnvelopeCheck& check) {
  return {{"rho_hat", check.rho_hat}, {"violation_fraction", check.violation_fraction}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
  if (!os) throw Error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace dses

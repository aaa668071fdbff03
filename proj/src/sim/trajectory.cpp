#include "hsa/sim/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hsa/error.hpp"

namespace hsa::sim {

namespace {

void put(std::ostream& os, double v) {
  char buf[40];
  if (std::isnan(v)) {
    os << "nan";
    return;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

double parse_field(const std::string& field, std::size_t line) {
  if (field == "nan" || field == "NaN") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("trajectory CSV line " + std::to_string(line) + ": bad number '" +
                      field + "'");
  }
}

}  // namespace

const std::vector<std::string>& Trajectory::csv_columns() {
  static const std::vector<std::string> cols{"t",     "q1",    "q2",       "q3",    "qd1",  "qd2",
                                             "qd3",   "phi1",  "phi2",     "pee_x", "pee_y",
                                             "theta_ee", "ref_x", "ref_y"};
  return cols;
}

void Trajectory::push_back(TrajectorySample s) {
  if (!samples_.empty() && !(s.t > samples_.back().t)) {
    throw InvalidArgument("Trajectory: timestamps must be strictly increasing");
  }
  samples_.push_back(std::move(s));
}

double Trajectory::uniform_dt() const {
  if (samples_.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double dt = (samples_.back().t - samples_.front().t) / static_cast<double>(samples_.size() - 1);
  for (std::size_t i = 1; i < samples_.size(); ++i) {
    if (std::abs(samples_[i].t - samples_[i - 1].t - dt) > 1e-6 * dt) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  }
  return dt;
}

void Trajectory::write_csv(std::ostream& os) const {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& s : samples_) {
    const double row[] = {s.t,           s.state.q.kappa_be, s.state.q.sigma_sh, s.state.q.sigma_ax,
                          s.state.q_dot(0), s.state.q_dot(1), s.state.q_dot(2),  s.phi(0),
                          s.phi(1),      s.ee.p_x,          s.ee.p_y,          s.ee.theta,
                          s.ref(0),      s.ref(1)};
    for (std::size_t i = 0; i < std::size(row); ++i) {
      if (i) os << ',';
      put(os, row[i]);
    }
    os << '\n';
  }
}

void Trajectory::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot open '" + path + "' for writing");
  write_csv(f);
  if (!f) throw ConfigError("failed writing '" + path + "'");
}

Trajectory Trajectory::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("trajectory CSV: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::vector<std::string> header;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) header.push_back(f);
    if (header != csv_columns()) throw ConfigError("trajectory CSV: unexpected header");
  }
  Trajectory traj;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) v.push_back(parse_field(f, lineno));
    if (v.size() != csv_columns().size()) {
      throw ConfigError("trajectory CSV line " + std::to_string(lineno) + ": wrong field count");
    }
    TrajectorySample s;
    s.t = v[0];
    s.state.q = Configuration{v[1], v[2], v[3]};
    s.state.q_dot = Eigen::Vector3d(v[4], v[5], v[6]);
    s.phi = ActuationAngles(v[7], v[8]);
    s.ee = PlanarPose{v[9], v[10], v[11]};
    s.ref = Eigen::Vector2d(v[12], v[13]);
    try {
      traj.push_back(std::move(s));
    } catch (const InvalidArgument& e) {
      throw ConfigError("trajectory CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return traj;
}

Trajectory Trajectory::read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open trajectory '" + path + "'");
  return read_csv(f);
}

}  // namespace hsa::sim

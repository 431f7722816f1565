#include "ddkl/vessel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ddkl/errors.hpp"
#include "ddkl/io.hpp"
#include "ddkl/rng.hpp"

namespace ddkl {

namespace {

bool finite(const Eigen::Vector3d& v) { return v.allFinite(); }

void check_input_box(const ControlInput& u) {
  if (!(u[0] >= -1.0 && u[0] <= 1.0 && u[1] >= -1.0 && u[1] <= 1.0))
    throw IntervalOutOfRange("control input outside [-1,1]^2");
}

}  // namespace

void VesselParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(name, "must be > 0");
  };
  positive(mass, "vessel.mass");
  positive(inertia, "vessel.inertia");
  positive(thruster_offset, "vessel.thruster_offset");
  positive(max_thrust, "vessel.max_thrust");
  for (int k = 0; k < 3; ++k) {
    if (!(added_mass[k] > 0.0)) throw ConfigError("vessel.added_mass", "must be > 0");
    if (damping_linear[k] < 0.0) throw ConfigError("vessel.damping_linear", "must be >= 0");
    if (damping_quadratic[k] < 0.0)
      throw ConfigError("vessel.damping_quadratic", "must be >= 0");
  }
}

Eigen::Vector3d body_acceleration(const VesselParams& P, const Eigen::Vector3d& v,
                                  const ControlInput& u) {
  const double mx = P.mass + P.added_mass[0];
  const double my = P.mass + P.added_mass[1];
  const double mpsi = P.inertia + P.added_mass[2];

  const double fl = u[0] * P.max_thrust;
  const double fr = u[1] * P.max_thrust;
  const Eigen::Vector3d tau(fl + fr, 0.0, P.thruster_offset * (fr - fl));

  // Coriolis/centripetal including the Munk moment; does no work on v.
  const Eigen::Vector3d coriolis(-my * v[1] * v[2], mx * v[0] * v[2],
                                 (my - mx) * v[0] * v[1]);

  const Eigen::Vector3d damping(
      P.damping_linear[0] * v[0] + P.damping_quadratic[0] * std::abs(v[0]) * v[0],
      P.damping_linear[1] * v[1] + P.damping_quadratic[1] * std::abs(v[1]) * v[1],
      P.damping_linear[2] * v[2] + P.damping_quadratic[2] * std::abs(v[2]) * v[2]);

  const Eigen::Vector3d force = tau - coriolis - damping;
  return {force[0] / mx, force[1] / my, force[2] / mpsi};
}

Eigen::Vector3d step_velocity(const VesselParams& P, const Eigen::Vector3d& v,
                              const ControlInput& u, double dt) {
  const Eigen::Vector3d k1 = body_acceleration(P, v, u);
  const Eigen::Vector3d k2 = body_acceleration(P, v + 0.5 * dt * k1, u);
  const Eigen::Vector3d k3 = body_acceleration(P, v + 0.5 * dt * k2, u);
  const Eigen::Vector3d k4 = body_acceleration(P, v + dt * k3, u);
  return v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

VesselState step_truth(const VesselParams& P, const VesselState& s,
                       const ControlInput& u, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt", "must be > 0");
  check_input_box(u);

  VesselState next;
  next.v = step_velocity(P, s.v, u, dt);

  const double c = std::cos(s.p[2]);
  const double sn = std::sin(s.p[2]);
  const Eigen::Vector3d pdot(c * next.v[0] - sn * next.v[1],
                             sn * next.v[0] + c * next.v[1], next.v[2]);
  next.p = s.p + pdot * dt;

  if (!finite(next.p) || !finite(next.v))
    throw NonFiniteState("vessel state became non-finite");
  return next;
}

Trajectory generate_trajectory(const VesselParams& P, std::uint64_t seed, int T,
                               double dt, double sigma, int hold) {
  if (T < 2) throw ConfigError("data.T", "must be >= 2");
  if (hold < 1) throw ConfigError("data.hold", "must be >= 1");
  if (sigma < 0.0) throw ConfigError("data.sigma", "must be >= 0");

  Rng rng(seed);
  Trajectory traj;
  traj.dt = dt;
  traj.seed = seed;
  traj.states.reserve(T + 1);
  traj.inputs.reserve(T);
  traj.states.push_back(VesselState{});

  ControlInput held = ControlInput::Zero();
  for (int t = 0; t < T; ++t) {
    if (t % hold == 0) {
      held[0] = std::clamp(rng.normal(0.0, sigma), -1.0, 1.0);
      held[1] = std::clamp(rng.normal(0.0, sigma), -1.0, 1.0);
    }
    traj.inputs.push_back(held);
    traj.states.push_back(step_truth(P, traj.states.back(), held, dt));
  }
  return traj;
}

std::vector<Segment> partition_trajectory(const Trajectory& traj,
                                          const std::vector<std::pair<int, int>>& intervals) {
  const int T = traj.T();
  std::vector<Segment> segments;
  segments.reserve(intervals.size());
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto [start, end] = intervals[i];
    if (!(0 <= start && start < end && end <= T))
      throw IntervalOutOfRange("interval (" + std::to_string(start) + "," +
                               std::to_string(end) + ") invalid for T=" +
                               std::to_string(T));
    Segment seg;
    seg.agent_index = static_cast<int>(i);
    seg.start_index = start;
    seg.states.assign(traj.states.begin() + start, traj.states.begin() + end + 1);
    seg.inputs.assign(traj.inputs.begin() + start, traj.inputs.begin() + end);
    segments.push_back(std::move(seg));
  }
  return segments;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::string& config_hash) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "# config_hash " << config_hash << "\n";
  os << "# seed " << traj.seed << "\n";
  os << "# dt " << io::fmt_g17(traj.dt) << "\n";
  os << "t,px,py,phi,vx,vy,dphi,u_left,u_right\n";
  const int T = traj.T();
  for (int t = 0; t <= T; ++t) {
    const VesselState& s = traj.states[t];
    os << t;
    for (int k = 0; k < 3; ++k) os << ',' << io::fmt_g17(s.p[k]);
    for (int k = 0; k < 3; ++k) os << ',' << io::fmt_g17(s.v[k]);
    if (t < T)
      os << ',' << io::fmt_g17(traj.inputs[t][0]) << ',' << io::fmt_g17(traj.inputs[t][1]);
    else
      os << ",,";
    os << '\n';
  }
}

Trajectory read_trajectory_csv(const std::string& path,
                               std::string* config_hash_out) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  Trajectory traj;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      // comment lines look like "# key value"
      std::istringstream ls(line.substr(1));
      std::string key, value;
      ls >> key >> value;
      if (key == "seed") traj.seed = std::stoull(value);
      if (key == "dt") traj.dt = io::parse_double(value);
      if (key == "config_hash" && config_hash_out) *config_hash_out = value;
      continue;
    }
    if (!header_seen) {  // column header
      header_seen = true;
      continue;
    }
    const auto cells = io::split_csv_line(line);
    if (cells.size() != 9) throw IoError("trajectory row with " +
                                         std::to_string(cells.size()) + " cells");
    VesselState s;
    for (int k = 0; k < 3; ++k) s.p[k] = io::parse_double(cells[1 + k]);
    for (int k = 0; k < 3; ++k) s.v[k] = io::parse_double(cells[4 + k]);
    traj.states.push_back(s);
    if (!cells[7].empty())
      traj.inputs.push_back(ControlInput(io::parse_double(cells[7]),
                                         io::parse_double(cells[8])));
  }
  if (traj.states.size() != traj.inputs.size() + 1)
    throw IoError("trajectory file malformed: " + std::to_string(traj.states.size()) +
                  " states vs " + std::to_string(traj.inputs.size()) + " inputs");
  return traj;
}

}  // namespace ddkl

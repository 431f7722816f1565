#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ddkl {

using ControlInput = Eigen::Vector2d;  // [u_left, u_right], each in [-1, 1]

// Pose in the world frame, velocities in the body frame. Yaw is stored
// unwrapped so kinematic integration stays continuous.
struct VesselState {
  Eigen::Vector3d p = Eigen::Vector3d::Zero();  // [px (m), py (m), phi (rad)]
  Eigen::Vector3d v = Eigen::Vector3d::Zero();  // [vx (m/s), vy (m/s), dphi (rad/s)]

  Eigen::Matrix<double, 6, 1> x6() const {
    Eigen::Matrix<double, 6, 1> x;
    x << p, v;
    return x;
  }
  static VesselState from_x6(const Eigen::Matrix<double, 6, 1>& x) {
    return {x.head<3>(), x.tail<3>()};
  }
};

// Planar surge/sway/yaw model: rigid-body mass plus added mass, linear and
// quadratic damping, differential thrust with lateral offset. This is the
// in-repo ground truth the learners are evaluated against.
struct VesselParams {
  double mass = 180.0;           // kg
  double inertia = 50.0;         // kg m^2 about z
  Eigen::Vector3d added_mass = {25.0, 60.0, 15.0};
  Eigen::Vector3d damping_linear = {50.0, 100.0, 40.0};
  Eigen::Vector3d damping_quadratic = {25.0, 50.0, 20.0};
  double thruster_offset = 1.0;  // m, lateral distance of each thruster
  double max_thrust = 250.0;     // N per thruster at |u| = 1

  void validate() const;  // throws ConfigError on non-physical values
};

struct Trajectory {
  double dt = 0.02;
  std::vector<VesselState> states;   // length T + 1
  std::vector<ControlInput> inputs;  // length T
  std::uint64_t seed = 0;

  int T() const { return static_cast<int>(inputs.size()); }
};

// One agent's contiguous slice of the trajectory: states[k] pairs with
// inputs[k] for k < length(), plus the terminal state.
struct Segment {
  int agent_index = 0;  // 0-based internally
  int start_index = 0;
  std::vector<VesselState> states;
  std::vector<ControlInput> inputs;

  int transitions() const { return static_cast<int>(inputs.size()); }  // T_i
};

// One step of the ground-truth dynamics: RK4 for the body velocities, then
// the exact kinematic pose update p+ = p + R(phi) v+ dt (the same rotation
// form the learned combined model uses). Throws NonFiniteState.
VesselState step_truth(const VesselParams& params, const VesselState& s,
                       const ControlInput& u, double dt);

// Body-frame acceleration; exposed for oracle checks in tests.
Eigen::Vector3d body_acceleration(const VesselParams& params,
                                  const Eigen::Vector3d& v, const ControlInput& u);

// Velocity-only RK4 step (what step_truth applies before the pose update).
Eigen::Vector3d step_velocity(const VesselParams& params, const Eigen::Vector3d& v,
                              const ControlInput& u, double dt);

// Random excitation: per-channel Normal(0, sigma^2) clipped to [-1, 1], each
// draw held for `hold` consecutive steps. Starts from rest at the origin.
Trajectory generate_trajectory(const VesselParams& params, std::uint64_t seed, int T,
                               double dt, double sigma = 0.5, int hold = 10);

// Index intervals are [start, end] with 0 <= start < end <= T; segment i
// receives states start..end and inputs start..end-1. Intervals may overlap.
std::vector<Segment> partition_trajectory(const Trajectory& traj,
                                          const std::vector<std::pair<int, int>>& intervals);

// CSV: header t,px,py,phi,vx,vy,dphi,u_left,u_right; comment lines carry
// dt, seed and the config hash; floats use 17 significant digits.
void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                          const std::string& config_hash);
Trajectory read_trajectory_csv(const std::string& path,
                               std::string* config_hash_out = nullptr);

}  // namespace ddkl

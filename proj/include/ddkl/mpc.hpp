#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ddkl/koopman.hpp"
#include "ddkl/rng.hpp"
#include "ddkl/vessel.hpp"

namespace ddkl {

using Vector6d = Eigen::Matrix<double, 6, 1>;

struct MpcConfig {
  int horizon = 30;  // K

  Eigen::VectorXd q = (Eigen::VectorXd(6) << 300, 300, 500, 10, 10, 10).finished();
  Eigen::VectorXd qf = (Eigen::VectorXd(6) << 600, 600, 1000, 20, 20, 20).finished();
  Eigen::Vector2d r_weights{1e-3, 1e-3};

  double dt = 0.02;
  double u_min = -1.0;
  double u_max = 1.0;
  bool wrap_yaw = false;  // poses integrate unwrapped; raw yaw error by default

  int samples = 400;
  int elites = 40;
  int iterations = 6;
  double init_std = 0.4;
  double min_std = 1e-3;
  std::uint64_t seed = 99;

  void validate() const;  // throws ConfigError with the offending field
};

// One step of the combined prediction model: velocities through the Koopman
// model, pose through the yaw-rotation kinematics applied to the predicted
// velocity.
Vector6d combined_step(const KoopmanModel& model, const Vector6d& x,
                       const Eigen::Vector2d& u, double dt);

// Columnwise combined_step over candidate states/inputs.
Eigen::MatrixXd combined_step_batch(const KoopmanModel& model,
                                    const Eigen::MatrixXd& X,
                                    const Eigen::MatrixXd& U, double dt);

// Quadratic tracking cost of rolling `inputs` (2 x K) out of x0:
// sum of stage costs over x(0..K-1) plus terminal cost at x(K).
double trajectory_cost(const KoopmanModel& model, const Vector6d& x0,
                       const Eigen::MatrixXd& inputs, const Vector6d& goal,
                       const MpcConfig& cfg);

struct MpcSolution {
  Eigen::Vector2d u = Eigen::Vector2d::Zero();  // first input of the final mean
  double predicted_cost = 0.0;
  Eigen::MatrixXd mean;  // 2 x K final mean sequence, for warm starting
  std::vector<double> elite_mean_costs;  // one entry per CEM iteration
};

// Cross-entropy method over input sequences: sample around the (optionally
// warm-started) mean, clip to the input box, keep the cheapest elites, refit.
// Samples whose rollouts go non-finite are rejected; if every sample is
// rejected the solver throws SolverDegenerate. Deterministic given rng state.
MpcSolution solve_mpc(const KoopmanModel& model, const Vector6d& x,
                      const Vector6d& goal, const MpcConfig& cfg, Rng& rng,
                      const Eigen::MatrixXd* warm_start = nullptr);

struct ClosedLoopTrace {
  double dt = 0.02;
  std::vector<Vector6d> states;       // length steps + 1
  std::vector<Eigen::Vector2d> inputs;  // length steps
  std::vector<double> err_pos;        // per recorded state
  std::vector<double> err_yaw;
  std::vector<double> solve_ms;       // length steps
  std::vector<double> predicted_costs;  // length steps

  int steps() const { return static_cast<int>(inputs.size()); }
};

// Receding horizon: at every step solve against the learned model, apply the
// first input to the ground-truth simulator. The CEM mean is warm-started
// with the previous solution shifted one step (last input repeated) and reset
// once on solver degeneracy. If both stop tolerances are nonnegative, the
// loop ends early when err_pos < stop_pos_tol and err_yaw < stop_yaw_tol.
ClosedLoopTrace run_closed_loop(const VesselParams& truth,
                                const KoopmanModel& model, const Vector6d& x0,
                                const Vector6d& goal, const MpcConfig& cfg,
                                int max_steps, double stop_pos_tol = -1.0,
                                double stop_yaw_tol = -1.0);

// CSV: t,px,py,phi,vx,vy,dphi,u_left,u_right,err_pos,err_yaw,solve_ms with
// input/solve columns empty on the terminal row.
void write_trace_csv(const std::string& path, const ClosedLoopTrace& trace,
                     const std::string& config_hash);

}  // namespace ddkl

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <utility>
#include <vector>

#include "ddkl/config.hpp"
#include "ddkl/errors.hpp"
#include "ddkl/koopman.hpp"
#include "ddkl/mpc.hpp"
#include "ddkl/rng.hpp"
#include "ddkl/train.hpp"
#include "ddkl/vessel.hpp"

namespace py = pybind11;
using namespace ddkl;

namespace {

ExperimentConfig cfg_from_json(const std::string& text) {
  ExperimentConfig cfg = parse_config(text);
  cfg.validate();
  return cfg;
}

// States cross the boundary as (T+1) x 6 rows [px, py, phi, vx, vy, dphi],
// inputs as T x 2, matching the trajectory CSV column order.
Eigen::MatrixXd pack_states(const std::vector<VesselState>& states) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(states.size()), 6);
  for (Eigen::Index t = 0; t < X.rows(); ++t) X.row(t) = states[t].x6().transpose();
  return X;
}

Eigen::MatrixXd pack_inputs(const std::vector<ControlInput>& inputs) {
  Eigen::MatrixXd U(static_cast<Eigen::Index>(inputs.size()), 2);
  for (Eigen::Index t = 0; t < U.rows(); ++t) U.row(t) = inputs[t].transpose();
  return U;
}

Trajectory traj_from_arrays(const ExperimentConfig& cfg, const Eigen::MatrixXd& X,
                            const Eigen::MatrixXd& U) {
  if (X.cols() != 6) throw ConfigError("states", "expected shape (T+1, 6)");
  if (U.cols() != 2) throw ConfigError("inputs", "expected shape (T, 2)");
  if (X.rows() != U.rows() + 1)
    throw ConfigError("states", "need exactly one more state row than input rows");
  Trajectory traj;
  traj.dt = cfg.data.dt;
  traj.seed = cfg.data.seed;
  traj.states.resize(static_cast<size_t>(X.rows()));
  traj.inputs.resize(static_cast<size_t>(U.rows()));
  for (Eigen::Index t = 0; t < X.rows(); ++t)
    traj.states[static_cast<size_t>(t)] = VesselState::from_x6(X.row(t).transpose());
  for (Eigen::Index t = 0; t < U.rows(); ++t)
    traj.inputs[static_cast<size_t>(t)] = U.row(t).transpose();
  return traj;
}

TrainConfig run_train_config(const ExperimentConfig& cfg, const Trajectory& traj,
                             int run) {
  TrainConfig tc = cfg.train_config();
  tc.scaler = fit_scaler(cfg, traj);
  return with_run_seed(tc, run);
}

py::dict history_dict(const RunHistory& h) {
  Eigen::MatrixXd rounds(static_cast<Eigen::Index>(h.matrix_rounds.size()), 6);
  for (Eigen::Index i = 0; i < rounds.rows(); ++i) {
    const auto& r = h.matrix_rounds[static_cast<size_t>(i)];
    rounds.row(i) << static_cast<double>(r.s), r.disagreement_M, r.disagreement_C,
        r.dist_to_oracle_M, r.dist_to_oracle_C, r.mean_local_loss;
  }
  const Eigen::Index n_agents =
      h.theta_steps.empty()
          ? 0
          : static_cast<Eigen::Index>(h.theta_steps.front().agent_losses.size());
  Eigen::MatrixXd steps(static_cast<Eigen::Index>(h.theta_steps.size()),
                        2 + n_agents);
  for (Eigen::Index i = 0; i < steps.rows(); ++i) {
    const auto& r = h.theta_steps[static_cast<size_t>(i)];
    steps(i, 0) = static_cast<double>(r.step);
    steps(i, 1) = r.theta_disagreement;
    for (Eigen::Index j = 0; j < n_agents; ++j)
      steps(i, 2 + j) = r.agent_losses[static_cast<size_t>(j)];
  }
  py::dict d;
  d["matrix_rounds"] = rounds;  // columns: s, dis_M, dis_C, oracle_M, oracle_C, loss
  d["theta_steps"] = steps;     // columns: step, disagreement, loss per agent
  d["rounds_executed"] = h.rounds_executed;
  d["theta_steps_executed"] = h.theta_steps_executed;
  d["converged"] = h.converged;
  d["wall_seconds"] = h.wall_seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distributed deep Koopman learning workbench (C++ core)";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);

  py::class_<KoopmanModel>(m, "KoopmanModel")
      .def_property_readonly("A", [](const KoopmanModel& k) { return k.A; })
      .def_property_readonly("B", [](const KoopmanModel& k) { return k.B; })
      .def_property_readonly("C", [](const KoopmanModel& k) { return k.C; })
      .def_property_readonly("r", &KoopmanModel::r)
      .def_property_readonly("n", &KoopmanModel::n)
      .def_property_readonly("m", &KoopmanModel::m)
      .def("predict",
           [](const KoopmanModel& k, const Eigen::Vector3d& v,
              const Eigen::Vector2d& u) { return predict_next(k, v, u); },
           py::arg("v"), py::arg("u"), "One-step velocity prediction")
      .def("lift",
           [](const KoopmanModel& k, const Eigen::Vector3d& v) {
             return lift_forward(k.theta, k.scaler.apply(v));
           },
           py::arg("v"), "Lifted coordinates g(v)")
      .def("rollout",
           [](const KoopmanModel& k, const Eigen::Vector3d& v0,
              const Eigen::MatrixXd& U) {
             if (U.cols() != 2) throw ConfigError("inputs", "expected shape (K, 2)");
             std::vector<Eigen::Vector2d> inputs(static_cast<size_t>(U.rows()));
             for (Eigen::Index t = 0; t < U.rows(); ++t)
               inputs[static_cast<size_t>(t)] = U.row(t).transpose();
             const auto vs = rollout(k, v0, inputs);
             Eigen::MatrixXd V(static_cast<Eigen::Index>(vs.size()), 3);
             for (Eigen::Index t = 0; t < V.rows(); ++t)
               V.row(t) = vs[static_cast<size_t>(t)].transpose();
             return V;
           },
           py::arg("v0"), py::arg("inputs"),
           "Iterated prediction; returns the K predicted velocities as K x 3")
      .def("save",
           [](const KoopmanModel& k, const std::string& path,
              const std::string& tag) { save_model(path, k, tag); },
           py::arg("path"), py::arg("tag") = "")
      .def_static("load", &load_model, py::arg("path"));

  py::class_<MlpBaselineModel>(m, "MlpModel")
      .def("predict",
           [](const MlpBaselineModel& model, const Eigen::Vector3d& v,
              const Eigen::Vector2d& u) { return mlp_predict(model, v, u); },
           py::arg("v"), py::arg("u"), "One-step velocity prediction")
      .def("save",
           [](const MlpBaselineModel& model, const std::string& path,
              const std::string& tag) { save_mlp_baseline(path, model, tag); },
           py::arg("path"), py::arg("tag") = "")
      .def_static("load", &load_mlp_baseline, py::arg("path"));

  m.def("default_config", &default_config_json,
        "The shipped default configuration as a JSON string");

  m.def("config_hash",
        [](const std::string& config) { return cfg_from_json(config).config_hash(); },
        py::arg("config"), "Stable hash tagging every artifact of a config");

  m.def("simulate",
        [](const std::string& config) {
          const ExperimentConfig cfg = cfg_from_json(config);
          Trajectory traj;
          {
            py::gil_scoped_release release;
            traj = generate_trajectory(cfg.vessel, cfg.data.seed, cfg.data.T,
                                       cfg.data.dt, cfg.data.sigma, cfg.data.hold);
          }
          return py::make_tuple(pack_states(traj.states), pack_inputs(traj.inputs));
        },
        py::arg("config"),
        "Simulate the source trajectory; returns (states (T+1) x 6, inputs T x 2)");

  m.def("train_ddkl",
        [](const std::string& config, const Eigen::MatrixXd& X,
           const Eigen::MatrixXd& U, int run) {
          const ExperimentConfig cfg = cfg_from_json(config);
          const Trajectory traj = traj_from_arrays(cfg, X, U);
          const TrainConfig tc = run_train_config(cfg, traj, run);
          const Graph g = cfg.build_graph();
          const auto segments = partition_trajectory(traj, tc.intervals);
          DdklResult res;
          {
            py::gil_scoped_release release;
            res = run_ddkl_pt(tc, segments, g);
          }
          py::dict d = history_dict(res.history);
          py::list models;
          for (auto& model : res.models) models.append(std::move(model));
          d["models"] = std::move(models);
          return d;
        },
        py::arg("config"), py::arg("states"), py::arg("inputs"), py::arg("run") = 0,
        "Distributed consensus training; returns per-agent models plus history");

  m.def("train_dko",
        [](const std::string& config, const Eigen::MatrixXd& X,
           const Eigen::MatrixXd& U, int run) {
          const ExperimentConfig cfg = cfg_from_json(config);
          const Trajectory traj = traj_from_arrays(cfg, X, U);
          const TrainConfig tc = run_train_config(cfg, traj, run);
          DkoResult res;
          {
            py::gil_scoped_release release;
            res = train_dko_centralized(traj, tc);
          }
          return py::make_tuple(std::move(res.model), res.loss_trace, res.converged);
        },
        py::arg("config"), py::arg("states"), py::arg("inputs"), py::arg("run") = 0,
        "Centralized deep Koopman baseline; returns (model, loss_trace, converged)");

  m.def("train_mlp",
        [](const std::string& config, const Eigen::MatrixXd& X,
           const Eigen::MatrixXd& U, int run) {
          const ExperimentConfig cfg = cfg_from_json(config);
          const Trajectory traj = traj_from_arrays(cfg, X, U);
          const TrainConfig tc = run_train_config(cfg, traj, run);
          MlpBaselineResult res;
          {
            py::gil_scoped_release release;
            res = train_mlp_baseline(traj, tc);
          }
          return py::make_tuple(std::move(res.model), res.loss_trace, res.converged);
        },
        py::arg("config"), py::arg("states"), py::arg("inputs"), py::arg("run") = 0,
        "Direct one-step MLP baseline; returns (model, loss_trace, converged)");

  m.def("solve_mpc",
        [](const KoopmanModel& model, const Vector6d& x, const Vector6d& goal,
           const std::string& config) {
          const ExperimentConfig cfg = cfg_from_json(config);
          Rng rng(cfg.mpc.solver.seed);
          MpcSolution sol;
          {
            py::gil_scoped_release release;
            sol = solve_mpc(model, x, goal, cfg.mpc.solver, rng);
          }
          py::dict d;
          d["u"] = Eigen::Vector2d(sol.u);
          d["predicted_cost"] = sol.predicted_cost;
          d["mean"] = sol.mean;
          d["elite_mean_costs"] = sol.elite_mean_costs;
          return d;
        },
        py::arg("model"), py::arg("x"), py::arg("goal"), py::arg("config"),
        "One sampling-MPC solve from state x toward goal");

  m.def("closed_loop",
        [](const KoopmanModel& model, const std::string& config,
           const std::string& task, int max_steps) {
          const ExperimentConfig cfg = cfg_from_json(config);
          if (task != "goal" && task != "station")
            throw ConfigError("task", "expected goal or station");
          const Vector6d goal = task == "goal" ? cfg.mpc.goal : cfg.mpc.x0;
          const int steps = max_steps > 0 ? max_steps : cfg.mpc.max_steps;
          ClosedLoopTrace trace;
          {
            py::gil_scoped_release release;
            trace = run_closed_loop(cfg.vessel, model, cfg.mpc.x0, goal,
                                    cfg.mpc.solver, steps);
          }
          py::dict d;
          Eigen::MatrixXd S(static_cast<Eigen::Index>(trace.states.size()), 6);
          for (Eigen::Index t = 0; t < S.rows(); ++t)
            S.row(t) = trace.states[static_cast<size_t>(t)].transpose();
          d["states"] = S;
          d["inputs"] = pack_inputs(trace.inputs);
          d["err_pos"] = trace.err_pos;
          d["err_yaw"] = trace.err_yaw;
          d["predicted_costs"] = trace.predicted_costs;
          d["dt"] = trace.dt;
          return d;
        },
        py::arg("model"), py::arg("config"), py::arg("task") = "goal",
        py::arg("max_steps") = -1,
        "Receding-horizon rollout against the ground-truth simulator");
}

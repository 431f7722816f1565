// Workbench entry point: generate / train / eval / mpc / report, all driven
// by one JSON config. Exit codes: 0 ok, 2 config or validation error,
// 3 non-convergence (artifacts still written), 4 numerical failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ddkl/config.hpp"
#include "ddkl/consensus.hpp"
#include "ddkl/errors.hpp"
#include "ddkl/io.hpp"
#include "ddkl/mpc.hpp"
#include "ddkl/train.hpp"
#include "ddkl/vessel.hpp"

namespace fs = std::filesystem;
using namespace ddkl;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;  // data seed
  std::optional<int> runs;
  bool quick = false;
  std::string out;
};

struct LoadedConfig {
  ExperimentConfig cfg;
  std::string hash;  // stamped into artifacts: --seed changes the experiment
                     // (and the hash), --runs/--quick only subset the runs
};

LoadedConfig effective_config(const std::string& config_path,
                              const Overrides& ov) {
  ExperimentConfig cfg = load_config(config_path);
  if (ov.seed) cfg.data.seed = *ov.seed;
  cfg.validate();
  std::string hash = cfg.config_hash();
  if (ov.quick) cfg.theta.n_runs = 3;
  if (ov.runs) cfg.theta.n_runs = *ov.runs;
  cfg.validate();
  return {std::move(cfg), std::move(hash)};
}

std::string run_dir(const ExperimentConfig& cfg, const std::string& method,
                    int run) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "run%03d", run);
  return cfg.paths.out_dir + "/" + method + "/" + buf;
}

Trajectory load_trajectory_checked(const ExperimentConfig& cfg,
                                   const std::string& expected_hash) {
  std::string stored_hash;
  Trajectory traj = read_trajectory_csv(cfg.paths.trajectory, &stored_hash);
  if (stored_hash != expected_hash)
    throw ConfigError("paths.trajectory",
                      "file " + cfg.paths.trajectory +
                          " was generated under a different config "
                          "(hash " + stored_hash + " vs " + expected_hash +
                          "); rerun `ddkl generate`");
  if (traj.T() != cfg.data.T)
    throw ConfigError("paths.trajectory", "length disagrees with data.T");
  return traj;
}

int cmd_generate(const std::string& config_path, const Overrides& ov) {
  const auto [cfg, hash] = effective_config(config_path, ov);
  const std::string out = ov.out.empty() ? cfg.paths.trajectory : ov.out;
  Trajectory traj = generate_trajectory(cfg.vessel, cfg.data.seed, cfg.data.T,
                                        cfg.data.dt, cfg.data.sigma,
                                        cfg.data.hold);
  fs::create_directories(fs::path(out).parent_path().empty()
                             ? "."
                             : fs::path(out).parent_path().string());
  write_trajectory_csv(out, traj, hash);

  double vmax = 0.0;
  for (const auto& s : traj.states) vmax = std::max(vmax, s.v.norm());
  std::cout << "wrote " << out << " (" << traj.states.size() << " rows, dt "
            << traj.dt << ", seed " << traj.seed << ", max |v| " << vmax
            << ", config " << hash << ")\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& method,
              const Overrides& ov) {
  auto [cfg, hash] = effective_config(config_path, ov);
  if (!ov.out.empty()) cfg.paths.out_dir = ov.out;
  Trajectory traj = load_trajectory_checked(cfg, hash);

  TrainConfig base = cfg.train_config();
  base.scaler = fit_scaler(cfg, traj);

  bool all_converged = true;
  for (int run = 0; run < cfg.theta.n_runs; ++run) {
    const TrainConfig rc = with_run_seed(base, run);
    const std::string dir = run_dir(cfg, method, run);
    fs::create_directories(dir);

    if (method == "ddkl-pt") {
      const Graph g = cfg.build_graph();
      const auto segments = partition_trajectory(traj, rc.intervals);
      DdklResult res = run_ddkl_pt(rc, segments, g);
      for (size_t i = 0; i < res.models.size(); ++i)
        save_model(dir + "/agent" + std::to_string(i + 1) + ".model",
                   res.models[i], hash);
      write_round_history_csv(dir + "/round_history.csv",
                              res.history.matrix_rounds, hash);
      write_theta_history_csv(dir + "/theta_history.csv",
                              res.history.theta_steps, hash);
      all_converged = all_converged && res.history.converged;
      const double last_loss = res.history.theta_steps.empty()
                                   ? res.history.matrix_rounds.back().mean_local_loss
                                   : [&] {
                                       const auto& l =
                                           res.history.theta_steps.back().agent_losses;
                                       double m = 0.0;
                                       for (double v : l) m += v;
                                       return m / l.size();
                                     }();
      std::cout << "ddkl-pt run " << run << ": rounds "
                << res.history.rounds_executed << ", theta steps "
                << res.history.theta_steps_executed << ", mean loss "
                << last_loss << ", converged "
                << (res.history.converged ? "yes" : "no") << " ("
                << res.history.wall_seconds << " s)\n";
    } else if (method == "dko") {
      DkoResult res = train_dko_centralized(traj, rc);
      save_model(dir + "/model.model", res.model, hash);
      write_loss_trace_csv(dir + "/loss_history.csv", res.loss_trace, hash);
      all_converged = all_converged && res.converged;
      std::cout << "dko run " << run << ": steps " << res.loss_trace.size()
                << ", final loss " << res.loss_trace.back() << ", converged "
                << (res.converged ? "yes" : "no") << "\n";
    } else if (method == "mlp") {
      MlpBaselineResult res = train_mlp_baseline(traj, rc);
      save_mlp_baseline(dir + "/model.model", res.model, hash);
      write_loss_trace_csv(dir + "/loss_history.csv", res.loss_trace, hash);
      all_converged = all_converged && res.converged;
      std::cout << "mlp run " << run << ": steps " << res.loss_trace.size()
                << ", final loss " << res.loss_trace.back() << ", converged "
                << (res.converged ? "yes" : "no") << "\n";
    } else {
      throw ConfigError("train.method", "expected ddkl-pt, dko, or mlp");
    }
  }
  if (!all_converged)
    std::cout << "warning: at least one run ended above the loss threshold\n";
  return all_converged ? 0 : 3;
}

int cmd_eval(const std::string& config_path, std::vector<std::string> methods,
             const Overrides& ov) {
  const auto [cfg, hash] = effective_config(config_path, ov);
  Trajectory traj = load_trajectory_checked(cfg, hash);
  if (methods.empty()) methods = {"ddkl-pt", "dko", "mlp"};

  std::vector<std::pair<std::string, std::vector<std::vector<Predictor>>>> sets;
  for (const std::string& method : methods) {
    std::vector<std::vector<Predictor>> runs;
    for (int run = 0; run < cfg.theta.n_runs; ++run) {
      const std::string dir = run_dir(cfg, method, run);
      std::vector<Predictor> preds;
      if (method == "ddkl-pt") {
        for (int a = 1; a <= cfg.graph.n_agents; ++a)
          preds.push_back(koopman_predictor(
              load_model(dir + "/agent" + std::to_string(a) + ".model")));
      } else if (method == "dko") {
        preds.push_back(koopman_predictor(load_model(dir + "/model.model")));
      } else if (method == "mlp") {
        preds.push_back(mlp_predictor(load_mlp_baseline(dir + "/model.model")));
      } else {
        throw ConfigError("eval.methods", "unknown method " + method);
      }
      runs.push_back(std::move(preds));
    }
    sets.emplace_back(method, std::move(runs));
  }

  MetricsReport report =
      evaluate_metrics(sets, traj, cfg.data.train_end, cfg.data.test_end);
  const std::string out =
      ov.out.empty() ? cfg.paths.out_dir + "/metrics.csv" : ov.out;
  fs::create_directories(fs::path(out).parent_path().empty()
                             ? "."
                             : fs::path(out).parent_path().string());
  write_metrics_csv(out, report, hash);

  std::cout << "zero-predictor reference: " << report.zero_predictor << "\n";
  for (const auto& s : report.summaries)
    std::cout << s.method << ": " << s.mean << " +- " << s.stddev << " over "
              << cfg.theta.n_runs << " runs\n";
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_mpc(const std::string& config_path, const std::string& task,
            const std::string& model_path, const std::string& method, int run,
            int agent, const Overrides& ov) {
  const auto [cfg, hash] = effective_config(config_path, ov);
  std::string path = model_path;
  if (path.empty()) {
    if (method != "ddkl-pt" && method != "dko")
      throw ConfigError("mpc.method",
                        "the controller rolls out a Koopman model; use "
                        "ddkl-pt or dko (mlp checkpoints have no lift)");
    const std::string dir = run_dir(cfg, method, run);
    path = method == "ddkl-pt"
               ? dir + "/agent" + std::to_string(agent) + ".model"
               : dir + "/model.model";
  }
  const KoopmanModel model = load_model(path);

  const Vector6d x0 = cfg.mpc.x0;
  Vector6d goal;
  if (task == "goal") {
    goal = cfg.mpc.goal;
  } else if (task == "station") {
    goal = x0;
  } else {
    throw ConfigError("mpc.task", "expected goal or station");
  }

  ClosedLoopTrace trace = run_closed_loop(cfg.vessel, model, x0, goal,
                                          cfg.mpc.solver, cfg.mpc.max_steps);
  const std::string out = ov.out.empty()
                              ? cfg.paths.out_dir + "/mpc_" + task + ".csv"
                              : ov.out;
  fs::create_directories(fs::path(out).parent_path().empty()
                             ? "."
                             : fs::path(out).parent_path().string());
  write_trace_csv(out, trace, hash);

  double mean_ms = 0.0, max_err = 0.0;
  for (double v : trace.solve_ms) mean_ms += v;
  if (!trace.solve_ms.empty()) mean_ms /= trace.solve_ms.size();
  for (double v : trace.err_pos) max_err = std::max(max_err, v);
  std::cout << "task " << task << " with " << path << ": " << trace.steps()
            << " steps, terminal pos err " << trace.err_pos.back()
            << " m, terminal yaw err " << trace.err_yaw.back()
            << " rad, max pos err " << max_err << " m, mean solve "
            << mean_ms << " ms\n"
            << "wrote " << out << "\n";
  return 0;
}

int cmd_report(const std::string& config_path, const std::string& metrics_path,
               const Overrides& ov) {
  const ExperimentConfig cfg = effective_config(config_path, ov).cfg;
  const std::string in =
      metrics_path.empty() ? cfg.paths.out_dir + "/metrics.csv" : metrics_path;
  MetricsReport report = read_metrics_csv(in);

  std::map<std::string, int> counts;
  for (const auto& row : report.rows) counts[row.method]++;

  const std::string out =
      ov.out.empty() ? cfg.paths.out_dir + "/report.csv" : ov.out;
  std::ofstream f(out);
  if (!f) throw IoError("cannot open " + out + " for writing");
  f << "method,mean,std,n_runs\n";
  std::printf("%-10s %12s %12s %7s\n", "method", "mean", "std", "n_runs");
  for (const auto& s : report.summaries) {
    f << s.method << ',' << io::fmt_g17(s.mean) << ',' << io::fmt_g17(s.stddev)
      << ',' << counts[s.method] << "\n";
    std::printf("%-10s %12.6g %12.6g %7d\n", s.method.c_str(), s.mean,
                s.stddev, counts[s.method]);
  }
  std::printf("%-10s %12.6g\n", "zero-ref", report.zero_predictor);
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributed deep Koopman learning workbench"};
  app.require_subcommand(1);

  std::string config_path = "configs/default.json";
  app.add_option("--config", config_path, "experiment config (JSON)")
      ->capture_default_str();

  Overrides ov;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "override data seed");
  int runs_value = 0;
  auto* runs_opt =
      app.add_option("--runs", runs_value, "override number of experimental runs");
  app.add_flag("--quick", ov.quick, "3-run quick mode");
  app.add_option("--out", ov.out, "override output path");

  auto* gen = app.add_subcommand("generate", "simulate the source trajectory")->fallthrough();

  std::string method = "ddkl-pt";
  auto* train = app.add_subcommand("train", "train one method across runs")->fallthrough();
  train->add_option("--method", method, "ddkl-pt | dko | mlp")
      ->capture_default_str();

  std::vector<std::string> methods;
  auto* eval = app.add_subcommand("eval", "one-step metrics on the test slice")->fallthrough();
  eval->add_option("--methods", methods, "methods to evaluate")->delimiter(',');

  std::string task = "goal", model_path, mpc_method = "ddkl-pt";
  int run = 0, agent = 1;
  auto* mpc = app.add_subcommand("mpc", "closed-loop control with a checkpoint")->fallthrough();
  mpc->add_option("--task", task, "goal | station")->capture_default_str();
  mpc->add_option("--model", model_path, "explicit checkpoint path");
  mpc->add_option("--method", mpc_method, "checkpoint method dir")
      ->capture_default_str();
  mpc->add_option("--run", run, "run index")->capture_default_str();
  mpc->add_option("--agent", agent, "agent checkpoint (ddkl-pt)")
      ->capture_default_str();

  std::string metrics_path;
  auto* report = app.add_subcommand("report", "summarize a metrics CSV")->fallthrough();
  report->add_option("--metrics", metrics_path, "metrics csv path");

  auto* conf = app.add_subcommand("config", "print the default config (JSON)")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (seed_opt->count()) ov.seed = seed_value;
    if (runs_opt->count()) ov.runs = runs_value;
    if (gen->parsed()) return cmd_generate(config_path, ov);
    if (train->parsed()) return cmd_train(config_path, method, ov);
    if (eval->parsed()) return cmd_eval(config_path, methods, ov);
    if (mpc->parsed())
      return cmd_mpc(config_path, task, model_path, mpc_method, run, agent, ov);
    if (report->parsed()) return cmd_report(config_path, metrics_path, ov);
    if (conf->parsed()) {
      std::cout << default_config_json() << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const DisconnectedGraph& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::out_of_range& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const NonFiniteState& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const SingularBlockSystem& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const SolverDegenerate& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

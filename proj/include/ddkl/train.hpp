#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ddkl/consensus.hpp"
#include "ddkl/graph.hpp"
#include "ddkl/koopman.hpp"
#include "ddkl/lift.hpp"
#include "ddkl/message_bus.hpp"
#include "ddkl/vessel.hpp"

namespace ddkl {

struct TrainConfig {
  int n = 3;        // observed state dimension (body velocities)
  int m = 2;        // input dimension
  int r = 8;        // lifted dimension
  int hidden = 256; // hidden width of the lifting network

  int outer_rounds = 50;   // alternating rounds R
  int matrix_rounds = 200; // matrix-consensus iterations S per round
  int theta_rounds = 100;  // parameter iterations S_bar per round
  double c = 1.0;          // data-fit gain in the matrix update
  double alpha = 1e-4;     // learning rate
  double threshold = 7e-6; // stop once every local loss is below this
  long max_theta_steps = 200000;  // global cap across all rounds

  // "adam" follows the experimental protocol (every method trained with
  // Adam at the same rate); "subgradient" is the plain mixed gradient step.
  std::string theta_rule = "adam";
  std::string mixing = "metropolis";       // | "uniform-rows"
  std::string loss_weighting = "uniform";  // oracle weighting in history logs
  bool log_oracle_dist = true;

  std::uint64_t theta_seed = 2024;  // shared lifting initialization
  std::uint64_t matrix_seed = 7;    // per-agent consensus-state initialization

  Scaler scaler{};  // shared input normalization, identity by default

  // agent data intervals over the source trajectory, 0-indexed [start, end]
  std::vector<std::pair<int, int>> intervals;
  int train_end = 4000;  // centralized baselines fit on t in [0, train_end]
  int test_end = 5000;

  // centralized baselines: same rate/threshold, gradient-step budget matched
  // to the distributed run (outer_rounds * theta_rounds by default)
  long dko_max_steps = 5000;
  std::string dko_init = "ls";  // least-squares matrices at theta(0) | "random"
  long mlp_max_steps = 5000;

  int n_runs = 10;
};

// Seeds for independent experimental run k: the dataset stays fixed, the
// initializations move.
TrainConfig with_run_seed(const TrainConfig& base, int run);

struct ThetaStepRecord {
  long step = 0;                     // global gradient-step index
  double theta_disagreement = 0.0;   // max pairwise ||theta_i - theta_j||
  std::vector<double> agent_losses;  // local losses at the current iterates
};

struct RunHistory {
  std::vector<ConsensusRoundRecord> matrix_rounds;  // global s index
  std::vector<ThetaStepRecord> theta_steps;
  int rounds_executed = 0;
  long theta_steps_executed = 0;
  bool converged = false;
  double wall_seconds = 0.0;  // not part of the deterministic surface
};

struct DdklResult {
  std::vector<KoopmanModel> models;  // one per agent
  RunHistory history;
};

// Full alternating run: outer_rounds x (matrix consensus with theta frozen,
// then mixed gradient steps on theta with each agent's M_i, C_i frozen),
// rebuilding data matrices and factorizations whenever theta changes. All
// agent-to-agent traffic goes through the bus (an internal one when bus is
// null). Stops early once every agent's local loss is below the threshold;
// otherwise finishes the budget with history.converged = false.
DdklResult run_ddkl_pt(const TrainConfig& cfg,
                       const std::vector<Segment>& segments, const Graph& g,
                       SyncBus* bus = nullptr);

struct DkoResult {
  KoopmanModel model;
  std::vector<double> loss_trace;  // loss before each update
  bool converged = false;
};

// Centralized baseline: joint Adam over (A, B, C, theta) on the training
// slice [0, train_end], same initial theta, rate, and stopping rule.
DkoResult train_dko_centralized(const Trajectory& traj, const TrainConfig& cfg);

// One-hidden-layer ReLU net mapping [v; u] in R^5 to v(t+1) in R^3.
struct MlpBaselineModel {
  MlpParams net;
  Scaler scaler{};  // applied to the velocity part of the input
};

Eigen::Vector3d mlp_predict(const MlpBaselineModel& model,
                            const Eigen::Vector3d& v, const Eigen::Vector2d& u);

void save_mlp_baseline(const std::string& path, const MlpBaselineModel& model,
                       const std::string& config_hash);
MlpBaselineModel load_mlp_baseline(const std::string& path);

struct MlpBaselineResult {
  MlpBaselineModel model;
  std::vector<double> loss_trace;
  bool converged = false;
};

// Direct one-step predictor baseline, loss (1/T) sum ||net([v;u]) - v+||^2
// (plain mean, no 1/2), Adam at the shared rate.
MlpBaselineResult train_mlp_baseline(const Trajectory& traj,
                                     const TrainConfig& cfg);

using Predictor =
    std::function<Eigen::Vector3d(const Eigen::Vector3d&, const Eigen::Vector2d&)>;

Predictor koopman_predictor(KoopmanModel model);
Predictor mlp_predictor(MlpBaselineModel model);

struct MetricsRow {
  std::string method;
  int run = 0;
  double metric = 0.0;
};

struct MetricsSummary {
  std::string method;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation across runs
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
  std::vector<MetricsSummary> summaries;
  double zero_predictor = 0.0;  // mean squared norm of test velocities
};

// One-step prediction error on transitions t in [t_begin, t_end):
// per run, the squared error averaged over all predictors (agents) and all
// transitions; summaries aggregate across runs. `methods` maps a method name
// to its per-run predictor sets.
MetricsReport evaluate_metrics(
    const std::vector<std::pair<std::string, std::vector<std::vector<Predictor>>>>&
        methods,
    const Trajectory& traj, int t_begin, int t_end);

// CSV: per-run rows `method,run,metric,` then one summary row per method
// `method,mean,<mean>,<stddev>`; the zero-predictor reference goes into a
// comment header.
void write_metrics_csv(const std::string& path, const MetricsReport& report,
                       const std::string& config_hash);
MetricsReport read_metrics_csv(const std::string& path);

// CSV: `step,theta_disagreement,mean_local_loss,loss_agent1..N`.
void write_theta_history_csv(const std::string& path,
                             const std::vector<ThetaStepRecord>& records,
                             const std::string& config_hash);

// CSV: `step,loss` (baseline training traces).
void write_loss_trace_csv(const std::string& path,
                          const std::vector<double>& trace,
                          const std::string& config_hash);

}  // namespace ddkl

// Acceptance gate: ten end-to-end checks with pinned tolerances, printed as
// one [PASS]/[FAIL] line each plus a closing summary. Exit code 0 only if
// every check passes. Expensive artifacts (the default five-agent training
// run) are computed once and reused by the later checks.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ddkl/config.hpp"
#include "ddkl/consensus.hpp"
#include "ddkl/errors.hpp"
#include "ddkl/graph.hpp"
#include "ddkl/koopman.hpp"
#include "ddkl/lift.hpp"
#include "ddkl/message_bus.hpp"
#include "ddkl/mpc.hpp"
#include "ddkl/rng.hpp"
#include "ddkl/train.hpp"
#include "ddkl/vessel.hpp"

using namespace ddkl;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int id = 0;
  bool pass = false;
  std::string label;
  std::string detail;
  double seconds = 0.0;
};

std::vector<Outcome> g_outcomes;

void report(int id, const std::string& label, bool pass,
            const std::string& detail, double seconds) {
  g_outcomes.push_back({id, pass, label, detail, seconds});
  std::printf("[%s] %02d %s: %s (%.1f s)\n", pass ? "PASS" : "FAIL", id,
              label.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
}

class Timer {
 public:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// least-squares line through (x, y); returns {slope, r_squared}
std::pair<double, double> line_fit(const std::vector<double>& x,
                                   const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
    syy += y[k] * y[k];
  }
  const double cov = n * sxy - sx * sy;
  const double vx = n * sxx - sx * sx;
  const double vy = n * syy - sy * sy;
  return {cov / vx, cov * cov / (vx * vy)};
}

Eigen::MatrixXd randn(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = rng.normal();
  return out;
}

double max_rel_pairwise(const std::vector<Eigen::MatrixXd>& xs) {
  double norm = 0.0, dis = 0.0;
  for (const auto& x : xs) norm = std::max(norm, x.norm());
  for (size_t i = 0; i < xs.size(); ++i)
    for (size_t j = i + 1; j < xs.size(); ++j)
      dis = std::max(dis, (xs[i] - xs[j]).norm());
  return norm > 0.0 ? dis / norm : dis;
}

// Everything the checks share: the default experiment and its training run.
struct Shared {
  ExperimentConfig cfg;
  Trajectory traj;
  std::vector<Segment> segments;
  Graph ring;
  std::vector<double> consensus_history;  // per-round M disagreement (checks 1-2)
  DdklResult run0;                        // default run, seed offset 0 (checks 5-8)
};

// ---------------------------------------------------------------------------
// 1 + 2: matrix consensus against the pooled least-squares oracle, plus the
// exponential-decay shape of its disagreement curve. Segment width 160 keeps
// the data-fit curvature small enough relative to the ring coupling that the
// geometric decay neither stalls above the tolerance by round 5000 nor hits
// the numerical floor inside the round-[100,2000] fit window.

void check_consensus_oracle(Shared& sh) {
  Timer t;
  const auto& cfg = sh.cfg;
  const MlpParams theta0 =
      init_params(cfg.theta.theta_seed, 3, cfg.lift.hidden, cfg.lift.r);

  std::vector<std::pair<int, int>> intervals;
  for (int i = 0; i < 5; ++i) intervals.push_back({i * 160, (i + 1) * 160});
  const auto segments = partition_trajectory(sh.traj, intervals);

  std::vector<DataMatrices> dm;
  dm.reserve(segments.size());
  for (const auto& seg : segments)
    dm.push_back(build_data_matrices(seg, theta0, Scaler{}));

  const ConsensusWeights w = uniform_consensus_weights(sh.ring);
  std::vector<MatrixConsensusState> st;
  for (int i = 0; i < sh.ring.n_agents; ++i)
    st.push_back(build_consensus_state(
        dm[i], cfg.consensus.c, w.d(i),
        Rng(cfg.theta.matrix_seed).fork(static_cast<std::uint64_t>(i))));

  const auto [Mstar, Cstar] = centralized_ls_oracle(dm, "uniform");

  const int S = 5000;
  sh.consensus_history.reserve(S);
  for (int s = 0; s < S; ++s) {
    matrix_update_round(st, sh.ring, w);
    sh.consensus_history.push_back(disagreement(st).first);
  }

  double errM = 0.0, errC = 0.0;
  for (const auto& sti : st) {
    errM = std::max(errM, (sti.M() - Mstar).norm() / Mstar.norm());
    errC = std::max(errC, (sti.C() - Cstar).norm() / Cstar.norm());
  }

  const double secs = t.elapsed();
  const bool pass = errM <= 1e-5 && errC <= 1e-5 && secs < 30.0;
  report(1, "matrix consensus reaches the pooled least-squares solution",
         pass,
         "after 5000 rounds on the 5-ring: max rel err M " + fmt(errM) +
             ", C " + fmt(errC) + " (tol 1e-5), runtime limit 30 s",
         secs);

  // the same run's disagreement curve must look like a decaying exponential
  Timer t2;
  std::vector<double> xs, ys;
  for (int s = 100; s <= 2000; ++s) {
    if (sh.consensus_history[s] > 0.0) {
      xs.push_back(static_cast<double>(s));
      ys.push_back(std::log(sh.consensus_history[s]));
    }
  }
  const auto [slope, r2] = line_fit(xs, ys);
  const bool pass2 = slope < 0.0 && r2 >= 0.9 && xs.size() >= 1800;
  report(2, "consensus disagreement decays log-linearly over rounds 100-2000",
         pass2,
         "slope " + fmt(slope) + " (< 0), R^2 " + fmt(r2) + " (>= 0.9), " +
             std::to_string(xs.size()) + " points",
         t2.elapsed());
}

// ---------------------------------------------------------------------------
// 3: analytic gradients against central finite differences, for the lifting
// loss and for the one-step baseline network.

struct FdStats {
  int checked = 0;
  int failed = 0;
  double worst = 0.0;
};

void fd_compare(double analytic, double numeric, FdStats& stats) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  const double rel = std::abs(analytic - numeric) / denom;
  stats.worst = std::max(stats.worst, rel);
  if (rel > 1e-4) ++stats.failed;
  ++stats.checked;
}

// smallest |pre-activation| over a batch; used to reject instances where a
// finite-difference step could cross a ReLU kink
double min_preactivation(const MlpParams& theta, const Eigen::MatrixXd& V) {
  if (V.cols() == 0) return 1.0;
  return mlp_forward(theta, V).Z.cwiseAbs().minCoeff();
}

void check_gradients() {
  Timer t;
  const double h = 1e-5;
  FdStats lift_stats, mlp_stats;
  Rng rng(321);

  for (int inst = 0; inst < 10; ++inst) {
    const int hidden = 16, r = 8, n = 3, m = 2;
    const int T = 1 + inst % 8;

    MlpParams theta;
    Eigen::MatrixXd X, Xbar, U;
    do {
      theta = MlpParams::unflatten(
          0.5 * randn(rng, hidden * n + hidden + r * hidden + r, 1), n, hidden, r);
      X = randn(rng, n, T);
      Xbar = randn(rng, n, T);
      U = randn(rng, m, T);
    } while (std::min(min_preactivation(theta, X),
                      min_preactivation(theta, Xbar)) < 1e-3);
    const Eigen::MatrixXd M = 0.3 * randn(rng, r, r + m);
    const Eigen::MatrixXd C = 0.3 * randn(rng, n, r);

    const LossGrad lg = loss_and_grad(theta, M, C, X, Xbar, U);
    const Eigen::VectorXd flat = theta.flatten();
    const int p = static_cast<int>(flat.size());

    for (int probe = 0; probe < 50; ++probe) {
      const int k =
          static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(p));
      auto loss_at = [&](double delta) {
        Eigen::VectorXd f2 = flat;
        f2(k) += delta;
        return loss_and_grad(MlpParams::unflatten(f2, n, hidden, r), M, C, X,
                             Xbar, U)
            .loss;
      };
      fd_compare(lg.grad(k), (loss_at(h) - loss_at(-h)) / (2.0 * h),
                 lift_stats);
    }
  }

  // the baseline net's objective: mean squared one-step error, no 1/2
  for (int inst = 0; inst < 10; ++inst) {
    const int hidden = 16, in = 5, out = 3;
    const int T = 1 + inst % 8;

    MlpParams net;
    Eigen::MatrixXd Vin, Y;
    do {
      net = MlpParams::unflatten(
          0.5 * randn(rng, hidden * in + hidden + out * hidden + out, 1), in,
          hidden, out);
      Vin = randn(rng, in, T);
      Y = randn(rng, out, T);
    } while (min_preactivation(net, Vin) < 1e-3);

    auto objective = [&](const MlpParams& params) {
      return (mlp_forward(params, Vin).out - Y).squaredNorm() / T;
    };
    const MlpForward fwd = mlp_forward(net, Vin);
    const Eigen::MatrixXd S = (2.0 / T) * (fwd.out - Y);
    const Eigen::VectorXd grad = mlp_backward(net, Vin, fwd, S);
    const Eigen::VectorXd flat = net.flatten();
    const int p = static_cast<int>(flat.size());

    for (int probe = 0; probe < 50; ++probe) {
      const int k =
          static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(p));
      auto loss_at = [&](double delta) {
        Eigen::VectorXd f2 = flat;
        f2(k) += delta;
        return objective(MlpParams::unflatten(f2, in, hidden, out));
      };
      fd_compare(grad(k), (loss_at(h) - loss_at(-h)) / (2.0 * h), mlp_stats);
    }
  }

  const double secs = t.elapsed();
  const bool pass = lift_stats.failed == 0 && mlp_stats.failed == 0 &&
                    lift_stats.checked >= 500 && mlp_stats.checked >= 500 &&
                    secs < 10.0;
  report(3, "analytic gradients match central finite differences", pass,
         std::to_string(lift_stats.checked) + " lift + " +
             std::to_string(mlp_stats.checked) +
             " baseline coordinates, worst rel err " +
             fmt(std::max(lift_stats.worst, mlp_stats.worst)) +
             " (tol 1e-4), runtime limit 10 s",
         secs);
}

// ---------------------------------------------------------------------------
// 4: with one agent the distributed run must reduce, bitwise, to plain
// centralized alternation (consensus with itself, then gradient steps).

void check_single_agent_reduction(const Shared& sh) {
  Timer t;
  TrainConfig cfg;
  cfg.r = 8;
  cfg.hidden = 64;
  cfg.outer_rounds = 4;
  cfg.matrix_rounds = 60;
  cfg.theta_rounds = 40;
  cfg.threshold = 1e-30;
  cfg.theta_seed = 77;
  cfg.matrix_seed = 13;

  const auto segments = partition_trajectory(sh.traj, {{0, 400}});
  const Graph g1 = build_graph(1, {});
  const DdklResult run = run_ddkl_pt(cfg, segments, g1);

  // replay as a centralized loop through the same public primitives
  std::vector<double> matrix_losses, theta_losses;
  MlpParams params = init_params(cfg.theta_seed, cfg.n, cfg.hidden, cfg.r);
  Eigen::VectorXd th = params.flatten();
  AdamState adam = AdamState::init(static_cast<int>(th.size()), cfg.alpha);
  DataMatrices dm;
  MatrixConsensusState st;
  Eigen::MatrixXd Mi, Ci;
  for (int round = 0; round < cfg.outer_rounds; ++round) {
    dm = build_data_matrices(segments[0], params, cfg.scaler);
    if (round == 0)
      st = build_consensus_state(dm, cfg.c, 1.0, Rng(cfg.matrix_seed).fork(0));
    else
      st.rebuild(dm);
    for (int s = 0; s < cfg.matrix_rounds; ++s) {
      const MatrixShare share = st.share();
      matrix_consensus_step(st, {&share}, {1.0});
      matrix_losses.push_back(cached_local_loss(st));
    }
    Mi = st.M();
    Ci = st.C();
    for (int s = 0; s < cfg.theta_rounds; ++s) {
      const LossGrad lg = loss_and_grad(params, Mi, Ci, dm.X, dm.Xbar, dm.U);
      theta_losses.push_back(lg.loss);
      const Eigen::VectorXd dir = adam_direction(adam, lg.grad);
      Eigen::VectorXd mixed = 1.0 * th;
      mixed -= 1.0 * dir;
      th = std::move(mixed);
      params = MlpParams::unflatten(th, cfg.n, cfg.hidden, cfg.r);
    }
  }

  long mismatches = 0;
  const auto& hist = run.history;
  if (hist.matrix_rounds.size() != matrix_losses.size() ||
      hist.theta_steps.size() != theta_losses.size()) {
    mismatches = -1;
  } else {
    for (size_t k = 0; k < matrix_losses.size(); ++k)
      if (hist.matrix_rounds[k].mean_local_loss != matrix_losses[k])
        ++mismatches;
    for (size_t k = 0; k < theta_losses.size(); ++k)
      if (hist.theta_steps[k].agent_losses[0] != theta_losses[k]) ++mismatches;
    if (run.models[0].theta.flatten() != th) ++mismatches;
    if (run.models[0].A != Mi.leftCols(cfg.r)) ++mismatches;
    if (run.models[0].B != Mi.rightCols(cfg.m)) ++mismatches;
    if (run.models[0].C != Ci) ++mismatches;
  }

  const bool pass = mismatches == 0;
  report(4, "a single-agent run is bitwise a centralized alternation", pass,
         mismatches == 0
             ? std::to_string(matrix_losses.size()) + " + " +
                   std::to_string(theta_losses.size()) +
                   " loss-trace entries identical, final model identical"
             : (mismatches < 0 ? "trace lengths differ"
                               : std::to_string(mismatches) +
                                     " trace entries differ"),
         t.elapsed());
}

// ---------------------------------------------------------------------------
// 5: the full default run ends in consensus (relative disagreements).

void check_default_run_consensus(Shared& sh) {
  Timer t;
  const TrainConfig base = sh.cfg.train_config();
  sh.run0 = run_ddkl_pt(with_run_seed(base, 0), sh.segments, sh.ring);
  const double secs = t.elapsed();

  std::vector<Eigen::MatrixXd> Ms, Cs, thetas;
  for (const auto& model : sh.run0.models) {
    Eigen::MatrixXd M(model.A.rows(), model.A.cols() + model.B.cols());
    M << model.A, model.B;
    Ms.push_back(std::move(M));
    Cs.push_back(model.C);
    thetas.push_back(model.theta.flatten());
  }
  const double disM = max_rel_pairwise(Ms);
  const double disC = max_rel_pairwise(Cs);
  const double disT = max_rel_pairwise(thetas);

  const bool pass =
      disM <= 1e-3 && disC <= 1e-3 && disT <= 1e-3 && secs < 300.0;
  report(5, "the default run ends in consensus across agents", pass,
         "rel disagreement M " + fmt(disM) + ", C " + fmt(disC) + ", theta " +
             fmt(disT) + " (tol 1e-3); " +
             std::to_string(sh.run0.history.rounds_executed) + " rounds, " +
             std::to_string(sh.run0.history.theta_steps_executed) +
             " theta steps, converged " +
             (sh.run0.history.converged ? "yes" : "no") +
             ", runtime limit 300 s",
         secs);
}

// ---------------------------------------------------------------------------
// 6: prediction quality across 3 seeded runs, against the centralized
// baseline and the constant-zero predictor.

void check_prediction_quality(Shared& sh) {
  Timer t;
  const TrainConfig base = sh.cfg.train_config();

  std::vector<std::vector<Predictor>> ddkl_runs, dko_runs;
  for (int run = 0; run < 3; ++run) {
    const TrainConfig rc = with_run_seed(base, run);
    const std::vector<KoopmanModel>* models;
    DdklResult fresh;
    if (run == 0) {
      models = &sh.run0.models;
    } else {
      fresh = run_ddkl_pt(rc, sh.segments, sh.ring);
      models = &fresh.models;
    }
    std::vector<Predictor> preds;
    for (const auto& model : *models) preds.push_back(koopman_predictor(model));
    ddkl_runs.push_back(std::move(preds));

    const DkoResult dko = train_dko_centralized(sh.traj, rc);
    dko_runs.push_back({koopman_predictor(dko.model)});
  }

  const MetricsReport report_metrics = evaluate_metrics(
      {{"ddkl-pt", ddkl_runs}, {"dko", dko_runs}}, sh.traj,
      sh.cfg.data.train_end, sh.cfg.data.test_end);

  double mean_ddkl = 0.0, mean_dko = 0.0;
  for (const auto& s : report_metrics.summaries) {
    if (s.method == "ddkl-pt") mean_ddkl = s.mean;
    if (s.method == "dko") mean_dko = s.mean;
  }
  const double zero = report_metrics.zero_predictor;
  const double ratio = mean_ddkl / mean_dko;

  const bool pass = mean_ddkl <= 2.0 * mean_dko && mean_ddkl <= 0.2 * zero &&
                    mean_dko <= 0.2 * zero;
  report(6, "distributed accuracy tracks the centralized baseline", pass,
         "mean one-step error over 3 runs: distributed " + fmt(mean_ddkl) +
             ", centralized " + fmt(mean_dko) + " (ratio " + fmt(ratio) +
             ", tol 2.0); zero-predictor " + fmt(zero) +
             " (both must be <= 20%)",
         t.elapsed());
}

// ---------------------------------------------------------------------------
// 7 + 8: closed-loop control with every agent's learned model.

void check_goal_tracking(const Shared& sh) {
  Timer t;
  const auto& mpc = sh.cfg.mpc;
  bool all_ok = true;
  double worst_pos = 0.0, worst_yaw = 0.0, worst_secs = 0.0;
  int worst_steps = 0;
  std::string note;

  for (size_t a = 0; a < sh.run0.models.size(); ++a) {
    Timer ta;
    try {
      const ClosedLoopTrace trace =
          run_closed_loop(sh.cfg.vessel, sh.run0.models[a], mpc.x0, mpc.goal,
                          mpc.solver, mpc.max_steps, 0.5, 0.1);
      const double secs = ta.elapsed();
      const bool ok = trace.err_pos.back() < 0.5 &&
                      trace.err_yaw.back() < 0.1 && trace.steps() <= 500 &&
                      secs < 180.0;
      all_ok = all_ok && ok;
      worst_pos = std::max(worst_pos, trace.err_pos.back());
      worst_yaw = std::max(worst_yaw, trace.err_yaw.back());
      worst_steps = std::max(worst_steps, trace.steps());
      worst_secs = std::max(worst_secs, secs);
    } catch (const std::exception& e) {
      all_ok = false;
      note = std::string("; agent ") + std::to_string(a + 1) +
             " failed: " + e.what();
      break;
    }
  }

  report(7, "every agent's model drives the vessel to the goal pose", all_ok,
         "worst terminal pos err " + fmt(worst_pos) + " m (< 0.5), yaw err " +
             fmt(worst_yaw) + " rad (< 0.1), steps " +
             std::to_string(worst_steps) + " (<= 500), slowest agent " +
             fmt(worst_secs) + " s (< 180)" + note,
         t.elapsed());
}

void check_station_keeping(const Shared& sh) {
  Timer t;
  const auto& mpc = sh.cfg.mpc;
  bool pass = false;
  std::string detail;
  try {
    const ClosedLoopTrace trace =
        run_closed_loop(sh.cfg.vessel, sh.run0.models[0], mpc.x0, mpc.x0,
                        mpc.solver, 500);
    double max_err = 0.0;
    for (double e : trace.err_pos) max_err = std::max(max_err, e);
    pass = trace.steps() == 500 && max_err <= 0.5;
    detail = "max position drift " + fmt(max_err) + " m over " +
             std::to_string(trace.steps()) + " steps (tol 0.5 m)";
  } catch (const std::exception& e) {
    detail = std::string("solver failed: ") + e.what();
  }
  report(8, "station keeping holds the pose for 500 steps", pass, detail,
         t.elapsed());
}

// ---------------------------------------------------------------------------
// 9: privacy audit. The payload type admits exactly two alternatives, and a
// fully observed run carries nothing across agent boundaries but those
// operator/parameter shares with their expected shapes.

static_assert(std::variant_size_v<SharePayload> == 2,
              "inter-agent payload surface changed");
static_assert(std::is_same_v<std::variant_alternative_t<0, SharePayload>,
                             MatrixShare>);
static_assert(std::is_same_v<std::variant_alternative_t<1, SharePayload>,
                             ThetaShare>);

void check_privacy(const Shared& sh) {
  Timer t;
  TrainConfig cfg;
  cfg.r = 4;
  cfg.hidden = 8;
  cfg.outer_rounds = 2;
  cfg.matrix_rounds = 5;
  cfg.theta_rounds = 4;
  cfg.threshold = 1e-30;

  const auto segments = partition_trajectory(
      sh.traj, {{0, 30}, {30, 60}, {60, 90}, {90, 120}, {120, 150}});
  const Graph g = sh.cfg.build_graph();
  const int theta_dim = cfg.hidden * 3 + cfg.hidden + cfg.r * cfg.hidden + cfg.r;

  long matrix_msgs = 0, theta_msgs = 0, violations = 0;
  SyncBus bus(g);
  bus.set_observer([&](const Envelope& env) {
    // only graph neighbors (self included) may be heard from
    bool neighbor = false;
    for (int j : g.neighbors[env.to]) neighbor = neighbor || j == env.from;
    if (!neighbor) ++violations;

    if (const auto* share = std::get_if<MatrixShare>(env.payload)) {
      ++matrix_msgs;
      if (share->Mt.rows() != cfg.r + 2 || share->Mt.cols() != cfg.r ||
          share->E.rows() != share->Mt.rows() ||
          share->Ct.rows() != cfg.r || share->Ct.cols() != 3 ||
          share->Ehat.rows() != share->Ct.rows())
        ++violations;
    } else if (const auto* ts = std::get_if<ThetaShare>(env.payload)) {
      ++theta_msgs;
      if (ts->theta.size() != theta_dim) ++violations;
    } else {
      ++violations;
    }
  });

  run_ddkl_pt(cfg, segments, g, &bus);

  // ring of five with self-arcs: 15 deliveries per synchronous round
  const long expect_matrix = 2L * 5 * 15;
  const long expect_theta = 2L * 4 * 15;
  const bool pass = violations == 0 && matrix_msgs == expect_matrix &&
                    theta_msgs == expect_theta;
  report(9, "agents exchange operator and parameter shares only", pass,
         std::to_string(matrix_msgs) + " matrix + " +
             std::to_string(theta_msgs) +
             " parameter messages observed, every payload one of the two "
             "share types with operator shapes, " +
             std::to_string(violations) + " violations",
         t.elapsed());
}

// ---------------------------------------------------------------------------
// 10: the module property suites themselves.

void check_property_suites(const char* argv0) {
  Timer t;
  const fs::path self = fs::weakly_canonical(fs::path(argv0));
  const fs::path unit = self.parent_path() / "unit_tests";
  if (!fs::exists(unit)) {
    report(10, "module property suites pass within budget", false,
           "unit_tests binary not found at " + unit.string(), t.elapsed());
    return;
  }
  const std::string cmd = "\"" + unit.string() + "\" > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  const double secs = t.elapsed();
  report(10, "module property suites pass within budget", rc == 0 && secs < 60.0,
         std::string("unit suite exit ") + std::to_string(rc) +
             ", runtime limit 60 s",
         secs);
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) fs::create_directories(argv[1]);
  Timer total;

  Shared sh;
  sh.cfg = ExperimentConfig{};
  sh.traj = generate_trajectory(sh.cfg.vessel, sh.cfg.data.seed, sh.cfg.data.T,
                                sh.cfg.data.dt, sh.cfg.data.sigma,
                                sh.cfg.data.hold);
  sh.segments = partition_trajectory(sh.traj, sh.cfg.data.intervals);
  sh.ring = sh.cfg.build_graph();

  auto guarded = [](int id, const char* label, auto&& body) {
    Timer t;
    try {
      body();
    } catch (const std::exception& e) {
      report(id, label, false, std::string("exception: ") + e.what(),
             t.elapsed());
    }
  };

  guarded(1, "matrix consensus reaches the pooled least-squares solution",
          [&] { check_consensus_oracle(sh); });
  guarded(3, "analytic gradients match central finite differences",
          [&] { check_gradients(); });
  guarded(4, "a single-agent run is bitwise a centralized alternation",
          [&] { check_single_agent_reduction(sh); });
  guarded(9, "agents exchange operator and parameter shares only",
          [&] { check_privacy(sh); });
  guarded(10, "module property suites pass within budget",
          [&] { check_property_suites(argv[0]); });
  guarded(5, "the default run ends in consensus across agents",
          [&] { check_default_run_consensus(sh); });
  guarded(6, "distributed accuracy tracks the centralized baseline",
          [&] { check_prediction_quality(sh); });
  guarded(7, "every agent's model drives the vessel to the goal pose",
          [&] { check_goal_tracking(sh); });
  guarded(8, "station keeping holds the pose for 500 steps",
          [&] { check_station_keeping(sh); });

  // every id 1..10 must have reported, even through exception paths
  for (int id = 1; id <= 10; ++id) {
    bool seen = false;
    for (const auto& o : g_outcomes) seen = seen || o.id == id;
    if (!seen)
      g_outcomes.push_back({id, false, "criterion never reported",
                            "aborted before reporting", 0.0});
  }

  std::sort(g_outcomes.begin(), g_outcomes.end(),
            [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
  int passed = 0;
  std::printf("\n---- acceptance summary ----\n");
  for (const auto& o : g_outcomes) {
    std::printf("[%s] %02d %s\n", o.pass ? "PASS" : "FAIL", o.id,
                o.label.c_str());
    passed += o.pass ? 1 : 0;
  }
  std::printf("%d/%d criteria passed, %.0f s total\n", passed,
              static_cast<int>(g_outcomes.size()), total.elapsed());
  return passed == static_cast<int>(g_outcomes.size()) ? 0 : 1;
}

#include "ddkl/mpc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

#include "ddkl/errors.hpp"
#include "ddkl/io.hpp"

namespace ddkl {

namespace {

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

}  // namespace

void MpcConfig::validate() const {
  if (horizon < 1) throw ConfigError("mpc.horizon", "must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("mpc.dt", "must be > 0");
  if (q.size() != 6 || (q.array() < 0.0).any())
    throw ConfigError("mpc.q", "needs 6 nonnegative stage weights");
  if (qf.size() != 6 || (qf.array() < 0.0).any())
    throw ConfigError("mpc.qf", "needs 6 nonnegative terminal weights");
  if ((r_weights.array() < 0.0).any())
    throw ConfigError("mpc.r", "input weights must be nonnegative");
  if (!(u_min < u_max)) throw ConfigError("mpc.u_box", "requires u_min < u_max");
  if (samples < 2) throw ConfigError("mpc.samples", "must be >= 2");
  if (elites < 1 || elites > samples)
    throw ConfigError("mpc.elites", "must be in [1, samples]");
  if (iterations < 1) throw ConfigError("mpc.iterations", "must be >= 1");
  if (!(init_std > 0.0)) throw ConfigError("mpc.init_std", "must be > 0");
  if (!(min_std >= 0.0)) throw ConfigError("mpc.min_std", "must be >= 0");
}

Vector6d combined_step(const KoopmanModel& model, const Vector6d& x,
                       const Eigen::Vector2d& u, double dt) {
  const Eigen::Vector3d v_next = predict_next(model, x.tail<3>(), u);
  const double c = std::cos(x(2)), s = std::sin(x(2));
  Eigen::Vector3d pdot(c * v_next(0) - s * v_next(1),
                       s * v_next(0) + c * v_next(1), v_next(2));
  Vector6d out;
  out.head<3>() = x.head<3>() + dt * pdot;
  out.tail<3>() = v_next;
  if (!out.allFinite())
    throw NonFiniteState("combined_step produced a non-finite state");
  return out;
}

Eigen::MatrixXd combined_step_batch(const KoopmanModel& model,
                                    const Eigen::MatrixXd& X,
                                    const Eigen::MatrixXd& U, double dt) {
  const Eigen::MatrixXd Vn = predict_batch(model, X.bottomRows(3), U);
  const Eigen::ArrayXd c = X.row(2).transpose().array().cos();
  const Eigen::ArrayXd s = X.row(2).transpose().array().sin();
  const Eigen::ArrayXd vx = Vn.row(0).transpose().array();
  const Eigen::ArrayXd vy = Vn.row(1).transpose().array();

  Eigen::MatrixXd out(6, X.cols());
  out.row(0) = X.row(0).transpose().array() + dt * (c * vx - s * vy);
  out.row(1) = X.row(1).transpose().array() + dt * (s * vx + c * vy);
  out.row(2) = X.row(2).transpose().array() + dt * Vn.row(2).transpose().array();
  out.bottomRows(3) = Vn;
  return out;  // columns may go non-finite; callers mask by cost
}

namespace {

// Stage-cost accumulation shared by the scalar and batched paths.
void add_state_cost(const Eigen::MatrixXd& X, const Vector6d& goal,
                    const Eigen::VectorXd& weights, bool wrap,
                    Eigen::VectorXd& cost) {
  Eigen::MatrixXd DX = X.colwise() - goal;
  if (wrap)
    DX.row(2) = DX.row(2).unaryExpr([](double a) { return wrap_angle(a); });
  cost.noalias() += DX.array().square().matrix().transpose() * weights;
}

}  // namespace

double trajectory_cost(const KoopmanModel& model, const Vector6d& x0,
                       const Eigen::MatrixXd& inputs, const Vector6d& goal,
                       const MpcConfig& cfg) {
  if (inputs.rows() != 2 || inputs.cols() < 1)
    throw ConfigError("mpc.inputs", "expected a 2 x K input sequence");
  if ((inputs.array() < cfg.u_min - 1e-12).any() ||
      (inputs.array() > cfg.u_max + 1e-12).any())
    throw ConfigError("mpc.inputs", "input sequence violates the input box");

  double cost = 0.0;
  Vector6d x = x0;
  for (Eigen::Index k = 0; k < inputs.cols(); ++k) {
    Vector6d dx = x - goal;
    if (cfg.wrap_yaw) dx(2) = wrap_angle(dx(2));
    const Eigen::Vector2d u = inputs.col(k);
    cost += dx.cwiseProduct(cfg.q.cwiseProduct(dx)).sum() +
            u.cwiseProduct(cfg.r_weights.cwiseProduct(u)).sum();
    x = combined_step(model, x, u, cfg.dt);
  }
  Vector6d dx = x - goal;
  if (cfg.wrap_yaw) dx(2) = wrap_angle(dx(2));
  cost += dx.cwiseProduct(cfg.qf.cwiseProduct(dx)).sum();
  if (!std::isfinite(cost))
    throw NonFiniteState("trajectory_cost is non-finite");
  return cost;
}

MpcSolution solve_mpc(const KoopmanModel& model, const Vector6d& x,
                      const Vector6d& goal, const MpcConfig& cfg, Rng& rng,
                      const Eigen::MatrixXd* warm_start) {
  cfg.validate();
  const int K = cfg.horizon;
  const int M = cfg.samples;
  const double inf = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(2, K);
  if (warm_start) {
    if (warm_start->rows() != 2 || warm_start->cols() != K)
      throw ConfigError("mpc.warm_start", "expected a 2 x K sequence");
    mean = warm_start->cwiseMax(cfg.u_min).cwiseMin(cfg.u_max);
  }
  Eigen::MatrixXd stddev = Eigen::MatrixXd::Constant(2, K, cfg.init_std);

  MpcSolution sol;
  Eigen::MatrixXd samples(2 * K, M);
  std::vector<int> order(M);
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    for (int sidx = 0; sidx < M; ++sidx)
      for (int k = 0; k < K; ++k)
        for (int d = 0; d < 2; ++d)
          samples(2 * k + d, sidx) =
              std::clamp(mean(d, k) + stddev(d, k) * rng.normal(), cfg.u_min,
                         cfg.u_max);

    Eigen::VectorXd cost = Eigen::VectorXd::Zero(M);
    Eigen::MatrixXd X = x.replicate(1, M);
    for (int k = 0; k < K; ++k) {
      const Eigen::MatrixXd Uk = samples.middleRows(2 * k, 2);
      add_state_cost(X, goal, cfg.q, cfg.wrap_yaw, cost);
      cost.noalias() += Uk.array().square().matrix().transpose() * cfg.r_weights;
      X = combined_step_batch(model, X, Uk, cfg.dt);
    }
    add_state_cost(X, goal, cfg.qf, cfg.wrap_yaw, cost);

    int n_finite = 0;
    for (int sidx = 0; sidx < M; ++sidx) {
      if (std::isfinite(cost(sidx)))
        ++n_finite;
      else
        cost(sidx) = inf;
    }
    if (n_finite == 0)
      throw SolverDegenerate("every sampled input sequence diverged");

    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return cost(a) < cost(b); });
    const int n_elite = std::min(cfg.elites, n_finite);

    double elite_mean_cost = 0.0;
    for (int e = 0; e < n_elite; ++e) elite_mean_cost += cost(order[e]);
    sol.elite_mean_costs.push_back(elite_mean_cost / n_elite);

    for (int k = 0; k < K; ++k) {
      for (int d = 0; d < 2; ++d) {
        double m1 = 0.0;
        for (int e = 0; e < n_elite; ++e) m1 += samples(2 * k + d, order[e]);
        m1 /= n_elite;
        double v = 0.0;
        for (int e = 0; e < n_elite; ++e) {
          const double dev = samples(2 * k + d, order[e]) - m1;
          v += dev * dev;
        }
        mean(d, k) = m1;
        stddev(d, k) = std::max(std::sqrt(v / n_elite), cfg.min_std);
      }
    }
  }

  sol.mean = mean;
  sol.u = mean.col(0);
  try {
    sol.predicted_cost = trajectory_cost(model, x, mean, goal, cfg);
  } catch (const NonFiniteState&) {
    // The refit mean can stray into a diverging region even when individual
    // elites were finite; fall back to the best finite sample.
    Eigen::MatrixXd best(2, K);
    for (int k = 0; k < K; ++k) best.col(k) = samples.middleRows(2 * k, 2).col(order[0]);
    sol.mean = best;
    sol.u = best.col(0);
    sol.predicted_cost = trajectory_cost(model, x, best, goal, cfg);
  }
  return sol;
}

ClosedLoopTrace run_closed_loop(const VesselParams& truth,
                                const KoopmanModel& model, const Vector6d& x0,
                                const Vector6d& goal, const MpcConfig& cfg,
                                int max_steps, double stop_pos_tol,
                                double stop_yaw_tol) {
  cfg.validate();
  truth.validate();
  if (max_steps < 1) throw ConfigError("mpc.max_steps", "must be >= 1");

  Rng rng(cfg.seed);
  ClosedLoopTrace trace;
  trace.dt = cfg.dt;

  auto record = [&](const Vector6d& xs) {
    trace.states.push_back(xs);
    const double ep = (xs.head<2>() - goal.head<2>()).norm();
    double ey = xs(2) - goal(2);
    if (cfg.wrap_yaw) ey = wrap_angle(ey);
    trace.err_pos.push_back(ep);
    trace.err_yaw.push_back(std::abs(ey));
  };

  VesselState s = VesselState::from_x6(x0);
  record(x0);
  const bool early_stop = stop_pos_tol >= 0.0 && stop_yaw_tol >= 0.0;

  Eigen::MatrixXd warm;
  bool have_warm = false;
  for (int step = 0; step < max_steps; ++step) {
    if (early_stop && trace.err_pos.back() < stop_pos_tol &&
        trace.err_yaw.back() < stop_yaw_tol)
      break;

    const auto t0 = std::chrono::steady_clock::now();
    MpcSolution sol;
    try {
      sol = solve_mpc(model, s.x6(), goal, cfg, rng,
                      have_warm ? &warm : nullptr);
    } catch (const SolverDegenerate&) {
      if (!have_warm) throw;
      have_warm = false;
      sol = solve_mpc(model, s.x6(), goal, cfg, rng, nullptr);
    }
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();

    s = step_truth(truth, s, sol.u, cfg.dt);

    const int K = cfg.horizon;
    warm.resize(2, K);
    if (K > 1) warm.leftCols(K - 1) = sol.mean.rightCols(K - 1);
    warm.col(K - 1) = sol.mean.col(K - 1);
    have_warm = true;

    trace.inputs.push_back(sol.u);
    trace.solve_ms.push_back(ms);
    trace.predicted_costs.push_back(sol.predicted_cost);
    record(s.x6());
  }
  return trace;
}

void write_trace_csv(const std::string& path, const ClosedLoopTrace& trace,
                     const std::string& config_hash) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  if (!config_hash.empty()) f << "# config_hash " << config_hash << "\n";
  f << "# dt " << io::fmt_g17(trace.dt) << "\n";
  f << "t,px,py,phi,vx,vy,dphi,u_left,u_right,err_pos,err_yaw,solve_ms\n";
  for (size_t t = 0; t < trace.states.size(); ++t) {
    const Vector6d& xs = trace.states[t];
    f << t;
    for (int k = 0; k < 6; ++k) f << ',' << io::fmt_g17(xs(k));
    if (t < trace.inputs.size()) {
      f << ',' << io::fmt_g17(trace.inputs[t](0)) << ','
        << io::fmt_g17(trace.inputs[t](1)) << ',' << io::fmt_g17(trace.err_pos[t])
        << ',' << io::fmt_g17(trace.err_yaw[t]) << ','
        << io::fmt_g17(trace.solve_ms[t]);
    } else {
      f << ",,," << io::fmt_g17(trace.err_pos[t]) << ',' << io::fmt_g17(trace.err_yaw[t])
        << ',';
    }
    f << "\n";
  }
  if (!f) throw IoError("failed writing " + path);
}

}  // namespace ddkl

#include "ddkl/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ddkl/errors.hpp"
#include "ddkl/io.hpp"
#include "ddkl/rng.hpp"

namespace ddkl {

namespace {

MixingWeights mixing_for(const TrainConfig& cfg, const Graph& g) {
  if (cfg.mixing == "metropolis") return metropolis_weights(g);
  if (cfg.mixing == "uniform-rows") return uniform_row_weights(g);
  throw ConfigError("train.mixing", "expected \"metropolis\" or \"uniform-rows\"");
}

void validate_train(const TrainConfig& cfg) {
  if (cfg.outer_rounds < 1) throw ConfigError("train.outer_rounds", "must be >= 1");
  if (cfg.matrix_rounds < 1) throw ConfigError("train.matrix_rounds", "must be >= 1");
  if (cfg.theta_rounds < 1) throw ConfigError("train.theta_rounds", "must be >= 1");
  if (!(cfg.threshold > 0.0)) throw ConfigError("train.threshold", "must be > 0");
  if (!(cfg.alpha > 0.0)) throw ConfigError("train.alpha", "must be > 0");
  if (cfg.theta_rule != "adam" && cfg.theta_rule != "subgradient")
    throw ConfigError("train.theta_rule", "expected \"adam\" or \"subgradient\"");
}

double max_pairwise_norm(const std::vector<Eigen::VectorXd>& xs) {
  double out = 0.0;
  for (size_t i = 0; i < xs.size(); ++i)
    for (size_t j = i + 1; j < xs.size(); ++j)
      out = std::max(out, (xs[i] - xs[j]).norm());
  return out;
}

Segment training_slice(const Trajectory& traj, const TrainConfig& cfg) {
  return partition_trajectory(traj, {{0, cfg.train_end}}).front();
}

}  // namespace

TrainConfig with_run_seed(const TrainConfig& base, int run) {
  TrainConfig out = base;
  out.theta_seed = base.theta_seed + static_cast<std::uint64_t>(run);
  out.matrix_seed = base.matrix_seed + static_cast<std::uint64_t>(run);
  return out;
}

DdklResult run_ddkl_pt(const TrainConfig& cfg,
                       const std::vector<Segment>& segments, const Graph& g,
                       SyncBus* bus) {
  validate_train(cfg);
  const int N = g.n_agents;
  if (static_cast<int>(segments.size()) != N)
    throw IndexOutOfRange("run_ddkl_pt: one segment per agent required");

  SyncBus local_bus(g);
  if (!bus) bus = &local_bus;

  const ConsensusWeights w = uniform_consensus_weights(g);
  const MixingWeights what = mixing_for(cfg, g);
  const bool use_adam = cfg.theta_rule == "adam";

  const MlpParams theta0 = init_params(cfg.theta_seed, cfg.n, cfg.hidden, cfg.r);
  std::vector<MlpParams> params(N, theta0);
  std::vector<Eigen::VectorXd> theta(N, theta0.flatten());
  const int dim = static_cast<int>(theta[0].size());

  std::vector<AdamState> adam;
  if (use_adam) adam.assign(N, AdamState::init(dim, cfg.alpha));

  std::vector<DataMatrices> dm(N);
  std::vector<MatrixConsensusState> st;
  std::vector<Eigen::MatrixXd> Mi(N), Ci(N);

  RunHistory hist;
  const auto t0 = std::chrono::steady_clock::now();
  long global_s = 0;
  bool converged = false;

  for (int round = 0; round < cfg.outer_rounds && !converged; ++round) {
    hist.rounds_executed = round + 1;
    for (int i = 0; i < N; ++i)
      dm[i] = build_data_matrices(segments[i], params[i], cfg.scaler);
    if (round == 0) {
      st.reserve(N);
      for (int i = 0; i < N; ++i)
        st.push_back(build_consensus_state(
            dm[i], cfg.c, w.d(i), Rng(cfg.matrix_seed).fork(static_cast<std::uint64_t>(i))));
    } else {
      for (int i = 0; i < N; ++i) st[i].rebuild(dm[i]);
    }

    Eigen::MatrixXd Mstar, Cstar;
    double Mstar_norm = 1.0, Cstar_norm = 1.0;
    if (cfg.log_oracle_dist) {
      std::tie(Mstar, Cstar) = centralized_ls_oracle(dm, cfg.loss_weighting);
      Mstar_norm = std::max(Mstar.norm(), 1e-300);
      Cstar_norm = std::max(Cstar.norm(), 1e-300);
    }

    for (int s = 0; s < cfg.matrix_rounds; ++s) {
      for (int i = 0; i < N; ++i) bus->post(i, SharePayload{st[i].share()});
      std::vector<std::vector<Envelope>> inbox(N);
      for (int i = 0; i < N; ++i) inbox[i] = bus->collect(i);
      for (int i = 0; i < N; ++i) {
        std::vector<const MatrixShare*> shares;
        std::vector<double> weights;
        shares.reserve(inbox[i].size());
        weights.reserve(inbox[i].size());
        for (const Envelope& env : inbox[i]) {
          shares.push_back(&std::get<MatrixShare>(*env.payload));
          weights.push_back(w.w(i, env.from));
        }
        matrix_consensus_step(st[i], shares, weights);
      }
      bus->end_round();

      ConsensusRoundRecord rec;
      rec.s = global_s++;
      std::tie(rec.disagreement_M, rec.disagreement_C) = disagreement(st);
      double mean_loss = 0.0;
      for (int i = 0; i < N; ++i) {
        mean_loss += cached_local_loss(st[i]);
        if (cfg.log_oracle_dist) {
          rec.dist_to_oracle_M = std::max(
              rec.dist_to_oracle_M, (st[i].M() - Mstar).norm() / Mstar_norm);
          rec.dist_to_oracle_C = std::max(
              rec.dist_to_oracle_C, (st[i].C() - Cstar).norm() / Cstar_norm);
        }
      }
      rec.mean_local_loss = mean_loss / N;
      hist.matrix_rounds.push_back(rec);
    }

    for (int i = 0; i < N; ++i) {
      Mi[i] = st[i].M();
      Ci[i] = st[i].C();
    }

    bool all_below = true;
    for (int i = 0; i < N; ++i)
      all_below = all_below && cached_local_loss(st[i]) < cfg.threshold;
    if (all_below) {
      converged = true;
      break;
    }

    for (int s = 0; s < cfg.theta_rounds; ++s) {
      if (hist.theta_steps_executed >= cfg.max_theta_steps) break;

      std::vector<LossGrad> lg(N);
      for (int i = 0; i < N; ++i)
        lg[i] = loss_and_grad(params[i], Mi[i], Ci[i], dm[i].X, dm[i].Xbar,
                              dm[i].U);

      ThetaStepRecord rec;
      rec.step = hist.theta_steps_executed;
      rec.theta_disagreement = max_pairwise_norm(theta);
      rec.agent_losses.resize(N);
      bool below = true;
      for (int i = 0; i < N; ++i) {
        rec.agent_losses[i] = lg[i].loss;
        below = below && lg[i].loss < cfg.threshold;
      }
      hist.theta_steps.push_back(rec);
      if (below) {
        converged = true;
        break;
      }

      std::vector<Eigen::VectorXd> dir(N);
      for (int i = 0; i < N; ++i)
        dir[i] = use_adam ? adam_direction(adam[i], lg[i].grad)
                          : Eigen::VectorXd(lg[i].grad);
      const double step_scale = use_adam ? 1.0 : cfg.alpha;

      for (int i = 0; i < N; ++i) bus->post(i, SharePayload{ThetaShare{theta[i]}});
      std::vector<std::vector<Envelope>> inbox(N);
      for (int i = 0; i < N; ++i) inbox[i] = bus->collect(i);
      std::vector<Eigen::VectorXd> next(N);
      for (int i = 0; i < N; ++i) {
        const auto& box = inbox[i];
        Eigen::VectorXd mixed =
            what.w_hat(i, box[0].from) * std::get<ThetaShare>(*box[0].payload).theta;
        for (size_t k = 1; k < box.size(); ++k)
          mixed.noalias() += what.w_hat(i, box[k].from) *
                             std::get<ThetaShare>(*box[k].payload).theta;
        mixed -= step_scale * dir[i];
        next[i] = std::move(mixed);
      }
      bus->end_round();

      theta = std::move(next);
      for (int i = 0; i < N; ++i)
        params[i] = MlpParams::unflatten(theta[i], cfg.n, cfg.hidden, cfg.r);
      ++hist.theta_steps_executed;
    }
  }

  hist.converged = converged;
  hist.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  DdklResult out;
  out.models.reserve(N);
  for (int i = 0; i < N; ++i) {
    KoopmanModel model;
    model.A = Mi[i].leftCols(cfg.r);
    model.B = Mi[i].rightCols(cfg.m);
    model.C = Ci[i];
    model.theta = params[i];
    model.scaler = cfg.scaler;
    out.models.push_back(std::move(model));
  }
  out.history = std::move(hist);
  return out;
}

DkoResult train_dko_centralized(const Trajectory& traj, const TrainConfig& cfg) {
  validate_train(cfg);
  const Segment seg = training_slice(traj, cfg);
  MlpParams params = init_params(cfg.theta_seed, cfg.n, cfg.hidden, cfg.r);
  const DataMatrices dm0 = build_data_matrices(seg, params, cfg.scaler);
  const int T = dm0.width();
  const int r = cfg.r, m = cfg.m, n = cfg.n;

  Eigen::MatrixXd M, C;
  if (cfg.dko_init == "ls") {
    std::tie(M, C) = centralized_ls_oracle({dm0}, "uniform");
  } else if (cfg.dko_init == "random") {
    Rng rng = Rng(cfg.matrix_seed).fork(0);
    M.resize(r, r + m);
    C.resize(n, r);
    for (Eigen::Index i = 0; i < M.rows(); ++i)
      for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = rng.normal();
    for (Eigen::Index i = 0; i < C.rows(); ++i)
      for (Eigen::Index j = 0; j < C.cols(); ++j) C(i, j) = rng.normal();
  } else {
    throw ConfigError("train.dko_init", "expected \"ls\" or \"random\"");
  }

  const int n_mat = r * (r + m) + n * r;
  const int n_theta = static_cast<int>(params.size());
  Eigen::VectorXd x(n_mat + n_theta);
  x.segment(0, r * (r + m)) = io::vec_rowmajor(M);
  x.segment(r * (r + m), n * r) = io::vec_rowmajor(C);
  x.tail(n_theta) = params.flatten();

  AdamState adam = AdamState::init(n_mat + n_theta, cfg.alpha);

  Eigen::MatrixXd Nmat(r + m, T);
  Nmat.bottomRows(m) = dm0.U;

  DkoResult out;
  out.loss_trace.reserve(static_cast<size_t>(cfg.dko_max_steps) + 1);
  for (long step = 0; step < cfg.dko_max_steps; ++step) {
    M = io::mat_rowmajor(x.segment(0, r * (r + m)), r, r + m);
    C = io::mat_rowmajor(x.segment(r * (r + m), n * r), n, r);
    params = MlpParams::unflatten(x.tail(n_theta), n, cfg.hidden, r);

    const MlpForward fx = mlp_forward(params, dm0.X);
    const MlpForward fxb = mlp_forward(params, dm0.Xbar);
    Nmat.topRows(r) = fx.out;

    Eigen::MatrixXd R1 = fxb.out - M * Nmat;
    Eigen::MatrixXd R2 = dm0.X - C * fx.out;
    const double loss = (R1.squaredNorm() + R2.squaredNorm()) / (2.0 * T);
    out.loss_trace.push_back(loss);
    if (loss < cfg.threshold) {
      out.converged = true;
      break;
    }

    Eigen::MatrixXd dM = -(R1 * Nmat.transpose()) / T;
    Eigen::MatrixXd dC = -(R2 * fx.out.transpose()) / T;
    Eigen::MatrixXd S_G =
        -(M.leftCols(r).transpose() * R1 + C.transpose() * R2) / T;
    Eigen::MatrixXd S_Gbar = R1 / T;
    Eigen::VectorXd gtheta = mlp_backward(params, dm0.X, fx, S_G) +
                             mlp_backward(params, dm0.Xbar, fxb, S_Gbar);

    Eigen::VectorXd grad(n_mat + n_theta);
    grad.segment(0, r * (r + m)) = io::vec_rowmajor(dM);
    grad.segment(r * (r + m), n * r) = io::vec_rowmajor(dC);
    grad.tail(n_theta) = gtheta;
    adam_step(adam, x, grad);
  }

  M = io::mat_rowmajor(x.segment(0, r * (r + m)), r, r + m);
  C = io::mat_rowmajor(x.segment(r * (r + m), n * r), n, r);
  params = MlpParams::unflatten(x.tail(n_theta), n, cfg.hidden, r);
  out.model.A = M.leftCols(r);
  out.model.B = M.rightCols(m);
  out.model.C = C;
  out.model.theta = params;
  out.model.scaler = cfg.scaler;
  return out;
}

Eigen::Vector3d mlp_predict(const MlpBaselineModel& model,
                            const Eigen::Vector3d& v, const Eigen::Vector2d& u) {
  Eigen::VectorXd in(5);
  in.head(3) = model.scaler.apply(v);
  in.tail(2) = u;
  return lift_forward(model.net, in);
}

void save_mlp_baseline(const std::string& path, const MlpBaselineModel& model,
                       const std::string& config_hash) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "ddkl-checkpoint v1\n";
  os << "kind mlp\n";
  os << "config_hash " << config_hash << "\n";
  os << "dims " << model.net.in() << ' ' << model.net.hidden() << ' '
     << model.net.out() << "\n";
  io::write_matrix_block(os, "scaler_mean", model.scaler.mean);
  io::write_matrix_block(os, "scaler_scale", model.scaler.scale);
  io::write_matrix_block(os, "W1", model.net.W1);
  io::write_matrix_block(os, "b1", model.net.b1);
  io::write_matrix_block(os, "W2", model.net.W2);
  io::write_matrix_block(os, "b2", model.net.b2);
}

MlpBaselineModel load_mlp_baseline(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open model file " + path);
  std::string magic, version, key, kind, hash;
  is >> magic >> version;
  if (magic != "ddkl-checkpoint") throw IoError(path + " is not a ddkl checkpoint");
  is >> key >> kind;
  if (kind != "mlp") throw IoError(path + " holds a '" + kind + "' model");
  is >> key >> hash;
  int in = 0, hidden = 0, out_dim = 0;
  is >> key >> in >> hidden >> out_dim;

  MlpBaselineModel model;
  model.scaler.mean = io::read_matrix_block(is, "scaler_mean");
  model.scaler.scale = io::read_matrix_block(is, "scaler_scale");
  model.net.W1 = io::read_matrix_block(is, "W1");
  model.net.b1 = io::read_matrix_block(is, "b1");
  model.net.W2 = io::read_matrix_block(is, "W2");
  model.net.b2 = io::read_matrix_block(is, "b2");
  if (model.net.in() != in || model.net.hidden() != hidden ||
      model.net.out() != out_dim)
    throw IoError(path + ": dims line disagrees with stored blocks");
  return model;
}

MlpBaselineResult train_mlp_baseline(const Trajectory& traj,
                                     const TrainConfig& cfg) {
  validate_train(cfg);
  const Segment seg = training_slice(traj, cfg);
  const int T = seg.transitions();
  if (T < 1) throw EmptySegment("mlp baseline needs at least one transition");

  Eigen::MatrixXd Vin(5, T), Y(3, T);
  for (int t = 0; t < T; ++t) {
    Vin.col(t).head(3) = cfg.scaler.apply(seg.states[t].v);
    Vin.col(t).tail(2) = seg.inputs[t];
    Y.col(t) = seg.states[t + 1].v;
  }

  MlpParams params = init_params(cfg.theta_seed, 5, cfg.hidden, 3);
  Eigen::VectorXd x = params.flatten();
  AdamState adam = AdamState::init(static_cast<int>(x.size()), cfg.alpha);

  MlpBaselineResult out;
  out.loss_trace.reserve(static_cast<size_t>(cfg.mlp_max_steps) + 1);
  for (long step = 0; step < cfg.mlp_max_steps; ++step) {
    params = MlpParams::unflatten(x, 5, cfg.hidden, 3);
    const MlpForward fwd = mlp_forward(params, Vin);
    Eigen::MatrixXd D = fwd.out - Y;
    const double loss = D.squaredNorm() / T;
    out.loss_trace.push_back(loss);
    if (loss < cfg.threshold) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd S = (2.0 / T) * D;
    adam_step(adam, x, mlp_backward(params, Vin, fwd, S));
  }

  out.model.net = MlpParams::unflatten(x, 5, cfg.hidden, 3);
  out.model.scaler = cfg.scaler;
  return out;
}

Predictor koopman_predictor(KoopmanModel model) {
  return [model = std::move(model)](const Eigen::Vector3d& v,
                                    const Eigen::Vector2d& u) {
    return predict_next(model, v, u);
  };
}

Predictor mlp_predictor(MlpBaselineModel model) {
  return [model = std::move(model)](const Eigen::Vector3d& v,
                                    const Eigen::Vector2d& u) {
    return mlp_predict(model, v, u);
  };
}

MetricsReport evaluate_metrics(
    const std::vector<std::pair<std::string, std::vector<std::vector<Predictor>>>>&
        methods,
    const Trajectory& traj, int t_begin, int t_end) {
  if (t_begin < 0 || t_end > traj.T() || t_begin >= t_end)
    throw IntervalOutOfRange("evaluate_metrics: bad test slice");
  const int n_t = t_end - t_begin;

  MetricsReport report;
  for (int t = t_begin; t < t_end; ++t)
    report.zero_predictor += traj.states[t + 1].v.squaredNorm();
  report.zero_predictor /= n_t;

  for (const auto& [method, runs] : methods) {
    std::vector<double> per_run;
    per_run.reserve(runs.size());
    for (size_t run = 0; run < runs.size(); ++run) {
      const auto& predictors = runs[run];
      if (predictors.empty())
        throw EmptySegment("evaluate_metrics: run without predictors");
      double acc = 0.0;
      for (const auto& pred : predictors) {
        for (int t = t_begin; t < t_end; ++t) {
          const Eigen::Vector3d err =
              pred(traj.states[t].v, traj.inputs[t]) - traj.states[t + 1].v;
          acc += err.squaredNorm();
        }
      }
      const double metric = acc / (static_cast<double>(predictors.size()) * n_t);
      per_run.push_back(metric);
      report.rows.push_back({method, static_cast<int>(run), metric});
    }
    if (!per_run.empty()) {
      double mean = 0.0;
      for (double v : per_run) mean += v;
      mean /= per_run.size();
      double var = 0.0;
      for (double v : per_run) var += (v - mean) * (v - mean);
      var /= per_run.size();
      report.summaries.push_back({method, mean, std::sqrt(var)});
    }
  }
  return report;
}

void write_metrics_csv(const std::string& path, const MetricsReport& report,
                       const std::string& config_hash) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  if (!config_hash.empty()) f << "# config_hash " << config_hash << "\n";
  f << "# zero_predictor_metric " << io::fmt_g17(report.zero_predictor) << "\n";
  f << "method,run,metric,stddev\n";
  for (const auto& row : report.rows)
    f << row.method << ',' << row.run << ',' << io::fmt_g17(row.metric) << ",\n";
  for (const auto& s : report.summaries)
    f << s.method << ",mean," << io::fmt_g17(s.mean) << ',' << io::fmt_g17(s.stddev)
      << "\n";
  if (!f) throw IoError("failed writing " + path);
}

MetricsReport read_metrics_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  MetricsReport report;
  std::string line;
  bool header_seen = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string key, value;
      ss >> key >> value;
      if (key == "zero_predictor_metric")
        report.zero_predictor = io::parse_double(value);
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    const auto fields = io::split_csv_line(line);
    if (fields.size() < 3) throw IoError(path + ": malformed metrics row");
    if (fields[1] == "mean") {
      MetricsSummary s;
      s.method = fields[0];
      s.mean = io::parse_double(fields[2]);
      s.stddev = fields.size() > 3 && !fields[3].empty() ? io::parse_double(fields[3]) : 0.0;
      report.summaries.push_back(std::move(s));
    } else {
      MetricsRow row;
      row.method = fields[0];
      row.run = static_cast<int>(io::parse_double(fields[1]));
      row.metric = io::parse_double(fields[2]);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void write_loss_trace_csv(const std::string& path,
                          const std::vector<double>& trace,
                          const std::string& config_hash) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  if (!config_hash.empty()) f << "# config_hash " << config_hash << "\n";
  f << "step,loss\n";
  for (size_t i = 0; i < trace.size(); ++i)
    f << i << ',' << io::fmt_g17(trace[i]) << "\n";
  if (!f) throw IoError("failed writing " + path);
}

void write_theta_history_csv(const std::string& path,
                             const std::vector<ThetaStepRecord>& records,
                             const std::string& config_hash) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  if (!config_hash.empty()) f << "# config_hash " << config_hash << "\n";
  const size_t n_agents = records.empty() ? 0 : records[0].agent_losses.size();
  f << "step,theta_disagreement,mean_local_loss";
  for (size_t i = 1; i <= n_agents; ++i) f << ",loss_agent" << i;
  f << "\n";
  for (const auto& rec : records) {
    double mean = 0.0;
    for (double v : rec.agent_losses) mean += v;
    if (!rec.agent_losses.empty()) mean /= rec.agent_losses.size();
    f << rec.step << ',' << io::fmt_g17(rec.theta_disagreement) << ','
      << io::fmt_g17(mean);
    for (double v : rec.agent_losses) f << ',' << io::fmt_g17(v);
    f << "\n";
  }
  if (!f) throw IoError("failed writing " + path);
}

}  // namespace ddkl

#include "ddkl/consensus.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ddkl/errors.hpp"
#include "ddkl/io.hpp"

namespace ddkl {

namespace {

Eigen::MatrixXd randn_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = rng.normal();
  return out;
}

// F = [[d I + c K, d I], [-d I, d I]] for a symmetric PSD K.
Eigen::MatrixXd block_system(double d, double c, const Eigen::MatrixXd& K) {
  const Eigen::Index q = K.rows();
  Eigen::MatrixXd F(2 * q, 2 * q);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(q, q);
  F.topLeftCorner(q, q) = d * I + c * K;
  F.topRightCorner(q, q) = d * I;
  F.bottomLeftCorner(q, q) = -d * I;
  F.bottomRightCorner(q, q) = d * I;
  return F;
}

Eigen::PartialPivLU<Eigen::MatrixXd> factorize_checked(
    const Eigen::MatrixXd& F, const char* label) {
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(F);
  if (!(lu.rcond() > 1e-14)) throw SingularBlockSystem(
      std::string(label) + ": block system is numerically singular");
  return lu;
}

}  // namespace

void MatrixConsensusState::rebuild(const DataMatrices& dm) {
  const Eigen::Index r = dm.G.rows();
  const Eigen::Index m = dm.U.rows();
  T = dm.width();
  if (T <= 0) throw EmptySegment("consensus state needs at least one transition");

  Eigen::MatrixXd N(r + m, T);
  N.topRows(r) = dm.G;
  N.bottomRows(m) = dm.U;

  NN.noalias() = N * N.transpose();
  NGbar.noalias() = N * dm.Gbar.transpose();
  GG.noalias() = dm.G * dm.G.transpose();
  GX.noalias() = dm.G * dm.X.transpose();
  tr_GbarGbar = dm.Gbar.squaredNorm();
  tr_XX = dm.X.squaredNorm();

  F_lu = factorize_checked(block_system(d, c, NN), "F");
  Fhat_lu = factorize_checked(block_system(d, c, GG), "Fhat");
}

MatrixConsensusState build_consensus_state(const DataMatrices& dm, double c,
                                           double d, Rng rng) {
  if (!(d > 0.0)) throw ConfigError("consensus.d", "self-weight must be positive");
  if (!(c > 0.0)) throw ConfigError("consensus.c", "data-fit gain must be positive");
  const Eigen::Index r = dm.G.rows();
  const Eigen::Index m = dm.U.rows();
  const Eigen::Index n = dm.X.rows();

  MatrixConsensusState st;
  st.d = d;
  st.c = c;
  st.Mt = randn_matrix(rng, r + m, r);
  st.E = randn_matrix(rng, r + m, r);
  st.Ct = randn_matrix(rng, r, n);
  st.Ehat = randn_matrix(rng, r, n);
  st.rebuild(dm);
  return st;
}

void matrix_consensus_step(MatrixConsensusState& st,
                           const std::vector<const MatrixShare*>& shares,
                           const std::vector<double>& weights) {
  if (shares.empty() || shares.size() != weights.size())
    throw IndexOutOfRange("matrix_consensus_step: shares/weights mismatch");

  Eigen::MatrixXd sumE = weights[0] * shares[0]->E;
  Eigen::MatrixXd sumMt = weights[0] * shares[0]->Mt;
  Eigen::MatrixXd sumEhat = weights[0] * shares[0]->Ehat;
  Eigen::MatrixXd sumCt = weights[0] * shares[0]->Ct;
  for (size_t k = 1; k < shares.size(); ++k) {
    sumE.noalias() += weights[k] * shares[k]->E;
    sumMt.noalias() += weights[k] * shares[k]->Mt;
    sumEhat.noalias() += weights[k] * shares[k]->Ehat;
    sumCt.noalias() += weights[k] * shares[k]->Ct;
  }

  const Eigen::Index q = st.Mt.rows();
  Eigen::MatrixXd rhs(2 * q, st.Mt.cols());
  rhs.topRows(q) = st.d * st.Mt + sumE + st.c * st.NGbar;
  rhs.bottomRows(q) = -sumMt + st.d * st.E;
  Eigen::MatrixXd sol = st.F_lu.solve(rhs);
  st.Mt = sol.topRows(q);
  st.E = sol.bottomRows(q);

  const Eigen::Index qh = st.Ct.rows();
  Eigen::MatrixXd rhs_hat(2 * qh, st.Ct.cols());
  rhs_hat.topRows(qh) = st.d * st.Ct + sumEhat + st.c * st.GX;
  rhs_hat.bottomRows(qh) = -sumCt + st.d * st.Ehat;
  Eigen::MatrixXd sol_hat = st.Fhat_lu.solve(rhs_hat);
  st.Ct = sol_hat.topRows(qh);
  st.Ehat = sol_hat.bottomRows(qh);
}

void matrix_update_round(std::vector<MatrixConsensusState>& states,
                         const Graph& g, const ConsensusWeights& w) {
  const int N = static_cast<int>(states.size());
  if (N != g.n_agents)
    throw IndexOutOfRange("matrix_update_round: states/graph size mismatch");

  std::vector<MatrixShare> snapshot;
  snapshot.reserve(N);
  for (const auto& st : states) snapshot.push_back(st.share());

  for (int i = 0; i < N; ++i) {
    std::vector<const MatrixShare*> shares;
    std::vector<double> weights;
    shares.reserve(g.neighbors[i].size());
    weights.reserve(g.neighbors[i].size());
    for (int j : g.neighbors[i]) {
      shares.push_back(&snapshot[j]);
      weights.push_back(w.w(i, j));
    }
    matrix_consensus_step(states[i], shares, weights);
  }
}

std::pair<double, double> disagreement(
    const std::vector<MatrixConsensusState>& states) {
  double dm = 0.0, dc = 0.0;
  for (size_t i = 0; i < states.size(); ++i) {
    for (size_t j = i + 1; j < states.size(); ++j) {
      dm = std::max(dm, (states[i].Mt - states[j].Mt).norm());
      dc = std::max(dc, (states[i].Ct - states[j].Ct).norm());
    }
  }
  return {dm, dc};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> centralized_ls_oracle(
    const std::vector<DataMatrices>& data, const std::string& weighting) {
  if (data.empty()) throw EmptySegment("centralized_ls_oracle: no data");
  const bool per_agent = weighting == "per-agent";
  if (!per_agent && weighting != "uniform")
    throw ConfigError("train.loss_weighting",
                      "expected \"uniform\" or \"per-agent\"");

  const Eigen::Index r = data[0].G.rows();
  const Eigen::Index m = data[0].U.rows();
  const Eigen::Index n = data[0].X.rows();

  Eigen::MatrixXd NN = Eigen::MatrixXd::Zero(r + m, r + m);
  Eigen::MatrixXd NGbar = Eigen::MatrixXd::Zero(r + m, r);
  Eigen::MatrixXd GG = Eigen::MatrixXd::Zero(r, r);
  Eigen::MatrixXd GX = Eigen::MatrixXd::Zero(r, n);

  for (const auto& dm : data) {
    const int T = dm.width();
    if (T <= 0) throw EmptySegment("centralized_ls_oracle: empty segment");
    const double s = per_agent ? 1.0 / static_cast<double>(T) : 1.0;
    Eigen::MatrixXd N(r + m, T);
    N.topRows(r) = dm.G;
    N.bottomRows(m) = dm.U;
    NN.noalias() += s * (N * N.transpose());
    NGbar.noalias() += s * (N * dm.Gbar.transpose());
    GG.noalias() += s * (dm.G * dm.G.transpose());
    GX.noalias() += s * (dm.G * dm.X.transpose());
  }

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_n(NN);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_g(GG);
  Eigen::MatrixXd Mt = cod_n.solve(NGbar);
  Eigen::MatrixXd Ct = cod_g.solve(GX);
  return {Mt.transpose(), Ct.transpose()};
}

double cached_local_loss(const MatrixConsensusState& st) {
  const double dyn = st.tr_GbarGbar - 2.0 * st.Mt.cwiseProduct(st.NGbar).sum() +
                     st.Mt.cwiseProduct(st.NN * st.Mt).sum();
  const double rec = st.tr_XX - 2.0 * st.Ct.cwiseProduct(st.GX).sum() +
                     st.Ct.cwiseProduct(st.GG * st.Ct).sum();
  return (dyn + rec) / (2.0 * static_cast<double>(st.T));
}

std::vector<Eigen::VectorXd> theta_mixing_round(
    const std::vector<Eigen::VectorXd>& thetas,
    const std::vector<Eigen::VectorXd>& directions,
    const std::vector<double>& alphas, const Graph& g,
    const MixingWeights& what) {
  const int N = static_cast<int>(thetas.size());
  if (N != g.n_agents || static_cast<int>(directions.size()) != N ||
      static_cast<int>(alphas.size()) != N)
    throw IndexOutOfRange("theta_mixing_round: size mismatch");

  std::vector<Eigen::VectorXd> out(N);
  for (int i = 0; i < N; ++i) {
    const auto& nbrs = g.neighbors[i];
    Eigen::VectorXd mixed = what.w_hat(i, nbrs[0]) * thetas[nbrs[0]];
    for (size_t k = 1; k < nbrs.size(); ++k)
      mixed.noalias() += what.w_hat(i, nbrs[k]) * thetas[nbrs[k]];
    mixed -= alphas[i] * directions[i];
    out[i] = std::move(mixed);
  }
  return out;
}

void write_round_history_csv(const std::string& path,
                             const std::vector<ConsensusRoundRecord>& records,
                             const std::string& config_hash) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  if (!config_hash.empty()) f << "# config_hash " << config_hash << "\n";
  f << "s,disagreement_M,disagreement_C,dist_to_oracle_M,dist_to_oracle_C,"
       "mean_local_loss\n";
  for (const auto& rec : records) {
    f << rec.s << ',' << io::fmt_g17(rec.disagreement_M) << ','
      << io::fmt_g17(rec.disagreement_C) << ',' << io::fmt_g17(rec.dist_to_oracle_M)
      << ',' << io::fmt_g17(rec.dist_to_oracle_C) << ','
      << io::fmt_g17(rec.mean_local_loss) << "\n";
  }
  if (!f) throw IoError("failed writing " + path);
}

}  // namespace ddkl

#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "ddkl/graph.hpp"
#include "ddkl/koopman.hpp"
#include "ddkl/message_bus.hpp"
#include "ddkl/rng.hpp"

namespace ddkl {

// Per-agent state of the distributed matrix estimation. The iterates are the
// transposed operators M_i' = [A_i B_i]' and C_i' plus their auxiliary
// variables; the remaining members are Gram-type summaries of the agent's own
// data under its current lifting parameters, together with the factorized
// block systems that make each update a pair of linear solves.
struct MatrixConsensusState {
  Eigen::MatrixXd Mt;    // (r+m) x r
  Eigen::MatrixXd E;     // (r+m) x r
  Eigen::MatrixXd Ct;    // r x n
  Eigen::MatrixXd Ehat;  // r x n

  double d = 0.0;  // self-weight, sum of incident edge weights
  double c = 1.0;  // data-fit gain
  int T = 0;       // transition pairs in this agent's segment

  Eigen::MatrixXd NN;     // N N',     (r+m) x (r+m), N = [G; U]
  Eigen::MatrixXd NGbar;  // N Gbar',  (r+m) x r
  Eigen::MatrixXd GG;     // G G',     r x r
  Eigen::MatrixXd GX;     // G X',     r x n
  double tr_GbarGbar = 0.0;
  double tr_XX = 0.0;

  Eigen::PartialPivLU<Eigen::MatrixXd> F_lu;     // 2(r+m) x 2(r+m)
  Eigen::PartialPivLU<Eigen::MatrixXd> Fhat_lu;  // 2r x 2r

  Eigen::MatrixXd M() const { return Mt.transpose(); }
  Eigen::MatrixXd C() const { return Ct.transpose(); }
  MatrixShare share() const { return MatrixShare{Mt, E, Ct, Ehat}; }

  // Refresh the data summaries and factorizations after the lifting
  // parameters changed; iterates are kept (warm start).
  void rebuild(const DataMatrices& dm);
};

// Initializes an agent's consensus state. Iterates are filled with standard
// normal entries drawn row-major in the order Mt, E, Ct, Ehat.
MatrixConsensusState build_consensus_state(const DataMatrices& dm, double c,
                                           double d, Rng rng);

// One Jacobi update of a single agent given the snapshot of neighbor shares
// (self included) and the matching edge weights. Solves the two factorized
// block systems and overwrites the iterates in place.
void matrix_consensus_step(MatrixConsensusState& st,
                           const std::vector<const MatrixShare*>& shares,
                           const std::vector<double>& weights);

// One synchronous round over all agents: snapshot every agent's share, then
// update everyone against that snapshot.
void matrix_update_round(std::vector<MatrixConsensusState>& states,
                         const Graph& g, const ConsensusWeights& w);

// Max pairwise Frobenius distances (over M and C respectively). A single
// agent yields {0, 0}.
std::pair<double, double> disagreement(
    const std::vector<MatrixConsensusState>& states);

// Solution of the pooled least-squares problems that the matrix consensus
// converges to: M*' = (sum_i N_i N_i')^+ (sum_i N_i Gbar_i') and likewise for
// C* from G, X. `weighting` is "uniform" (plain sums, the fixed point of the
// distributed update) or "per-agent" (each agent's columns scaled by
// 1/sqrt(T_i) so every segment contributes equally regardless of length).
// Returns {M*, C*} with M* in R^{r x (r+m)}, C* in R^{n x r}.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> centralized_ls_oracle(
    const std::vector<DataMatrices>& data, const std::string& weighting);

// Local objective of agent `st` at its current iterates, computed from the
// cached Gram summaries in O(r^2 (r+m)) independent of segment length:
//   (1/2T) (||Gbar - M N||_F^2 + ||X - C G||_F^2).
double cached_local_loss(const MatrixConsensusState& st);

// One synchronous mixing step of the lifting parameters:
//   theta_i <- sum_j what_ij theta_j - alpha_i * direction_i
// where j runs over agent i's closed neighborhood in ascending order.
std::vector<Eigen::VectorXd> theta_mixing_round(
    const std::vector<Eigen::VectorXd>& thetas,
    const std::vector<Eigen::VectorXd>& directions,
    const std::vector<double>& alphas, const Graph& g,
    const MixingWeights& what);

struct ConsensusRoundRecord {
  long s = 0;
  double disagreement_M = 0.0;
  double disagreement_C = 0.0;
  double dist_to_oracle_M = 0.0;
  double dist_to_oracle_C = 0.0;
  double mean_local_loss = 0.0;
};

void write_round_history_csv(const std::string& path,
                             const std::vector<ConsensusRoundRecord>& records,
                             const std::string& config_hash);

}  // namespace ddkl

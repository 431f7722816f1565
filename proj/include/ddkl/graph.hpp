#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace ddkl {

// Agent communication topology: a connected undirected graph where every
// node carries an implicit self-arc, so each neighbor set contains the node
// itself. Agents are 1-indexed in files and messages and 0-indexed here;
// the conversion happens only at I/O boundaries (build_graph, config, CLI).
struct Graph {
  int n_agents = 0;
  std::vector<std::pair<int, int>> edges;      // 0-indexed, i < j, no self pairs
  std::vector<std::vector<int>> neighbors;     // per node, sorted, includes self

  int degree(int i) const {  // neighbor count excluding the self-arc
    return static_cast<int>(neighbors[i].size()) - 1;
  }
};

// Weights for the matrix-consensus updates: w(i,j) > 0 iff j is a neighbor
// of i (self included), symmetric; d(i) is the row sum.
struct ConsensusWeights {
  Eigen::MatrixXd w;
  Eigen::VectorXd d;
};

// Doubly stochastic mixing weights for the parameter-averaging update.
struct MixingWeights {
  Eigen::MatrixXd w_hat;
};

// Endpoints are 1-indexed as they appear in config files. Throws
// IndexOutOfRange on bad endpoints or explicit self loops, DisconnectedGraph
// if the graph is not connected.
Graph build_graph(int n_agents, const std::vector<std::pair<int, int>>& edges_1based);

// w(i,j) = 1 for j in N_i (self included), 0 otherwise; d(i) = |N_i|.
ConsensusWeights uniform_consensus_weights(const Graph& g);

// Metropolis-Hastings weights: doubly stochastic on any connected graph.
MixingWeights metropolis_weights(const Graph& g);

// Row-uniform weights 1/|N_i|; doubly stochastic only on regular graphs.
// Kept behind the config flag mixing = "uniform-rows".
MixingWeights uniform_row_weights(const Graph& g);

// Largest |eigenvalue| of w_hat after the leading 1; < 1 for connected graphs.
double second_largest_eigenvalue_magnitude(const MixingWeights& mw);

}  // namespace ddkl

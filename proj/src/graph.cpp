#include "ddkl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <string>

#include "ddkl/errors.hpp"

namespace ddkl {

Graph build_graph(int n_agents, const std::vector<std::pair<int, int>>& edges_1based) {
  if (n_agents < 1) throw IndexOutOfRange("n_agents must be >= 1");

  std::set<std::pair<int, int>> unique_edges;
  for (const auto& [a, b] : edges_1based) {
    if (a < 1 || a > n_agents || b < 1 || b > n_agents)
      throw IndexOutOfRange("edge endpoint out of range: (" + std::to_string(a) +
                            "," + std::to_string(b) + ") with N=" +
                            std::to_string(n_agents));
    if (a == b)
      throw IndexOutOfRange("explicit self loop (" + std::to_string(a) + "," +
                            std::to_string(b) + "); self-arcs are implicit");
    const int i = std::min(a, b) - 1;
    const int j = std::max(a, b) - 1;
    unique_edges.insert({i, j});
  }

  Graph g;
  g.n_agents = n_agents;
  g.edges.assign(unique_edges.begin(), unique_edges.end());
  g.neighbors.assign(n_agents, {});
  for (int i = 0; i < n_agents; ++i) g.neighbors[i].push_back(i);
  for (const auto& [i, j] : g.edges) {
    g.neighbors[i].push_back(j);
    g.neighbors[j].push_back(i);
  }
  for (auto& nbr : g.neighbors) std::sort(nbr.begin(), nbr.end());

  // BFS connectivity check; fail fast rather than diverge silently later.
  std::vector<char> seen(n_agents, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int reached = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : g.neighbors[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        q.push(v);
      }
  }
  if (reached != n_agents)
    throw DisconnectedGraph("graph is disconnected: reached " +
                            std::to_string(reached) + " of " +
                            std::to_string(n_agents) + " nodes");
  return g;
}

ConsensusWeights uniform_consensus_weights(const Graph& g) {
  const int n = g.n_agents;
  ConsensusWeights cw;
  cw.w = Eigen::MatrixXd::Zero(n, n);
  cw.d = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int j : g.neighbors[i]) cw.w(i, j) = 1.0;
    cw.d[i] = static_cast<double>(g.neighbors[i].size());
  }
  return cw;
}

MixingWeights metropolis_weights(const Graph& g) {
  const int n = g.n_agents;
  MixingWeights mw;
  mw.w_hat = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double off_diag = 0.0;
    for (int j : g.neighbors[i]) {
      if (j == i) continue;
      const double wij = 1.0 / (1.0 + std::max(g.degree(i), g.degree(j)));
      mw.w_hat(i, j) = wij;
      off_diag += wij;
    }
    mw.w_hat(i, i) = 1.0 - off_diag;
  }
  return mw;
}

MixingWeights uniform_row_weights(const Graph& g) {
  const int n = g.n_agents;
  MixingWeights mw;
  mw.w_hat = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double wij = 1.0 / static_cast<double>(g.neighbors[i].size());
    for (int j : g.neighbors[i]) mw.w_hat(i, j) = wij;
  }
  return mw;
}

double second_largest_eigenvalue_magnitude(const MixingWeights& mw) {
  // Mixing matrices here are symmetric (Metropolis) or close to it; use the
  // general solver so uniform-rows on irregular graphs is handled too.
  Eigen::EigenSolver<Eigen::MatrixXd> es(mw.w_hat);
  std::vector<double> mags;
  mags.reserve(mw.w_hat.rows());
  for (Eigen::Index k = 0; k < mw.w_hat.rows(); ++k)
    mags.push_back(std::abs(es.eigenvalues()[k]));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  return mags.size() > 1 ? mags[1] : 0.0;
}

}  // namespace ddkl

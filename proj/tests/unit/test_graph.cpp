#include <doctest.h>

#include <Eigen/Dense>

#include "ddkl/errors.hpp"
#include "ddkl/graph.hpp"

using namespace ddkl;

namespace {

Graph ring5() {
  return build_graph(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 1}});
}

bool doubly_stochastic(const Eigen::MatrixXd& w, double tol = 1e-12) {
  const Eigen::Index n = w.rows();
  if (w.minCoeff() < 0.0) return false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(w.row(i).sum() - 1.0) > tol) return false;
    if (std::abs(w.col(i).sum() - 1.0) > tol) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("build_graph accepts a single node") {
  const Graph g = build_graph(1, {});
  CHECK(g.n_agents == 1);
  CHECK(g.neighbors[0] == std::vector<int>{0});
  CHECK(g.degree(0) == 0);
}

TEST_CASE("build_graph rejects two components") {
  CHECK_THROWS_AS(build_graph(4, {{1, 2}, {3, 4}}), DisconnectedGraph);
}

TEST_CASE("build_graph rejects bad endpoints and self loops") {
  CHECK_THROWS_AS(build_graph(3, {{1, 2}, {2, 4}}), IndexOutOfRange);
  CHECK_THROWS_AS(build_graph(3, {{0, 1}, {2, 3}}), IndexOutOfRange);
  CHECK_THROWS_AS(build_graph(3, {{1, 1}, {2, 3}}), IndexOutOfRange);
}

TEST_CASE("neighbor lists are sorted and include the self-arc") {
  const Graph g = ring5();
  CHECK(g.neighbors[0] == std::vector<int>{0, 1, 4});
  CHECK(g.neighbors[2] == std::vector<int>{1, 2, 3});
  CHECK(g.degree(0) == 2);
}

TEST_CASE("uniform consensus weights on a 2-node path") {
  const Graph g = build_graph(2, {{1, 2}});
  const ConsensusWeights cw = uniform_consensus_weights(g);
  CHECK(cw.w == Eigen::MatrixXd::Ones(2, 2));
  CHECK(cw.d(0) == 2.0);
  CHECK(cw.d(1) == 2.0);
}

TEST_CASE("uniform consensus weights on the 5-ring: every d_i = 3") {
  const ConsensusWeights cw = uniform_consensus_weights(ring5());
  for (int i = 0; i < 5; ++i) CHECK(cw.d(i) == 3.0);
  CHECK(cw.w(0, 1) == 1.0);
  CHECK(cw.w(0, 0) == 1.0);
  CHECK(cw.w(0, 2) == 0.0);
}

TEST_CASE("uniform consensus weights on a single node") {
  const ConsensusWeights cw = uniform_consensus_weights(build_graph(1, {}));
  CHECK(cw.w(0, 0) == 1.0);
  CHECK(cw.d(0) == 1.0);
}

TEST_CASE("metropolis weights on a 2-node path are all 1/2") {
  const MixingWeights mw = metropolis_weights(build_graph(2, {{1, 2}}));
  CHECK(mw.w_hat.isApprox(Eigen::MatrixXd::Constant(2, 2, 0.5), 1e-15));
}

TEST_CASE("metropolis weights on the complete 3-graph are all 1/3") {
  const MixingWeights mw = metropolis_weights(build_graph(3, {{1, 2}, {2, 3}, {1, 3}}));
  CHECK(mw.w_hat.isApprox(Eigen::MatrixXd::Constant(3, 3, 1.0 / 3.0), 1e-15));
}

TEST_CASE("metropolis weights on a single node") {
  const MixingWeights mw = metropolis_weights(build_graph(1, {}));
  CHECK(mw.w_hat(0, 0) == 1.0);
}

TEST_CASE("metropolis weights are doubly stochastic on irregular graphs") {
  // star plus an extra edge: degrees 3, 2, 2, 1
  const Graph g = build_graph(4, {{1, 2}, {1, 3}, {1, 4}, {2, 3}});
  const MixingWeights mw = metropolis_weights(g);
  CHECK(doubly_stochastic(mw.w_hat));
  CHECK(mw.w_hat.transpose() == mw.w_hat);
  // zero off the sparsity pattern
  CHECK(mw.w_hat(1, 3) == 0.0);
  CHECK(mw.w_hat(3, 1) == 0.0);
}

TEST_CASE("metropolis weights contract on connected graphs") {
  CHECK(second_largest_eigenvalue_magnitude(metropolis_weights(ring5())) < 1.0);
  const Graph path = build_graph(4, {{1, 2}, {2, 3}, {3, 4}});
  CHECK(second_largest_eigenvalue_magnitude(metropolis_weights(path)) < 1.0);
}

TEST_CASE("uniform row weights are row-stochastic, doubly on regular graphs") {
  const MixingWeights ring = uniform_row_weights(ring5());
  CHECK(doubly_stochastic(ring.w_hat));
  const MixingWeights path = uniform_row_weights(build_graph(3, {{1, 2}, {2, 3}}));
  for (int i = 0; i < 3; ++i) CHECK(path.w_hat.row(i).sum() == doctest::Approx(1.0));
  CHECK(path.w_hat(1, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(path.w_hat(0, 1) == doctest::Approx(0.5));
}

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "ddkl/graph.hpp"

namespace ddkl {

// The only payloads that ever cross an agent boundary. Training data
// (segments, data matrices) never appears here; the privacy audit in the
// test suite checks exactly this surface.
struct MatrixShare {
  Eigen::MatrixXd Mt;    // M_i' in R^{(r+m) x r}
  Eigen::MatrixXd E;     // auxiliary, same shape as Mt
  Eigen::MatrixXd Ct;    // C_i' in R^{r x n}
  Eigen::MatrixXd Ehat;  // auxiliary, same shape as Ct
};

struct ThetaShare {
  Eigen::VectorXd theta;  // flattened lifting parameters
};

using SharePayload = std::variant<MatrixShare, ThetaShare>;

struct Envelope {
  int from = 0;
  int to = 0;
  long round = 0;
  const SharePayload* payload = nullptr;  // owned by the bus until end_round()
};

// Barrier-synchronous message bus: every agent posts once per round, then
// neighbors (self-arc included) read the posted snapshot. All reads within a
// round observe the same snapshot, which realizes the Jacobi semantics of
// the update rules.
class SyncBus {
 public:
  explicit SyncBus(const Graph& g) : graph_(&g), posted_(g.n_agents) {}

  void post(int from, SharePayload payload) {
    posted_[from] = std::move(payload);
  }

  // Payloads of agent `to`'s neighbors in ascending agent order.
  std::vector<Envelope> collect(int to) const {
    std::vector<Envelope> out;
    out.reserve(graph_->neighbors[to].size());
    for (int j : graph_->neighbors[to]) {
      Envelope env{j, to, round_, &posted_[j].value()};
      if (observer_) observer_(env);
      out.push_back(env);
    }
    return out;
  }

  void end_round() {
    for (auto& p : posted_) p.reset();
    ++round_;
  }

  long round() const { return round_; }

  void set_observer(std::function<void(const Envelope&)> obs) {
    observer_ = std::move(obs);
  }

 private:
  const Graph* graph_;
  std::vector<std::optional<SharePayload>> posted_;
  long round_ = 0;
  std::function<void(const Envelope&)> observer_;
};

}  // namespace ddkl

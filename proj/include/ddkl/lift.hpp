#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace ddkl {

// One-hidden-layer ReLU perceptron used as the lifting function
// g(v, theta) = W2 relu(W1 v + b1) + b2. The flattened parameter order is
// [W1 row-major; b1; W2 row-major; b2] everywhere (gradients, checkpoints,
// consensus messages).
struct MlpParams {
  Eigen::MatrixXd W1;  // hidden x in
  Eigen::VectorXd b1;  // hidden
  Eigen::MatrixXd W2;  // out x hidden
  Eigen::VectorXd b2;  // out

  int in() const { return static_cast<int>(W1.cols()); }
  int hidden() const { return static_cast<int>(W1.rows()); }
  int out() const { return static_cast<int>(W2.rows()); }
  int size() const {
    return hidden() * in() + hidden() + out() * hidden() + out();
  }

  Eigen::VectorXd flatten() const;
  static MlpParams unflatten(const Eigen::VectorXd& flat, int in, int hidden, int out);
};

// He-uniform weights (uniform in +-sqrt(6/fan_in)), zero biases. All agents
// share one initialization by passing the same seed.
MlpParams init_params(std::uint64_t seed, int in = 3, int hidden = 256, int out = 8);

Eigen::VectorXd lift_forward(const MlpParams& theta, const Eigen::VectorXd& v);

// Columnwise lift; K = 0 yields an out x 0 matrix.
Eigen::MatrixXd lift_batch(const MlpParams& theta, const Eigen::MatrixXd& V);

// Cached forward pass over a batch, for reuse by backward passes.
struct MlpForward {
  Eigen::MatrixXd Z;    // pre-activations, hidden x K
  Eigen::MatrixXd H;    // relu(Z)
  Eigen::MatrixXd out;  // W2 H + b2
};
MlpForward mlp_forward(const MlpParams& theta, const Eigen::MatrixXd& V);

// Gradient of sum_k <S(:,k), g(V(:,k), theta)> w.r.t. theta, flattened.
// The ReLU subgradient at exactly zero is taken as zero.
Eigen::VectorXd mlp_backward(const MlpParams& theta, const Eigen::MatrixXd& V,
                             const MlpForward& fwd, const Eigen::MatrixXd& S);

struct LossGrad {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

// Local loss L(theta) for fixed M = [A B] and C over one agent's data
//   L = (1/2T) (|Gbar - A G - B U|_F^2 + |X - C G|_F^2),
// with G = g(X), Gbar = g(Xbar) recomputed from theta, and the exact
// analytic gradient accumulated through both appearances of g.
LossGrad loss_and_grad(const MlpParams& theta, const Eigen::MatrixXd& M,
                       const Eigen::MatrixXd& C, const Eigen::MatrixXd& X,
                       const Eigen::MatrixXd& Xbar, const Eigen::MatrixXd& U);

struct AdamState {
  Eigen::VectorXd m;  // first moment
  Eigen::VectorXd v;  // second moment
  long step = 0;
  double alpha = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState init(int dim, double alpha);
};

// Advances the moments and returns the bias-corrected step
// alpha * mhat / (sqrt(vhat) + eps), so callers can combine it with a mixing
// term instead of a plain subtraction.
Eigen::VectorXd adam_direction(AdamState& state, const Eigen::VectorXd& grad);

// Standard bias-corrected Adam update, in place.
void adam_step(AdamState& state, Eigen::VectorXd& theta_flat,
               const Eigen::VectorXd& grad);

}  // namespace ddkl

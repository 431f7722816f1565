#include "ddkl/lift.hpp"

#include <cmath>

#include "ddkl/errors.hpp"
#include "ddkl/io.hpp"
#include "ddkl/rng.hpp"

namespace ddkl {

Eigen::VectorXd MlpParams::flatten() const {
  Eigen::VectorXd flat(size());
  flat << io::vec_rowmajor(W1), b1, io::vec_rowmajor(W2), b2;
  return flat;
}

MlpParams MlpParams::unflatten(const Eigen::VectorXd& flat, int in, int hidden, int out) {
  MlpParams p;
  Eigen::Index off = 0;
  p.W1 = io::mat_rowmajor(flat.segment(off, hidden * in), hidden, in);
  off += hidden * in;
  p.b1 = flat.segment(off, hidden);
  off += hidden;
  p.W2 = io::mat_rowmajor(flat.segment(off, out * hidden), out, hidden);
  off += out * hidden;
  p.b2 = flat.segment(off, out);
  return p;
}

MlpParams init_params(std::uint64_t seed, int in, int hidden, int out) {
  Rng rng(seed);
  MlpParams p;
  p.W1.resize(hidden, in);
  p.W2.resize(out, hidden);
  const double bound1 = std::sqrt(6.0 / in);
  for (int i = 0; i < hidden; ++i)
    for (int j = 0; j < in; ++j) p.W1(i, j) = rng.uniform(-bound1, bound1);
  const double bound2 = std::sqrt(6.0 / hidden);
  for (int i = 0; i < out; ++i)
    for (int j = 0; j < hidden; ++j) p.W2(i, j) = rng.uniform(-bound2, bound2);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.b2 = Eigen::VectorXd::Zero(out);
  return p;
}

Eigen::VectorXd lift_forward(const MlpParams& theta, const Eigen::VectorXd& v) {
  return theta.W2 * (theta.W1 * v + theta.b1).cwiseMax(0.0) + theta.b2;
}

Eigen::MatrixXd lift_batch(const MlpParams& theta, const Eigen::MatrixXd& V) {
  if (V.cols() == 0) return Eigen::MatrixXd(theta.out(), 0);
  const Eigen::MatrixXd H = ((theta.W1 * V).colwise() + theta.b1).cwiseMax(0.0);
  return (theta.W2 * H).colwise() + theta.b2;
}

MlpForward mlp_forward(const MlpParams& theta, const Eigen::MatrixXd& V) {
  MlpForward f;
  f.Z = (theta.W1 * V).colwise() + theta.b1;
  f.H = f.Z.cwiseMax(0.0);
  f.out = (theta.W2 * f.H).colwise() + theta.b2;
  return f;
}

Eigen::VectorXd mlp_backward(const MlpParams& theta, const Eigen::MatrixXd& V,
                             const MlpForward& fwd, const Eigen::MatrixXd& S) {
  MlpParams g;
  g.W2 = S * fwd.H.transpose();
  g.b2 = S.rowwise().sum();
  const Eigen::MatrixXd dH = theta.W2.transpose() * S;
  const Eigen::MatrixXd dZ = (fwd.Z.array() > 0.0).select(dH, 0.0);
  g.W1 = dZ * V.transpose();
  g.b1 = dZ.rowwise().sum();
  return g.flatten();
}

LossGrad loss_and_grad(const MlpParams& theta, const Eigen::MatrixXd& M,
                       const Eigen::MatrixXd& C, const Eigen::MatrixXd& X,
                       const Eigen::MatrixXd& Xbar, const Eigen::MatrixXd& U) {
  const Eigen::Index T = X.cols();
  if (T == 0) throw EmptySegment("loss_and_grad on empty segment");
  const int r = theta.out();
  const Eigen::MatrixXd A = M.leftCols(r);
  const Eigen::MatrixXd B = M.rightCols(M.cols() - r);

  const MlpForward fx = mlp_forward(theta, X);
  const MlpForward fxb = mlp_forward(theta, Xbar);

  const Eigen::MatrixXd R1 = fxb.out - A * fx.out - B * U;
  const Eigen::MatrixXd R2 = X - C * fx.out;

  LossGrad lg;
  lg.loss = (R1.squaredNorm() + R2.squaredNorm()) / (2.0 * static_cast<double>(T));

  const double invT = 1.0 / static_cast<double>(T);
  const Eigen::MatrixXd S_gbar = invT * R1;
  const Eigen::MatrixXd S_g = -invT * (A.transpose() * R1 + C.transpose() * R2);

  lg.grad = mlp_backward(theta, X, fx, S_g) + mlp_backward(theta, Xbar, fxb, S_gbar);
  return lg;
}

AdamState AdamState::init(int dim, double alpha) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(dim);
  s.v = Eigen::VectorXd::Zero(dim);
  s.alpha = alpha;
  return s;
}

Eigen::VectorXd adam_direction(AdamState& state, const Eigen::VectorXd& grad) {
  if (!grad.allFinite())
    throw NonFiniteState("adam update received non-finite gradient");
  state.step += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  const Eigen::ArrayXd mhat = state.m.array() / bc1;
  const Eigen::ArrayXd vhat = state.v.array() / bc2;
  return state.alpha * mhat / (vhat.sqrt() + state.eps);
}

void adam_step(AdamState& state, Eigen::VectorXd& theta_flat,
               const Eigen::VectorXd& grad) {
  theta_flat -= adam_direction(state, grad);
}

}  // namespace ddkl

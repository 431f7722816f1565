#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ddkl/lift.hpp"
#include "ddkl/vessel.hpp"

namespace ddkl {

// Optional per-channel z-scoring of the learned state. Identity by default;
// when enabled the constants are stored with the model so predictions
// un-scale transparently.
struct Scaler {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d scale = Eigen::Vector3d::Ones();

  bool is_identity() const {
    return mean.isZero(0.0) && (scale.array() == 1.0).all();
  }
  Eigen::Vector3d apply(const Eigen::Vector3d& v) const {
    return (v - mean).cwiseQuotient(scale);
  }
  Eigen::Vector3d invert(const Eigen::Vector3d& v) const {
    return v.cwiseProduct(scale) + mean;
  }
  Eigen::MatrixXd apply_batch(const Eigen::MatrixXd& V) const;
  Eigen::MatrixXd invert_batch(const Eigen::MatrixXd& V) const;

  static Scaler fit(const Eigen::MatrixXd& V);  // per-row mean/std
};

// An agent's estimate set {A, B, C, theta}: lifted linear dynamics plus the
// learned lifting network, predicting body velocities one step ahead.
struct KoopmanModel {
  Eigen::MatrixXd A;  // r x r
  Eigen::MatrixXd B;  // r x m
  Eigen::MatrixXd C;  // n x r
  MlpParams theta;
  Scaler scaler;

  int n() const { return static_cast<int>(C.rows()); }
  int m() const { return static_cast<int>(B.cols()); }
  int r() const { return static_cast<int>(A.rows()); }
};

// Per-agent data matrices: velocities X, shifted velocities Xbar, inputs U,
// and their lifts under the theta used at construction.
struct DataMatrices {
  Eigen::MatrixXd X;     // n x T_i
  Eigen::MatrixXd Xbar;  // n x T_i
  Eigen::MatrixXd U;     // m x T_i
  Eigen::MatrixXd G;     // r x T_i
  Eigen::MatrixXd Gbar;  // r x T_i

  int width() const { return static_cast<int>(X.cols()); }
};

// Throws EmptySegment when the segment has fewer than 2 data pairs.
DataMatrices build_data_matrices(const Segment& seg, const MlpParams& theta,
                                 const Scaler& scaler = {});

// (1/2T) (|Gbar - [A B][G;U]|_F^2 + |X - C G|_F^2)
double local_loss(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                  const Eigen::MatrixXd& C, const DataMatrices& dm);

// v(t+1) = C (A g(v(t)) + B u(t)), with scaling applied around the lift.
Eigen::Vector3d predict_next(const KoopmanModel& model, const Eigen::Vector3d& v,
                             const Eigen::Vector2d& u);

// Columnwise predict_next for sampling-based control.
Eigen::MatrixXd predict_batch(const KoopmanModel& model, const Eigen::MatrixXd& V,
                              const Eigen::MatrixXd& U);

// Iterated predict_next; throws NonFiniteState on divergence mid-rollout.
std::vector<Eigen::Vector3d> rollout(const KoopmanModel& model,
                                     const Eigen::Vector3d& v0,
                                     const std::vector<Eigen::Vector2d>& inputs);

// Checkpoint: shapes plus row-major flattened blocks, 17-significant-digit
// floats, tagged with the config hash.
void save_model(const std::string& path, const KoopmanModel& model,
                const std::string& config_hash);
KoopmanModel load_model(const std::string& path);

}  // namespace ddkl

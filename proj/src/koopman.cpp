#include "ddkl/koopman.hpp"

#include <fstream>

#include "ddkl/errors.hpp"
#include "ddkl/io.hpp"

namespace ddkl {

Eigen::MatrixXd Scaler::apply_batch(const Eigen::MatrixXd& V) const {
  return ((V.colwise() - mean).array().colwise() / scale.array()).matrix();
}

Eigen::MatrixXd Scaler::invert_batch(const Eigen::MatrixXd& V) const {
  return ((V.array().colwise() * scale.array()).matrix()).colwise() + mean;
}

Scaler Scaler::fit(const Eigen::MatrixXd& V) {
  Scaler s;
  s.mean = V.rowwise().mean();
  Eigen::MatrixXd centered = V.colwise() - Eigen::Vector3d(s.mean);
  for (int k = 0; k < 3; ++k) {
    const double var = centered.row(k).squaredNorm() / static_cast<double>(V.cols());
    const double sd = std::sqrt(var);
    s.scale[k] = sd > 1e-12 ? sd : 1.0;  // constant channels stay unscaled
  }
  return s;
}

DataMatrices build_data_matrices(const Segment& seg, const MlpParams& theta,
                                 const Scaler& scaler) {
  const int T = seg.transitions();
  if (T < 1) throw EmptySegment("segment needs at least 2 data pairs");

  DataMatrices dm;
  dm.X.resize(3, T);
  dm.Xbar.resize(3, T);
  dm.U.resize(2, T);
  for (int k = 0; k < T; ++k) {
    dm.X.col(k) = scaler.apply(seg.states[k].v);
    dm.Xbar.col(k) = scaler.apply(seg.states[k + 1].v);
    dm.U.col(k) = seg.inputs[k];
  }
  dm.G = lift_batch(theta, dm.X);
  dm.Gbar = lift_batch(theta, dm.Xbar);
  return dm;
}

double local_loss(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                  const Eigen::MatrixXd& C, const DataMatrices& dm) {
  const double T = static_cast<double>(dm.width());
  const double dyn = (dm.Gbar - A * dm.G - B * dm.U).squaredNorm();
  const double rec = (dm.X - C * dm.G).squaredNorm();
  return (dyn + rec) / (2.0 * T);
}

Eigen::Vector3d predict_next(const KoopmanModel& model, const Eigen::Vector3d& v,
                             const Eigen::Vector2d& u) {
  const Eigen::VectorXd g = lift_forward(model.theta, model.scaler.apply(v));
  return model.scaler.invert(model.C * (model.A * g + model.B * u));
}

Eigen::MatrixXd predict_batch(const KoopmanModel& model, const Eigen::MatrixXd& V,
                              const Eigen::MatrixXd& U) {
  const Eigen::MatrixXd G = lift_batch(model.theta, model.scaler.apply_batch(V));
  return model.scaler.invert_batch(model.C * (model.A * G + model.B * U));
}

std::vector<Eigen::Vector3d> rollout(const KoopmanModel& model,
                                     const Eigen::Vector3d& v0,
                                     const std::vector<Eigen::Vector2d>& inputs) {
  std::vector<Eigen::Vector3d> out;
  out.reserve(inputs.size());
  Eigen::Vector3d v = v0;
  for (const auto& u : inputs) {
    v = predict_next(model, v, u);
    if (!v.allFinite()) throw NonFiniteState("rollout diverged");
    out.push_back(v);
  }
  return out;
}

void save_model(const std::string& path, const KoopmanModel& model,
                const std::string& config_hash) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "ddkl-checkpoint v1\n";
  os << "kind koopman\n";
  os << "config_hash " << config_hash << "\n";
  os << "dims " << model.n() << ' ' << model.m() << ' ' << model.r() << ' '
     << model.theta.hidden() << "\n";
  io::write_matrix_block(os, "scaler_mean", model.scaler.mean);
  io::write_matrix_block(os, "scaler_scale", model.scaler.scale);
  io::write_matrix_block(os, "A", model.A);
  io::write_matrix_block(os, "B", model.B);
  io::write_matrix_block(os, "C", model.C);
  io::write_matrix_block(os, "W1", model.theta.W1);
  io::write_matrix_block(os, "b1", model.theta.b1);
  io::write_matrix_block(os, "W2", model.theta.W2);
  io::write_matrix_block(os, "b2", model.theta.b2);
}

KoopmanModel load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open model file " + path);
  std::string magic, version, key, kind, hash;
  is >> magic >> version;
  if (magic != "ddkl-checkpoint") throw IoError(path + " is not a ddkl checkpoint");
  is >> key >> kind;
  if (kind != "koopman") throw IoError(path + " holds a '" + kind + "' model");
  is >> key >> hash;
  int n = 0, m = 0, r = 0, hidden = 0;
  is >> key >> n >> m >> r >> hidden;

  KoopmanModel model;
  model.scaler.mean = io::read_matrix_block(is, "scaler_mean");
  model.scaler.scale = io::read_matrix_block(is, "scaler_scale");
  model.A = io::read_matrix_block(is, "A");
  model.B = io::read_matrix_block(is, "B");
  model.C = io::read_matrix_block(is, "C");
  model.theta.W1 = io::read_matrix_block(is, "W1");
  model.theta.b1 = io::read_matrix_block(is, "b1");
  model.theta.W2 = io::read_matrix_block(is, "W2");
  model.theta.b2 = io::read_matrix_block(is, "b2");
  if (model.n() != n || model.m() != m || model.r() != r)
    throw IoError(path + ": dims line disagrees with stored blocks");
  return model;
}

}  // namespace ddkl

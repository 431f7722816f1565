#include <doctest.h>

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <string>

#include "ddkl/errors.hpp"
#include "ddkl/koopman.hpp"
#include "ddkl/rng.hpp"
#include "ddkl/vessel.hpp"

using namespace ddkl;

namespace {

Eigen::MatrixXd randn(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = rng.normal();
  return out;
}

Segment make_segment(std::uint64_t seed, int transitions) {
  const Trajectory traj =
      generate_trajectory(VesselParams{}, seed, transitions + 2, 0.02, 0.5, 3);
  return partition_trajectory(traj, {{0, transitions}}).front();
}

std::string temp_file(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("scaler: identity default, fit/apply/invert roundtrip") {
  CHECK(Scaler{}.is_identity());
  Rng rng(1);
  const Eigen::MatrixXd V = 2.0 * randn(rng, 3, 40);
  const Scaler s = Scaler::fit(V);
  CHECK_FALSE(s.is_identity());
  const Eigen::MatrixXd scaled = s.apply_batch(V);
  CHECK(scaled.rowwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  for (int k = 0; k < 3; ++k)
    CHECK(scaled.row(k).squaredNorm() / 40.0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((s.invert_batch(scaled) - V).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.invert(s.apply(V.col(3))) - V.col(3)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("scaler keeps constant channels unscaled") {
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(3, 10);
  V.row(0).setConstant(4.0);
  const Scaler s = Scaler::fit(V);
  CHECK(s.mean(0) == 4.0);
  CHECK(s.scale(0) == 1.0);
  CHECK(s.scale(2) == 1.0);
}

TEST_CASE("data matrices from a two-state segment have width 1") {
  const Segment seg = make_segment(3, 1);
  const MlpParams theta = init_params(2, 3, 4, 6);
  const DataMatrices dm = build_data_matrices(seg, theta);
  CHECK(dm.width() == 1);
  CHECK(dm.X.col(0) == seg.states[0].v);
  CHECK(dm.Xbar.col(0) == seg.states[1].v);
  CHECK(dm.U.col(0) == seg.inputs[0]);
  CHECK(dm.G.col(0) == lift_forward(theta, seg.states[0].v));
  CHECK(dm.Gbar.col(0) == lift_forward(theta, seg.states[1].v));
}

TEST_CASE("data matrices shift: Xbar[:, :T-1] == X[:, 1:]") {
  const Segment seg = make_segment(5, 12);
  const DataMatrices dm = build_data_matrices(seg, init_params(2, 3, 4, 6));
  CHECK(dm.Xbar.leftCols(11) == dm.X.rightCols(11));
  CHECK(dm.Gbar.leftCols(11) == dm.G.rightCols(11));
}

TEST_CASE("data matrices apply the scaler around the lift") {
  const Segment seg = make_segment(5, 6);
  const MlpParams theta = init_params(2, 3, 4, 6);
  Scaler s;
  s.mean = {0.1, -0.2, 0.0};
  s.scale = {2.0, 1.0, 0.5};
  const DataMatrices dm = build_data_matrices(seg, theta, s);
  CHECK(dm.X.col(0) == s.apply(seg.states[0].v));
  CHECK(dm.G.col(0) == lift_forward(theta, s.apply(seg.states[0].v)));
}

TEST_CASE("build_data_matrices rejects a one-state segment") {
  Segment seg;
  seg.states.resize(1);
  CHECK_THROWS_AS(build_data_matrices(seg, init_params(2, 3, 4, 6)), EmptySegment);
}

TEST_CASE("local loss is zero on an exactly consistent fit") {
  Rng rng(4);
  const int r = 4, m = 2, T = 9;
  const Eigen::MatrixXd G = randn(rng, r, T);
  const Eigen::MatrixXd U = randn(rng, m, T);
  const Eigen::MatrixXd A = randn(rng, r, r);
  const Eigen::MatrixXd B = randn(rng, m, r).transpose();
  const Eigen::MatrixXd C = randn(rng, 3, r);

  DataMatrices dm;
  dm.G = G;
  dm.U = U;
  dm.Gbar = A * G + B * U;
  dm.X = C * G;
  dm.Xbar = dm.Gbar.topRows(3);
  CHECK(local_loss(A, B, C, dm) < 1e-24);
}

TEST_CASE("local loss of the zero model is the data energy") {
  Rng rng(5);
  const int r = 4, m = 2, T = 7;
  DataMatrices dm;
  dm.G = randn(rng, r, T);
  dm.Gbar = randn(rng, r, T);
  dm.U = randn(rng, m, T);
  dm.X = randn(rng, 3, T);
  dm.Xbar = randn(rng, 3, T);
  const double expected =
      (dm.Gbar.squaredNorm() + dm.X.squaredNorm()) / (2.0 * T);
  CHECK(local_loss(Eigen::MatrixXd::Zero(r, r), Eigen::MatrixXd::Zero(r, m),
                   Eigen::MatrixXd::Zero(3, r), dm)
        == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("local loss equals the per-transition sum form") {
  Rng rng(6);
  const int r = 5, m = 2, T = 11;
  DataMatrices dm;
  dm.G = randn(rng, r, T);
  dm.Gbar = randn(rng, r, T);
  dm.U = randn(rng, m, T);
  dm.X = randn(rng, 3, T);
  dm.Xbar = randn(rng, 3, T);
  const Eigen::MatrixXd A = randn(rng, r, r);
  const Eigen::MatrixXd B = randn(rng, r, m);
  const Eigen::MatrixXd C = randn(rng, 3, r);

  double sum = 0.0;
  for (int t = 0; t < T; ++t) {
    sum += (dm.Gbar.col(t) - A * dm.G.col(t) - B * dm.U.col(t)).squaredNorm();
    sum += (dm.X.col(t) - C * dm.G.col(t)).squaredNorm();
  }
  CHECK(local_loss(A, B, C, dm)
        == doctest::Approx(sum / (2.0 * T)).epsilon(1e-12));
}

TEST_CASE("predict_next: zero projection predicts zero") {
  KoopmanModel model;
  Rng rng(7);
  model.A = randn(rng, 4, 4);
  model.B = randn(rng, 4, 2);
  model.C = Eigen::MatrixXd::Zero(3, 4);
  model.theta = init_params(2, 3, 4, 4);
  CHECK(predict_next(model, {0.5, -0.1, 0.2}, {0.3, 0.3}) == Eigen::Vector3d::Zero());
}

TEST_CASE("predict_next: B = 0 decouples the input") {
  KoopmanModel model;
  Rng rng(8);
  model.A = randn(rng, 4, 4);
  model.B = Eigen::MatrixXd::Zero(4, 2);
  model.C = randn(rng, 3, 4);
  model.theta = init_params(2, 3, 4, 4);
  const Eigen::Vector3d v = {0.5, -0.1, 0.2};
  CHECK(predict_next(model, v, {0.9, -0.9}) == predict_next(model, v, {0.0, 0.0}));
}

TEST_CASE("exact least-squares model reproduces a single transition") {
  const Segment seg = make_segment(9, 1);
  const MlpParams theta = init_params(3, 3, 8, 8);
  const DataMatrices dm = build_data_matrices(seg, theta);

  // minimum-norm solutions of G-bar = [A B] [G; U] and X = C G on one column
  Eigen::MatrixXd N(10, 1);
  N.topRows(8) = dm.G;
  N.bottomRows(2) = dm.U;
  const Eigen::MatrixXd M = N.transpose()
                                .completeOrthogonalDecomposition()
                                .solve(dm.Gbar.transpose())
                                .transpose();
  const Eigen::MatrixXd C = dm.G.transpose()
                                .completeOrthogonalDecomposition()
                                .solve(dm.X.transpose())
                                .transpose();

  KoopmanModel model;
  model.A = M.leftCols(8);
  model.B = M.rightCols(2);
  model.C = C;
  model.theta = theta;
  const Eigen::Vector3d pred =
      predict_next(model, seg.states[0].v, seg.inputs[0]);
  // C G = X holds exactly, so the prediction is C (A G + B U) = C Gbar;
  // on one column that reconstructs Xbar up to the lift's column space
  const Eigen::Vector3d target = C * dm.Gbar.col(0);
  CHECK((pred - target).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("predict_batch equals columnwise predict_next") {
  KoopmanModel model;
  Rng rng(9);
  model.A = 0.3 * randn(rng, 6, 6);
  model.B = randn(rng, 6, 2);
  model.C = randn(rng, 3, 6);
  model.theta = init_params(4, 3, 8, 6);
  model.scaler.mean = {0.1, 0.0, -0.2};
  model.scaler.scale = {2.0, 1.0, 0.5};

  const Eigen::MatrixXd V = randn(rng, 3, 5);
  const Eigen::MatrixXd U = randn(rng, 2, 5);
  const Eigen::MatrixXd P = predict_batch(model, V, U);
  REQUIRE(P.cols() == 5);
  for (int k = 0; k < 5; ++k)
    CHECK((P.col(k) - predict_next(model, V.col(k), U.col(k))).cwiseAbs().maxCoeff()
          < 1e-14);
}

TEST_CASE("rollout composes predict_next") {
  KoopmanModel model;
  Rng rng(10);
  model.A = 0.2 * randn(rng, 4, 4);
  model.B = randn(rng, 4, 2);
  model.C = 0.5 * randn(rng, 3, 4);
  model.theta = init_params(5, 3, 4, 4);

  CHECK(rollout(model, {0.1, 0.0, 0.0}, {}).empty());

  const Eigen::Vector3d v0 = {0.1, -0.05, 0.2};
  const Eigen::Vector2d u0 = {0.4, -0.1};
  const Eigen::Vector2d u1 = {-0.2, 0.6};
  const auto out = rollout(model, v0, {u0, u1});
  REQUIRE(out.size() == 2);
  CHECK(out[0] == predict_next(model, v0, u0));
  CHECK(out[1] == predict_next(model, out[0], u1));
}

TEST_CASE("rollout throws on divergence") {
  KoopmanModel model;
  model.A = 1e8 * Eigen::MatrixXd::Ones(4, 4);
  model.B = Eigen::MatrixXd::Zero(4, 2);
  model.C = 1e8 * Eigen::MatrixXd::Ones(3, 4);
  model.theta = init_params(5, 3, 4, 4);
  std::vector<Eigen::Vector2d> inputs(64, Eigen::Vector2d::Zero());
  CHECK_THROWS_AS(rollout(model, {1.0, 1.0, 1.0}, inputs), NonFiniteState);
}

TEST_CASE("model checkpoint roundtrip is exact") {
  KoopmanModel model;
  Rng rng(11);
  model.A = randn(rng, 8, 8);
  model.B = randn(rng, 8, 2);
  model.C = randn(rng, 3, 8);
  model.theta = init_params(6, 3, 16, 8);
  model.scaler.mean = {0.25, -0.5, 1.0 / 3.0};
  model.scaler.scale = {1.5, 2.0, 0.125};

  const std::string path = temp_file("ddkl_test_model.model");
  save_model(path, model, "beef4321");
  const KoopmanModel back = load_model(path);
  CHECK(back.A == model.A);
  CHECK(back.B == model.B);
  CHECK(back.C == model.C);
  CHECK(back.theta.flatten() == model.theta.flatten());
  CHECK(back.scaler.mean == model.scaler.mean);
  CHECK(back.scaler.scale == model.scaler.scale);
  std::remove(path.c_str());

  CHECK_THROWS_AS(load_model("/nonexistent/nope.model"), IoError);
}

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "lqrlab/estimation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace lqrlab {
namespace {

// States x_1..x_{n+1} and inputs u_1..u_n from x_{t+1} = A x_t + B u_t + s w_t.
struct Data {
  Mat states, inputs;
};

Data simulate(GaussianRng& rng, const Mat& A, const Mat& B, long n, double noise) {
  Data d{Mat::Zero(A.rows(), n + 1), rng.normal_mat(B.cols(), n)};
  d.states.col(0) = rng.normal_vec(A.rows());
  for (long t = 0; t < n; ++t) {
    d.states.col(t + 1) = A * d.states.col(t) + B * d.inputs.col(t) + noise * rng.normal_vec(A.rows());
  }
  return d;
}

TEST(Ols, NoiselessDataIsIdentifiedExactly) {
  GaussianRng rng(31, Stream::instance);
  const Mat A = 0.3 * rng.normal_mat(3, 3);
  const Mat B = rng.normal_mat(3, 2);
  const Data d = simulate(rng, A, B, 40, 0.0);
  const OlsEstimate e = ols_fit(d.states, d.inputs);
  EXPECT_LT((e.A_hat - A).norm(), 1e-8);
  EXPECT_LT((e.B_hat - B).norm(), 1e-8);
  EXPECT_FALSE(e.rank_deficient);
  EXPECT_EQ(e.n_samples, 40);
}

TEST(Ols, SingleSampleRecoversExcitedCoordinate) {
  // d_x = 1, d_u = 1, z = (1, 0), x_next = 0.7.
  Mat states(1, 2), inputs(1, 1);
  states << 1.0, 0.7;
  inputs << 0.0;
  const OlsEstimate e = ols_fit(states, inputs);
  EXPECT_NEAR(e.A_hat(0, 0), 0.7, 1e-15);
  EXPECT_NEAR(e.B_hat(0, 0), 0.0, 1e-15);
  EXPECT_TRUE(e.rank_deficient);
}

TEST(Ols, MatchesNormalEquationOracle) {
  GaussianRng rng(32, Stream::instance);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat A = 0.4 * rng.normal_mat(2, 2);
    const Mat B = rng.normal_mat(2, 1);
    const Data d = simulate(rng, A, B, 50, 1.0);
    const OlsEstimate e = ols_fit(d.states, d.inputs);
    Mat AB(2, 3);
    AB << e.A_hat, e.B_hat;
    EXPECT_LT((AB - oracle::normal_equations(d.states, d.inputs)).norm(), 1e-9);
  }
}

TEST(Ols, SumsAgreeWithBatch) {
  GaussianRng rng(33, Stream::instance);
  const Data d = simulate(rng, 0.5 * Mat::Identity(2, 2), Mat::Identity(2, 2), 30, 1.0);
  const OlsEstimate batch = ols_fit(d.states, d.inputs);
  Mat Z(4, 30);
  Z << d.states.leftCols(30), d.inputs;
  const OlsEstimate sums = ols_from_sums(Z * Z.transpose(), d.states.rightCols(30) * Z.transpose(), 2, 30);
  EXPECT_LT((batch.A_hat - sums.A_hat).norm(), 1e-12);
  EXPECT_LT((batch.B_hat - sums.B_hat).norm(), 1e-12);
}

TEST(Ols, RejectsMismatchedShapes) {
  EXPECT_THROW(ols_fit(Mat::Zero(2, 5), Mat::Zero(1, 5)), ValidationError);
}

TEST(PsdPinv, InvertsOnRangeAndFlagsDeficiency) {
  Mat L = Mat::Zero(2, 2);
  L(0, 0) = 4.0;
  bool deficient = false;
  const Mat Pi = psd_pinv(L, &deficient);
  EXPECT_TRUE(deficient);
  EXPECT_NEAR(Pi(0, 0), 0.25, 1e-15);
  EXPECT_EQ(Pi(1, 1), 0.0);
}

TEST(ConfidenceRadius, Examples) {
  EXPECT_TRUE(std::isinf(confidence_radius(Mat::Zero(2, 2), 1, 0.1)));
  Mat singular = Mat::Identity(2, 2);
  singular(1, 1) = 0.0;
  EXPECT_TRUE(std::isinf(confidence_radius(singular, 1, 0.1)));
  const double expected = 6.0 * (2.0 * std::log(5.0) + std::log(4.0 * 9.0 / 0.1));
  EXPECT_NEAR(confidence_radius(Mat::Identity(2, 2), 1, 0.1), expected, 1e-12);
  EXPECT_NEAR(expected, 54.63, 5e-3);
}

TEST(ConfidenceRadius, DecreasesUnderScaling) {
  for (double c : {1.0, 2.0, 10.0, 1e3}) {
    const double d = 2.0, k = 3.0, delta = 0.01;
    if (d * std::log(c) > (c - 1.0) * (d * std::log(5.0) + std::log(4 * k * k * 9.0 / delta))) continue;
    EXPECT_LE(confidence_radius(c * Mat::Identity(2, 2), 3, delta),
              confidence_radius(Mat::Identity(2, 2), 3, delta));
  }
}

TEST(ConfidenceRadius, RejectsBadArguments) {
  EXPECT_THROW(confidence_radius(Mat::Identity(2, 2), 1, 0.0), ValidationError);
  EXPECT_THROW(confidence_radius(Mat::Identity(2, 2), 1, 1.0), ValidationError);
  EXPECT_THROW(confidence_radius(Mat::Identity(2, 2), 0, 0.1), ValidationError);
}

TEST(Projector, ZeroGainProjectsOntoInputBlock) {
  const ExplorationProjector p = exploration_projector(Mat::Zero(2, 3));
  Mat expected = Mat::Zero(5, 5);
  expected.bottomRightCorner(2, 2) = Mat::Identity(2, 2);
  EXPECT_LT((p.P_mat - expected).norm(), 1e-14);
}

TEST(Projector, ScalarUnitGain) {
  const ExplorationProjector p = exploration_projector(Mat::Ones(1, 1));
  const double s = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(p.basis_perp(0, 0)), s, 1e-15);
  EXPECT_NEAR(p.basis_perp(0, 0), p.basis_perp(1, 0), 1e-15);
  EXPECT_NEAR(std::abs(p.basis_par(0, 0)), s, 1e-15);
  EXPECT_NEAR(p.basis_par(0, 0), -p.basis_par(1, 0), 1e-15);
}

TEST(Projector, IdempotentAndAnnihilatesClosedLoopDirections) {
  GaussianRng rng(34, Stream::instance);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat K = rng.normal_mat(2, 3);
    const ExplorationProjector p = exploration_projector(K);
    EXPECT_LT((p.P_mat * p.P_mat - p.P_mat).norm(), 1e-12);
    EXPECT_LT((p.P_mat - p.P_mat.transpose()).norm(), 1e-14);
    Mat IK(5, 3);
    IK << Mat::Identity(3, 3), K;
    EXPECT_LT((p.P_mat * IK).norm(), 1e-12);
    EXPECT_NEAR(p.P_mat.trace(), 2.0, 1e-12);
  }
}

TEST(TwoScale, BlockDiagonalAndIdentity) {
  GaussianRng rng(35, Stream::instance);
  const ExplorationProjector p = exploration_projector(rng.normal_mat(1, 2));
  const Mat I = Mat::Identity(3, 3);
  const Mat L = 2.0 * p.P_mat + 7.0 * (I - p.P_mat);
  const TwoScaleDiagnostics d = two_scale_diagnostics(L, p);
  EXPECT_NEAR(d.min_par, 2.0, 1e-12);
  EXPECT_NEAR(d.max_par, 2.0, 1e-12);
  EXPECT_NEAR(d.min_perp, 7.0, 1e-12);
  EXPECT_NEAR(d.max_perp, 7.0, 1e-12);
  EXPECT_NEAR(d.cross, 0.0, 1e-12);
  const TwoScaleDiagnostics id = two_scale_diagnostics(I, p);
  EXPECT_NEAR(id.min_par, 1.0, 1e-12);
  EXPECT_NEAR(id.max_perp, 1.0, 1e-12);
}

TEST(TwoScale, PlantedCrossBlock) {
  GaussianRng rng(36, Stream::instance);
  const ExplorationProjector p = exploration_projector(rng.normal_mat(2, 3));
  Mat C = rng.normal_mat(2, 3);
  C *= 0.37 / op_norm(C);
  Mat blocks = 10.0 * Mat::Identity(5, 5);
  blocks.topRightCorner(2, 3) = C;
  blocks.bottomLeftCorner(3, 2) = C.transpose();
  Mat Q(5, 5);
  Q << p.basis_par, p.basis_perp;
  EXPECT_NEAR(two_scale_diagnostics(Q * blocks * Q.transpose(), p).cross, 0.37, 1e-9);
}

TEST(SquaredLowner, BlockDiagonalPasses) {
  GaussianRng rng(37, Stream::instance);
  const ExplorationProjector p = exploration_projector(rng.normal_mat(1, 2));
  const Mat I = Mat::Identity(3, 3);
  const Mat X = 1.0 * p.P_mat + 16.0 * (I - p.P_mat);
  EXPECT_TRUE(squared_lowner_check(X, p, 1.0, 16.0, 2.0));
}

TEST(SquaredLowner, PreconditionViolationsThrow) {
  GaussianRng rng(38, Stream::instance);
  const ExplorationProjector p = exploration_projector(rng.normal_mat(1, 2));
  const Mat I = Mat::Identity(3, 3);
  Mat blocks = Mat::Zero(3, 3);
  blocks(0, 0) = 1.0;
  blocks.bottomRightCorner(2, 2) = 16.0 * Mat::Identity(2, 2);
  blocks(0, 1) = blocks(1, 0) = 1.9;
  Mat Q(3, 3);
  Q << p.basis_par, p.basis_perp;
  const Mat X = Q * blocks * Q.transpose();
  // Cross term 1.9 above nu = 1.5.
  EXPECT_THROW(squared_lowner_check(X, p, 1.0, 16.0, 1.5), PreconditionError);
  // nu above sqrt(lambda1 lambda2) / 2.
  EXPECT_THROW(squared_lowner_check(1.0 * p.P_mat + 16.0 * (I - p.P_mat), p, 1.0, 16.0, 2.5),
               PreconditionError);
  // nu below lambda1.
  EXPECT_THROW(squared_lowner_check(1.0 * p.P_mat + 16.0 * (I - p.P_mat), p, 1.0, 16.0, 0.5),
               PreconditionError);
  // X not above the floor.
  EXPECT_THROW(squared_lowner_check(0.5 * I, p, 1.0, 16.0, 2.0), PreconditionError);
}

}  // namespace
}  // namespace lqrlab

#include <gtest/gtest.h>

#include <cmath>

#include "lqrlab/control_core.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace lqrlab {
namespace {

using testing::kPhi;
using testing::random_instance;
using testing::scalar;

TEST(SpectralRadius, Examples) {
  EXPECT_NEAR(spectral_radius(Mat::Identity(3, 3)), 1.0, 1e-14);
  EXPECT_NEAR(spectral_radius(scalar(0.5)), 0.5, 1e-15);
  Mat N(2, 2);
  N << 0.0, 2.0, 0.0, 0.0;
  EXPECT_NEAR(spectral_radius(N), 0.0, 1e-14);
}

TEST(SpectralRadius, ComplexPair) {
  Mat R(2, 2);
  R << 0.0, -0.8, 0.8, 0.0;
  EXPECT_NEAR(spectral_radius(R), 0.8, 1e-14);
}

TEST(SpectralRadius, RejectsNonSquare) { EXPECT_THROW(spectral_radius(Mat::Zero(2, 3)), ValidationError); }

TEST(Dlyap, ZeroDynamicsReturnsY) {
  GaussianRng rng(1, Stream::instance);
  const Mat Y = testing::random_psd(rng, 3);
  EXPECT_LT((solve_dlyap(Mat::Zero(3, 3), Y) - Y).norm(), 1e-14);
}

TEST(Dlyap, ScalarGeometricSeries) {
  EXPECT_NEAR(solve_dlyap(scalar(0.5), scalar(1.0))(0, 0), 4.0 / 3.0, 1e-14);
}

TEST(Dlyap, ZeroRightHandSide) {
  GaussianRng rng(2, Stream::instance);
  Mat A = rng.normal_mat(3, 3);
  A *= 0.7 / spectral_radius(A);
  EXPECT_LT(solve_dlyap(A, Mat::Zero(3, 3)).norm(), 1e-14);
}

TEST(Dlyap, MatchesSeriesOracleAndDominatesY) {
  GaussianRng rng(3, Stream::instance);
  for (int trial = 0; trial < 20; ++trial) {
    const long n = 1 + trial % 5;
    Mat A = rng.normal_mat(n, n);
    A *= 0.9 / spectral_radius(A);
    const Mat Y = testing::random_psd(rng, n);
    const Mat P = solve_dlyap(A, Y);
    const Mat ref = oracle::series_dlyap(A, Y);
    EXPECT_LT((P - ref).norm(), 1e-9 * ref.norm());
    EXPECT_GE(min_eig_sym(P - Y), -1e-9 * P.norm());
    EXPECT_LT((A.transpose() * P * A + Y - P).norm(), 1e-10 * P.norm());
  }
}

TEST(Dlyap, DoublingPathAgreesWithSeries) {
  GaussianRng rng(4, Stream::instance);
  Mat A = rng.normal_mat(70, 70);
  A *= 0.8 / spectral_radius(A);
  const Mat Y = Mat::Identity(70, 70);
  const Mat P = solve_dlyap(A, Y);
  EXPECT_LT((P - oracle::series_dlyap(A, Y)).norm(), 1e-9 * P.norm());
}

TEST(Dlyap, Monotone) {
  GaussianRng rng(5, Stream::instance);
  for (int trial = 0; trial < 20; ++trial) {
    Mat A = rng.normal_mat(4, 4);
    A *= 0.95 / spectral_radius(A);
    const Mat Y = testing::random_psd(rng, 4);
    const Mat Z = Y + testing::random_psd(rng, 4);
    const Mat diff = solve_dlyap(A, Z) - solve_dlyap(A, Y);
    EXPECT_GE(min_eig_sym(diff), -1e-9 * diff.norm());
  }
}

TEST(Dlyap, TransposeSharesTrace) {
  // tr sum (A')^k A^k = sum ||A^k||_F^2 = tr sum A^k (A')^k.
  GaussianRng rng(6, Stream::instance);
  for (int trial = 0; trial < 20; ++trial) {
    Mat A = rng.normal_mat(4, 4);
    A *= 0.9 / spectral_radius(A);
    const double a = dlyap_identity(A).trace();
    const double b = dlyap_identity(A.transpose()).trace();
    EXPECT_NEAR(a, b, 1e-8 * a);
  }
}

TEST(Dlyap, TransposeOpNormAgreesForNormalMatrices) {
  GaussianRng rng(7, Stream::instance);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat S = rng.normal_mat(4, 4);
    const Mat Q = Eigen::HouseholderQR<Mat>(rng.normal_mat(4, 4)).householderQ();
    Mat A = Q * (0.5 * (S + S.transpose())) * Q.transpose();
    A *= 0.9 / spectral_radius(A);
    const double a = op_norm_sym(dlyap_identity(A));
    const double b = op_norm_sym(dlyap_identity(A.transpose()));
    EXPECT_NEAR(a, b, 1e-8 * a);
  }
}

TEST(Dlyap, TransposeOpNormDiffersInGeneral) {
  // The operator norms of the two Gramians are not equal for non-normal A.
  GaussianRng rng(6, Stream::instance);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Mat A = rng.normal_mat(4, 4);
    A *= 0.9 / spectral_radius(A);
    const double a = op_norm_sym(dlyap_identity(A));
    const double b = op_norm_sym(dlyap_identity(A.transpose()));
    worst = std::max(worst, std::abs(a - b) / a);
  }
  EXPECT_GT(worst, 1e-3);
}

TEST(Dlyap, RejectsUnstable) {
  EXPECT_THROW(solve_dlyap(scalar(1.0), scalar(1.0)), UnstableInputError);
  EXPECT_THROW(solve_dlyap(scalar(1.0 - 1e-10), scalar(1.0)), UnstableInputError);
}

TEST(Dare, ScalarGoldenRatio) {
  const RiccatiSolution s = solve_dare(LqrInstance::identity_costs(scalar(1.0), scalar(1.0)));
  EXPECT_NEAR(s.P(0, 0), kPhi, 1e-10);
  EXPECT_NEAR(s.K(0, 0), -kPhi / (1.0 + kPhi), 1e-10);
  EXPECT_NEAR(s.P(0, 0), oracle::scalar_dare(1.0, 1.0, 1.0, 1.0), 1e-12);
}

TEST(Dare, ScalarClosedFormAcrossParameters) {
  for (double a : {0.2, 0.9, 1.5, 3.0})
    for (double b : {0.5, 1.0, 2.0}) {
      const LqrInstance inst(scalar(a), scalar(b), scalar(2.0), scalar(1.0));
      EXPECT_NEAR(solve_dare(inst).P(0, 0), oracle::scalar_dare(a, b, 2.0, 1.0), 1e-9);
    }
}

TEST(Dare, ZeroDynamicsCollapsesToCosts) {
  const RiccatiSolution s =
      solve_dare(LqrInstance::identity_costs(Mat::Zero(3, 3), Mat::Identity(3, 3)));
  EXPECT_LT((s.P - Mat::Identity(3, 3)).norm(), 1e-14);
  EXPECT_LT(s.K.norm(), 1e-14);
}

TEST(Dare, DiagonalResidualAndLongerIterationOracle) {
  Mat A = Mat::Zero(2, 2);
  A.diagonal() << 0.9, 0.8;
  const LqrInstance inst = LqrInstance::identity_costs(A, Mat::Identity(2, 2));
  const RiccatiSolution s = solve_dare(inst);
  EXPECT_LE(s.residual, 1e-12);
  // Plain value iteration from R_x, run ten times longer.
  Mat P = Mat::Identity(2, 2);
  for (int i = 0; i < 10 * s.iterations; ++i) P = riccati_step(inst, P);
  EXPECT_LT((P - s.P).norm(), 1e-11);
}

TEST(Dare, NormBoundsOnRandomInstances) {
  GaussianRng rng(9, Stream::instance);
  for (int trial = 0; trial < 50; ++trial) {
    const long dx = 1 + trial % 5;
    const long du = 1 + trial % dx;
    const LqrInstance inst = random_instance(rng, dx, du, 0.3 + 0.02 * trial);
    const RiccatiSolution s = solve_dare(inst);
    const double p = op_norm_sym(s.P);
    const Mat Acl = inst.A() + inst.B() * s.K;
    EXPECT_LE(s.residual, 1e-10);
    EXPECT_GE(min_eig_sym(s.P - Mat::Identity(dx, dx)), -1e-9 * p);
    EXPECT_LE(std::pow(op_norm(s.K), 2), p * (1 + 1e-9));
    EXPECT_LE(std::pow(op_norm(Acl), 2), p * (1 + 1e-9));
    EXPECT_LT(spectral_radius(Acl), 1.0);
  }
}

TEST(Dare, AgreesWithPolicyIteration) {
  GaussianRng rng(10, Stream::instance);
  for (int trial = 0; trial < 10; ++trial) {
    const LqrInstance inst = random_instance(rng, 3, 2, 1.1);
    const RiccatiSolution s = solve_dare(inst);
    const RiccatiSolution ref = oracle::policy_iteration_dare(inst);
    EXPECT_LT((s.P - ref.P).norm(), 1e-9 * ref.P.norm());
  }
}

TEST(Dare, WarmStartConvergesToSameFixedPoint) {
  GaussianRng rng(11, Stream::instance);
  const LqrInstance inst = random_instance(rng, 3, 1, 1.05);
  const RiccatiSolution cold = solve_dare(inst);
  DareOptions opts;
  opts.initial = cold.P * 1.3;
  const RiccatiSolution warm = solve_dare(inst, opts);
  EXPECT_LT((warm.P - cold.P).norm(), 1e-9 * cold.P.norm());
}

TEST(Dare, UncontrollableUnstableModeIsNotStabilizable) {
  Mat A = Mat::Zero(2, 2);
  A.diagonal() << 1.2, 0.5;
  Mat B(2, 1);
  B << 0.0, 1.0;
  EXPECT_THROW(solve_dare(LqrInstance::identity_costs(A, B)), NotStabilizableError);
}

TEST(Dare, RejectsBadOptions) {
  DareOptions opts;
  opts.tol = 0.0;
  EXPECT_THROW(solve_dare(LqrInstance::identity_costs(scalar(0.5), scalar(1.0)), opts), ValidationError);
}

TEST(Instance, StandardNormalizationIsEnforced) {
  EXPECT_THROW(LqrInstance(scalar(0.5), scalar(1.0), scalar(0.5), scalar(1.0)), ValidationError);
  EXPECT_THROW(LqrInstance(scalar(0.5), scalar(1.0), scalar(1.0), scalar(2.0)), ValidationError);
  EXPECT_NO_THROW(
      LqrInstance(scalar(0.5), scalar(1.0), scalar(0.5), scalar(2.0), CostNormalization::general));
  EXPECT_THROW(LqrInstance(Mat::Zero(2, 2), Mat::Zero(3, 1), Mat::Identity(2, 2), scalar(1.0)),
               ValidationError);
}

TEST(ControllerValue, OptimalGainReproducesP) {
  GaussianRng rng(12, Stream::instance);
  for (int trial = 0; trial < 10; ++trial) {
    const LqrInstance inst = random_instance(rng, 3, 2, 0.95);
    const RiccatiSolution s = solve_dare(inst);
    const ControllerValue v = controller_value(inst, s.K);
    EXPECT_LT((v.P - s.P).cwiseAbs().maxCoeff(), 1e-8 * op_norm_sym(s.P));
    EXPECT_NEAR(v.J, s.P.trace(), 1e-8 * s.P.trace());
  }
}

TEST(ControllerValue, Examples) {
  const ControllerValue zero = controller_value(LqrInstance::identity_costs(scalar(0.0), scalar(1.0)), scalar(0.0));
  EXPECT_NEAR(zero.P(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(zero.J, 1.0, 1e-15);
  const ControllerValue dead =
      controller_value(LqrInstance::identity_costs(scalar(0.5), scalar(1.0)), scalar(-0.5));
  EXPECT_NEAR(dead.P(0, 0), 1.25, 1e-15);
}

TEST(ControllerValue, SuboptimalGainDominatesOptimum) {
  GaussianRng rng(13, Stream::instance);
  const LqrInstance inst = random_instance(rng, 3, 2, 0.8);
  const RiccatiSolution s = solve_dare(inst);
  const ControllerValue v = controller_value(inst, 0.5 * s.K);
  EXPECT_GE(min_eig_sym(v.P - s.P), -1e-9 * op_norm_sym(s.P));
}

TEST(ControllerValue, DestabilizingGainThrows) {
  EXPECT_THROW(controller_value(LqrInstance::identity_costs(scalar(0.5), scalar(1.0)), scalar(1.0)),
               UnstableInputError);
}

TEST(ControllerValue, StrongStabilityBound) {
  // A = S D S^{-1} with ||D|| = 1 - gamma and cond(S) = kappa.
  GaussianRng rng(14, Stream::instance);
  for (int trial = 0; trial < 10; ++trial) {
    const Mat Q = rng.normal_mat(3, 3).householderQr().householderQ();
    Vec s(3);
    s << 1.0, 1.5, 2.0;
    const Mat S = Q * s.asDiagonal();
    const double gamma = 0.2;
    const Mat D = (1.0 - gamma) * Mat(rng.normal_mat(3, 3).householderQr().householderQ());
    const Mat A = S * D * S.inverse();
    const double kappa = 2.0;
    const LqrInstance inst = LqrInstance::identity_costs(A, Mat::Identity(3, 1));
    EXPECT_LE(op_norm_sym(controller_value(inst, Mat::Zero(1, 3)).P), kappa * kappa / gamma);
  }
}

TEST(Hinf, Examples) {
  EXPECT_NEAR(hinf_norm(Mat::Zero(2, 2)), 1.0, 1e-12);
  EXPECT_NEAR(hinf_norm(scalar(0.5)), 2.0, 1e-9);
  EXPECT_NEAR(hinf_norm(scalar(0.9)), 10.0, 1e-8);
  // Peak at z = -1 exercises the wrap-around of the grid.
  EXPECT_NEAR(hinf_norm(scalar(-0.9)), 10.0, 1e-8);
}

TEST(Hinf, BoundedByDlyapNorm) {
  GaussianRng rng(15, Stream::instance);
  for (int trial = 0; trial < 30; ++trial) {
    Mat A = rng.normal_mat(3, 3);
    A *= (0.1 + 0.03 * trial) / spectral_radius(A);
    EXPECT_LE(hinf_norm(A), 2.0 * std::pow(op_norm_sym(dlyap_identity(A)), 1.5));
  }
}

TEST(Hinf, RejectsUnstable) { EXPECT_THROW(hinf_norm(scalar(1.1)), UnstableInputError); }

}  // namespace
}  // namespace lqrlab

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include "maskbot/error.hpp"
#include "maskbot/kinematics.hpp"
#include "test_support.hpp"

namespace maskbot {
namespace {

using testing::Rng;
using testing::poses_near;

DHParams zero_dh() { return DHParams{}; }

// Independent chain: explicit 4x4 homogeneous DH matrices.
Eigen::Matrix4d dh_matrix(double theta, double d, double a, double alpha) {
  const double ct = std::cos(theta), st = std::sin(theta), ca = std::cos(alpha), sa = std::sin(alpha);
  Eigen::Matrix4d m;
  m << ct, -st * ca, st * sa, a * ct,
       st, ct * ca, -ct * sa, a * st,
       0, sa, ca, d,
       0, 0, 0, 1;
  return m;
}

Eigen::Matrix4d reference_fk(const DHParams& dh, const JointVector& q) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& j = dh.joints[i];
    t = t * dh_matrix(q[i] + j.theta_offset, j.d, j.a, j.alpha);
  }
  return t;
}

Jacobian finite_difference_jacobian(const DHParams& dh, const JointVector& q, const Pose& tool, double eps) {
  Jacobian j;
  for (int i = 0; i < kNumJoints; ++i) {
    JointVector qp = q, qm = q;
    qp[i] += eps;
    qm[i] -= eps;
    const Pose fp = forward_kinematics(dh, qp, tool), fm = forward_kinematics(dh, qm, tool);
    j.block<3, 1>(0, i) = (fp.translation - fm.translation) / (2 * eps);
    j.block<3, 1>(3, i) = log_so3(fp.rotation * fm.rotation.transpose()) / (2 * eps);
  }
  return j;
}

TEST(DH, Ur3PublishedValues) {
  const DHParams dh = DHParams::ur3();
  const double a[] = {0, -0.24365, -0.21325, 0, 0, 0};
  const double d[] = {0.1519, 0, 0, 0.11235, 0.08535, 0.0819};
  const double alpha[] = {kPi / 2, 0, 0, kPi / 2, -kPi / 2, 0};
  for (int i = 0; i < kNumJoints; ++i) {
    EXPECT_EQ(dh.joints[i].a, a[i]);
    EXPECT_EQ(dh.joints[i].d, d[i]);
    EXPECT_EQ(dh.joints[i].alpha, alpha[i]);
    EXPECT_EQ(dh.joints[i].theta_offset, 0.0);
  }
}

TEST(DH, ValidationRejectsNonFinite) {
  DHParams dh = DHParams::ur3();
  dh.joints[2].d = std::nan("");
  try {
    dh.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(e.field().find("robot.dh"), std::string::npos);
  }
}

TEST(Limits, Ur3Defaults) {
  const JointLimits lim = JointLimits::ur3();
  for (int i = 0; i < kNumJoints; ++i) {
    EXPECT_EQ(lim.min[i], -2 * kPi);
    EXPECT_EQ(lim.max[i], 2 * kPi);
    EXPECT_NEAR(lim.max_speed[i], i < 3 ? kPi : 2 * kPi, 1e-15);
  }
  JointLimits bad = lim;
  bad.max_speed[4] = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = lim;
  bad.min[1] = bad.max[1];
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(ForwardKinematics, CoincidentAxesArePureRotation) {
  Rng rng(30);
  for (int n = 0; n < 50; ++n) {
    const JointVector q = rng.joints();
    const Pose p = forward_kinematics(zero_dh(), q);
    EXPECT_LT(p.translation.norm(), 1e-15);
    EXPECT_LT(rotation_angle_between(p.rotation, rot_z(q.sum())), 1e-12);
  }
}

TEST(ForwardKinematics, Ur3AtZeroMatchesHandChain) {
  // All joints zero: the alphas compose to rotX(pi/2); the arm lies along -X
  // with the wrist offsets along -Y and the d5 drop along -Z.
  const Pose p = forward_kinematics(DHParams::ur3(), JointVector::Zero());
  EXPECT_LT((p.translation - Vec3(-0.24365 - 0.21325, -(0.11235 + 0.0819), 0.1519 - 0.08535)).norm(), 1e-15);
  EXPECT_LT(testing::max_abs_diff(p.rotation, rot_x(kPi / 2)), 1e-15);
}

TEST(ForwardKinematics, MatchesHomogeneousMatrixChain) {
  Rng rng(31);
  DHParams dh = DHParams::ur3();
  dh.joints[1].theta_offset = 0.3;  // exercise the offsets too
  for (int n = 0; n < 200; ++n) {
    const JointVector q = rng.joints();
    const Pose p = forward_kinematics(dh, q);
    const Eigen::Matrix4d ref = reference_fk(dh, q);
    EXPECT_LT(testing::max_abs_diff(p.rotation, ref.block<3, 3>(0, 0)), 1e-12);
    EXPECT_LT((p.translation - ref.block<3, 1>(0, 3)).norm(), 1e-12);
  }
}

TEST(ForwardKinematics, BaseJointRotatesAboutZ) {
  JointVector q = JointVector::Zero();
  const Vec3 p0 = forward_kinematics(DHParams::ur3(), q).translation;
  q[0] = kPi / 2;
  const Vec3 p1 = forward_kinematics(DHParams::ur3(), q).translation;
  EXPECT_LT((p1 - rot_z(kPi / 2) * p0).norm(), 1e-12);
}

TEST(ForwardKinematics, ToolIsAppliedLast) {
  Rng rng(32);
  const Pose tool{rot_y(0.2), Vec3(0.04, 0, 0.01)};
  const JointVector q = rng.joints();
  EXPECT_TRUE(poses_near(forward_kinematics(DHParams::ur3(), q, tool),
                         compose(forward_kinematics(DHParams::ur3(), q), tool), 1e-15));
}

TEST(ForwardKinematics, LinkFramesEndAtFlange) {
  Rng rng(33);
  const JointVector q = rng.joints();
  const auto frames = link_frames(DHParams::ur3(), q);
  EXPECT_TRUE(poses_near(frames[0], Pose::identity(), 0.0));
  EXPECT_TRUE(poses_near(frames[kNumJoints], forward_kinematics(DHParams::ur3(), q), 1e-15));
}

TEST(Jacobian, CoincidentAxesHaveNoLinearPart) {
  Rng rng(34);
  const Jacobian j = jacobian(zero_dh(), rng.joints());
  EXPECT_EQ(j.topRows<3>().cwiseAbs().maxCoeff(), 0.0);
  for (int i = 0; i < kNumJoints; ++i) EXPECT_LT((j.block<3, 1>(3, i) - Vec3::UnitZ()).norm(), 1e-15);
}

TEST(Jacobian, MatchesCentralDifferences) {
  Rng rng(35);
  const Pose tool = ToolOffset::defaults().projector_mount;
  double worst = 0;
  for (int n = 0; n < 100; ++n) {
    const JointVector q = rng.joints();
    const Jacobian j = jacobian(DHParams::ur3(), q, tool);
    const Jacobian fd = finite_difference_jacobian(DHParams::ur3(), q, tool, 1e-6);
    for (int c = 0; c < kNumJoints; ++c) {
      const double scale = std::max(j.col(c).norm(), 1e-3);
      worst = std::max(worst, (j.col(c) - fd.col(c)).norm() / scale);
    }
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Jacobian, ForwardDifferenceAlsoAgrees) {
  Rng rng(36);
  const double eps = 1e-6;
  for (int n = 0; n < 20; ++n) {
    const JointVector q = rng.joints();
    const Jacobian j = jacobian(DHParams::ur3(), q);
    const Pose f0 = forward_kinematics(DHParams::ur3(), q);
    for (int c = 0; c < kNumJoints; ++c) {
      JointVector qp = q;
      qp[c] += eps;
      const Vec3 dp = (forward_kinematics(DHParams::ur3(), qp).translation - f0.translation) / eps;
      EXPECT_LT((dp - j.block<3, 1>(0, c)).norm(), 1e-5 * std::max(1.0, dp.norm()));
    }
  }
}

TEST(Jacobian, StretchedPostureIsSingular) {
  // q = 0: upper arm and forearm collinear and wrist joints 4 and 6 aligned.
  const Jacobian j = jacobian(DHParams::ur3(), JointVector::Zero());
  Eigen::JacobiSVD<Jacobian> svd(j);
  EXPECT_LT(svd.singularValues()(kNumJoints - 1), 1e-3);
  JointVector bent;
  bent << 0.3, -1.2, 1.4, -1.0, 1.1, 0.2;
  Eigen::JacobiSVD<Jacobian> svd2(jacobian(DHParams::ur3(), bent));
  EXPECT_GT(svd2.singularValues()(kNumJoints - 1), 1e-2);
}

TEST(PoseResidual, GeodesicAndEuclidean) {
  const Pose a{rot_z(0.25), Vec3(1, 2, 3)};
  const Pose b{rot_z(-0.05), Vec3(1, 2, 3.5)};
  const PoseResidual r = pose_residual(a, b);
  EXPECT_NEAR(r.position, 0.5, 1e-15);
  EXPECT_NEAR(r.rotation, 0.3, 1e-12);
}

TEST(InverseKinematics, FixedPointNeedsNoIterations) {
  Rng rng(37);
  const Pose tool = ToolOffset::defaults().projector_mount;
  for (int n = 0; n < 20; ++n) {
    const JointVector q = rng.joints();
    const IkResult r = solve_ik(DHParams::ur3(), forward_kinematics(DHParams::ur3(), q, tool), q, tool);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_EQ(r.q, q);
  }
}

TEST(InverseKinematics, RecoversFromPerturbedSeed) {
  Rng rng(38);
  const DHParams dh = DHParams::ur3();
  const Pose tool = ToolOffset::defaults().projector_mount;
  for (int n = 0; n < 1000; ++n) {
    const JointVector q = rng.joints();
    const Pose target = forward_kinematics(dh, q, tool);
    JointVector seed = q;
    for (int i = 0; i < kNumJoints; ++i) seed[i] += rng.uniform(-0.1, 0.1);
    // Some samples sit next to a wrist singularity and need extra iterations.
    const JointVector sol = inverse_kinematics(dh, target, seed, tool, 1e-7, 1000);
    const PoseResidual res = pose_residual(forward_kinematics(dh, sol, tool), target);
    EXPECT_LT(res.position, 1e-6) << "sample " << n;
    EXPECT_LT(res.rotation, 1e-6) << "sample " << n;
  }
}

TEST(InverseKinematics, ConvergesNextToWristSingularity) {
  const DHParams dh = DHParams::ur3();
  const Pose tool = ToolOffset::defaults().projector_mount;
  Rng rng(39);
  for (double q5 : {1e-3, 1e-4, 1e-5}) {
    JointVector q;
    q << 0.4, -1.2, 1.3, -0.5, q5, 0.7;
    const Pose target = forward_kinematics(dh, q, tool);
    JointVector seed = q;
    for (int i = 0; i < kNumJoints; ++i) seed[i] += rng.uniform(-0.05, 0.05);
    const IkResult r = solve_ik(dh, target, seed, tool);
    EXPECT_TRUE(r.converged) << "q5 " << q5;
    EXPECT_LT(r.residual.position, 1e-9);
    EXPECT_LT(r.residual.rotation, 1e-9);
  }
}

TEST(InverseKinematics, UnreachableTarget) {
  const Pose far = Pose::from_translation({10, 0, 0});
  try {
    solve_ik(DHParams::ur3(), far, JointVector::Zero());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnreachable);
  }
}

TEST(InverseKinematics, NotConvergedCarriesResidual) {
  JointVector q;
  q << 0.3, -1.2, 1.4, -1.0, 1.1, 0.2;
  JointVector seed = q;
  seed[1] += 1.0;
  seed[3] -= 1.0;
  const Pose target = forward_kinematics(DHParams::ur3(), q);
  try {
    inverse_kinematics(DHParams::ur3(), target, seed, Pose{}, 1e-9, 1);
    FAIL();
  } catch (const NotConverged& e) {
    EXPECT_GT(e.residual(), 1e-9);
    EXPECT_EQ(e.code(), ErrorCode::kNotConverged);
  }
  const IkResult r = solve_ik(DHParams::ur3(), target, seed, Pose{}, IkOptions{1e-9, 1e-9, 1});
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 1);
}

TEST(InverseKinematics, ContinuousInTargetAwayFromSingularities) {
  Rng rng(39);
  const DHParams dh = DHParams::ur3();
  int checked = 0;
  for (int n = 0; n < 200 && checked < 50; ++n) {
    const JointVector q = rng.joints();
    const Jacobian j = jacobian(dh, q);
    Eigen::JacobiSVD<Jacobian> svd(j);
    const double sigma_min = svd.singularValues()(kNumJoints - 1);
    if (sigma_min < 0.05) continue;
    ++checked;
    const Vec3 dt = rng.unit() * 1e-4, dr = rng.unit() * 1e-4;
    const Pose base = forward_kinematics(dh, q);
    const Pose moved{exp_so3(dr) * base.rotation, base.translation + dt};
    const IkResult r = solve_ik(dh, moved, q);
    ASSERT_TRUE(r.converged);
    Eigen::Matrix<double, 6, 1> twist;
    twist << dt, dr;
    EXPECT_LE((r.q - q).norm(), 1.1 * twist.norm() / sigma_min);
  }
  EXPECT_GE(checked, 30);
}

TEST(ClampStep, NoMotionWhenAtTarget) {
  Rng rng(40);
  const JointVector q = rng.joints();
  EXPECT_EQ(clamp_step(q, q, 0.033, JointLimits::ur3()), q);
}

TEST(ClampStep, StepBoundedBySpeed) {
  JointLimits lim = JointLimits::ur3();
  lim.max_speed.setConstant(1.0);
  JointVector q = JointVector::Zero(), want = JointVector::Zero();
  want[2] = 1.0;
  const JointVector out = clamp_step(q, want, 0.1, lim);
  EXPECT_DOUBLE_EQ(out[2], 0.1);
  for (int i : {0, 1, 3, 4, 5}) EXPECT_EQ(out[i], 0.0);
}

TEST(ClampStep, SaturatesAtPositionLimit) {
  const JointLimits lim = JointLimits::ur3();
  JointVector q = JointVector::Zero();
  q[4] = lim.max[4];
  JointVector want = q;
  want[4] += 0.5;
  EXPECT_EQ(clamp_step(q, want, 0.033, lim)[4], lim.max[4]);
}

TEST(ClampStep, NeverViolatesLimitsOrSpeed) {
  Rng rng(41);
  JointLimits lim = JointLimits::ur3();
  for (int i = 0; i < kNumJoints; ++i) {
    lim.min[i] = -rng.uniform(1.0, 6.0);
    lim.max[i] = rng.uniform(1.0, 6.0);
  }
  for (int n = 0; n < 5000; ++n) {
    JointVector q;
    for (int i = 0; i < kNumJoints; ++i) q[i] = rng.uniform(lim.min[i], lim.max[i]);
    const JointVector want = rng.joints(-10, 10);
    const double dt = rng.uniform(1e-3, 0.2);
    const JointVector out = clamp_step(q, want, dt, lim);
    for (int i = 0; i < kNumJoints; ++i) {
      EXPECT_GE(out[i], lim.min[i]);
      EXPECT_LE(out[i], lim.max[i]);
      EXPECT_LE(std::abs(out[i] - q[i]), lim.max_speed[i] * dt * (1 + 1e-12));
    }
  }
}

TEST(Reach, BoundCoversEveryConfiguration) {
  Rng rng(42);
  const DHParams dh = DHParams::ur3();
  double farthest = 0;
  for (int n = 0; n < 20000; ++n) farthest = std::max(farthest, forward_kinematics(dh, rng.joints()).translation.norm());
  EXPECT_LE(farthest, dh.max_reach());
}

}  // namespace
}  // namespace maskbot

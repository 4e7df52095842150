#pragma once

#include <array>
#include <string_view>

#include "maskbot/geometry.hpp"

namespace maskbot {

inline constexpr int kNumJoints = 6;

using JointVector = Eigen::Matrix<double, kNumJoints, 1>;
using Jacobian = Eigen::Matrix<double, 6, kNumJoints>;

/// Standard Denavit-Hartenberg row: rotZ(theta + theta_offset) transZ(d)
/// transX(a) rotX(alpha).
struct DHRow {
  double a = 0.0;
  double d = 0.0;
  double alpha = 0.0;
  double theta_offset = 0.0;
};

struct DHParams {
  std::array<DHRow, kNumJoints> joints{};

  /// Manufacturer-published UR3 values.
  static DHParams ur3();

  void validate(std::string_view field_prefix = "robot.dh") const;

  /// Upper bound on the flange distance from the base origin.
  double max_reach() const;
};

struct JointLimits {
  JointVector min = JointVector::Constant(-2.0 * kPi);
  JointVector max = JointVector::Constant(2.0 * kPi);
  JointVector max_speed;  ///< rad/s

  /// UR3: +-2 pi on every joint; 180 deg/s on the base three, 360 deg/s on the wrist.
  static JointLimits ur3();

  void validate(std::string_view field_prefix = "robot.limits") const;
};

/// Projector and camera mounts relative to the flange.
struct ToolOffset {
  Pose projector_mount;
  Pose camera_mount;

  /// Projector +40 mm along flange X, camera -40 mm; both look along flange +Z.
  static ToolOffset defaults();
};

/// Base -> tool pose for joint vector `q`.
Pose forward_kinematics(const DHParams& dh, const JointVector& q, const Pose& tool = Pose{});

/// Frames of the chain: index 0 is the base, index i the frame after joint i.
std::array<Pose, kNumJoints + 1> link_frames(const DHParams& dh, const JointVector& q);

/// Geometric Jacobian of the tool point, linear rows over angular rows.
/// Column i is [z_i x (p_e - p_i); z_i] with z_i, p_i taken from the frame
/// preceding joint i + 1.
Jacobian jacobian(const DHParams& dh, const JointVector& q, const Pose& tool = Pose{});

/// Position and orientation error between two poses (meters, radians).
struct PoseResidual {
  double position = 0.0;
  double rotation = 0.0;
};

PoseResidual pose_residual(const Pose& actual, const Pose& target);

struct IkOptions {
  double position_tolerance = 1e-9;  ///< m
  double rotation_tolerance = 1e-9;  ///< rad
  int max_iterations = 200;
  double damping = 1e-3;             ///< DLS lambda; the system uses lambda^2
  double max_step = 0.5;             ///< rad, per iteration
};

struct IkResult {
  JointVector q;
  PoseResidual residual;
  int iterations = 0;
  bool converged = false;
};

/// Damped least squares from `seed`. Never throws for non-convergence; the
/// best iterate is returned with converged == false. Throws Error(kUnreachable)
/// when the target lies beyond the arm's reach.
IkResult solve_ik(const DHParams& dh, const Pose& target, const JointVector& seed,
                  const Pose& tool = Pose{}, const IkOptions& options = {});

/// As solve_ik, but throws NotConverged(residual) if the tolerances are not met.
JointVector inverse_kinematics(const DHParams& dh, const Pose& target, const JointVector& seed,
                               const Pose& tool, double tolerance, int max_iterations);

/// Step from q toward q_desired, scaled so no joint exceeds max_speed * dt,
/// then clamped to the position range.
JointVector clamp_step(const JointVector& q, const JointVector& q_desired, double dt,
                       const JointLimits& limits);

}  // namespace maskbot

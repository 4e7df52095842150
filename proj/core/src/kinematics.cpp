#include "maskbot/kinematics.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <string>

#include "maskbot/error.hpp"

namespace maskbot {
namespace {

Pose dh_transform(const DHRow& row, double q) {
  const double theta = q + row.theta_offset;
  const double ct = std::cos(theta), st = std::sin(theta);
  const double ca = std::cos(row.alpha), sa = std::sin(row.alpha);
  Pose t;
  t.rotation << ct, -st * ca, st * sa,
                st, ct * ca, -ct * sa,
                0.0, sa, ca;
  t.translation = Vec3(row.a * ct, row.a * st, row.d);
  return t;
}

constexpr double kDampingFade = 1e-4;

Eigen::Matrix<double, 6, 1> twist_error(const Pose& actual, const Pose& target) {
  Eigen::Matrix<double, 6, 1> e;
  e.head<3>() = target.translation - actual.translation;
  e.tail<3>() = log_so3(target.rotation * actual.rotation.transpose());
  return e;
}

}  // namespace

DHParams DHParams::ur3() {
  DHParams p;
  const double a[] = {0.0, -0.24365, -0.21325, 0.0, 0.0, 0.0};
  const double d[] = {0.1519, 0.0, 0.0, 0.11235, 0.08535, 0.0819};
  const double alpha[] = {kPi / 2.0, 0.0, 0.0, kPi / 2.0, -kPi / 2.0, 0.0};
  for (int i = 0; i < kNumJoints; ++i) {
    p.joints[i] = {a[i], d[i], alpha[i], 0.0};
  }
  return p;
}

void DHParams::validate(std::string_view field_prefix) const {
  const std::string p(field_prefix);
  for (int i = 0; i < kNumJoints; ++i) {
    const auto& r = joints[i];
    if (!std::isfinite(r.a) || !std::isfinite(r.d) || !std::isfinite(r.alpha) ||
        !std::isfinite(r.theta_offset)) {
      throw ValidationError(p + "[" + std::to_string(i) + "]", "finite");
    }
  }
}

double DHParams::max_reach() const {
  double r = 0.0;
  for (const auto& row : joints) r += std::hypot(row.a, row.d);
  return r;
}

JointLimits JointLimits::ur3() {
  JointLimits l;
  const double base = kPi;
  const double wrist = 2.0 * kPi;
  l.max_speed << base, base, base, wrist, wrist, wrist;
  return l;
}

void JointLimits::validate(std::string_view field_prefix) const {
  const std::string p(field_prefix);
  for (int i = 0; i < kNumJoints; ++i) {
    if (!(std::isfinite(min(i)) && std::isfinite(max(i)) && min(i) < max(i))) {
      throw ValidationError(p + ".min[" + std::to_string(i) + "]", "< max");
    }
    if (!(std::isfinite(max_speed(i)) && max_speed(i) > 0.0)) {
      throw ValidationError(p + ".max_speed[" + std::to_string(i) + "]", "> 0");
    }
  }
}

ToolOffset ToolOffset::defaults() {
  ToolOffset t;
  t.projector_mount = Pose::from_translation(Vec3(0.04, 0.0, 0.0));
  t.camera_mount = Pose::from_translation(Vec3(-0.04, 0.0, 0.0));
  return t;
}

std::array<Pose, kNumJoints + 1> link_frames(const DHParams& dh, const JointVector& q) {
  std::array<Pose, kNumJoints + 1> frames;
  frames[0] = Pose::identity();
  for (int i = 0; i < kNumJoints; ++i) {
    frames[i + 1] = frames[i] * dh_transform(dh.joints[i], q(i));
  }
  return frames;
}

Pose forward_kinematics(const DHParams& dh, const JointVector& q, const Pose& tool) {
  Pose t = Pose::identity();
  for (int i = 0; i < kNumJoints; ++i) t = t * dh_transform(dh.joints[i], q(i));
  return t * tool;
}

Jacobian jacobian(const DHParams& dh, const JointVector& q, const Pose& tool) {
  const auto frames = link_frames(dh, q);
  const Vec3 p_end = (frames[kNumJoints] * tool).translation;
  Jacobian j;
  for (int i = 0; i < kNumJoints; ++i) {
    const Vec3 z = frames[i].rotation.col(2);
    const Vec3 p = frames[i].translation;
    j.block<3, 1>(0, i) = z.cross(p_end - p);
    j.block<3, 1>(3, i) = z;
  }
  return j;
}

PoseResidual pose_residual(const Pose& actual, const Pose& target) {
  return {(target.translation - actual.translation).norm(),
          rotation_angle_between(actual.rotation, target.rotation)};
}

namespace {

IkResult dls_descent(const DHParams& dh, const Pose& target, const JointVector& seed,
                     const Pose& tool, const IkOptions& options, double max_step) {
  IkResult result;
  result.q = seed;
  Pose current = forward_kinematics(dh, result.q, tool);
  Eigen::Matrix<double, 6, 1> err = twist_error(current, target);
  double cost = err.norm();
  result.residual = pose_residual(current, target);
  auto done = [&] {
    return result.residual.position < options.position_tolerance &&
           result.residual.rotation < options.rotation_tolerance;
  };

  for (int it = 0; it < options.max_iterations && !done(); ++it) {
    result.iterations = it + 1;
    const Jacobian j = jacobian(dh, result.q, tool);
    // Damping fades once the residual is below kDampingFade so the last
    // iterations are Gauss-Newton even next to a singularity.
    const double fade = std::min(1.0, cost / kDampingFade);
    const double lambda2 = options.damping * options.damping * fade * fade;
    const Eigen::Matrix<double, 6, 6> jjt =
        j * j.transpose() + lambda2 * Eigen::Matrix<double, 6, 6>::Identity();
    JointVector dq = j.transpose() * jjt.ldlt().solve(err);
    const double step_norm = dq.cwiseAbs().maxCoeff();
    if (step_norm > max_step) dq *= max_step / step_norm;

    // Halve the step while the residual would grow.
    bool accepted = false;
    for (int halving = 0; halving < 20; ++halving) {
      const JointVector trial = result.q + dq;
      const Pose trial_pose = forward_kinematics(dh, trial, tool);
      const Eigen::Matrix<double, 6, 1> trial_err = twist_error(trial_pose, target);
      const double trial_cost = trial_err.norm();
      if (trial_cost <= cost) {
        result.q = trial;
        current = trial_pose;
        err = trial_err;
        cost = trial_cost;
        accepted = true;
        break;
      }
      dq *= 0.5;
    }
    result.residual = pose_residual(current, target);
    if (!accepted) break;
  }
  result.converged = done();
  return result;
}

double residual_cost(const IkResult& r) { return std::hypot(r.residual.position, r.residual.rotation); }

}  // namespace

IkResult solve_ik(const DHParams& dh, const Pose& target, const JointVector& seed,
                  const Pose& tool, const IkOptions& options) {
  const double reach = dh.max_reach() + tool.translation.norm();
  if (target.translation.norm() > reach) {
    throw Error(ErrorCode::kUnreachable, "target " + std::to_string(target.translation.norm()) +
                                             " m from base exceeds reach " +
                                             std::to_string(reach) + " m");
  }
  // A long first step from a near-singular seed can settle on a singular
  // local minimum; shorter step caps from the same seed get around it.
  IkResult best = dls_descent(dh, target, seed, tool, options, options.max_step);
  for (double shrink : {0.25, 0.0625}) {
    if (best.converged) break;
    IkResult retry = dls_descent(dh, target, seed, tool, options, options.max_step * shrink);
    if (retry.converged || residual_cost(retry) < residual_cost(best)) best = retry;
  }
  return best;
}

JointVector inverse_kinematics(const DHParams& dh, const Pose& target, const JointVector& seed,
                               const Pose& tool, double tolerance, int max_iterations) {
  IkOptions options;
  options.position_tolerance = tolerance;
  options.rotation_tolerance = tolerance;
  options.max_iterations = max_iterations;
  const IkResult r = solve_ik(dh, target, seed, tool, options);
  if (!r.converged) {
    const double residual = std::max(r.residual.position, r.residual.rotation);
    throw NotConverged(residual, "IK residual " + std::to_string(r.residual.position) + " m / " +
                                     std::to_string(r.residual.rotation) + " rad after " +
                                     std::to_string(r.iterations) + " iterations");
  }
  return r.q;
}

JointVector clamp_step(const JointVector& q, const JointVector& q_desired, double dt,
                       const JointLimits& limits) {
  JointVector delta = q_desired - q;
  double scale = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    scale = std::max(scale, std::abs(delta(i)) / (limits.max_speed(i) * dt));
  }
  if (scale > 1.0) delta /= scale;
  JointVector out = q + delta;
  for (int i = 0; i < kNumJoints; ++i) {
    out(i) = std::clamp(out(i), limits.min(i), limits.max(i));
  }
  return out;
}

}  // namespace maskbot

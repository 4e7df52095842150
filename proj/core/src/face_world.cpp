#include "maskbot/face_world.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "maskbot/error.hpp"
#include "maskbot/rng.hpp"

namespace maskbot {
namespace {

constexpr double kMinDepth = 1e-6;

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

// Sum of squared reprojection errors; +inf if any point is behind the camera.
double reprojection_cost(const DetectedLandmarks& det, const FaceModel& face,
                         const CameraIntrinsics& k, const Pose& pose) {
  double cost = 0.0;
  for (int i = 0; i < kNumLandmarks; ++i) {
    const Vec3 pc = pose.apply(face.points()[i]);
    if (!(pc.z() > kMinDepth)) return std::numeric_limits<double>::infinity();
    const Vec2 uv(k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy);
    cost += (uv - det.points[i]).squaredNorm();
  }
  return cost;
}

Pose rotate_about(const Vec3& pivot, const Mat3& r) {
  // T(pivot) * R * T(-pivot)
  return {r, pivot - r * pivot};
}

}  // namespace

FaceModel FaceModel::from_points(std::span<const Vec3> points, double real_width,
                                 IndexPair width_pair) {
  if (points.size() != static_cast<std::size_t>(kNumLandmarks)) {
    throw ValidationError("face.points", "exactly 68 landmarks");
  }
  if (!(std::isfinite(real_width) && real_width > 0.0)) {
    throw ValidationError("face.real_width", "> 0");
  }
  const auto in_range = [](int i) { return i >= 0 && i < kNumLandmarks; };
  if (!in_range(width_pair.first) || !in_range(width_pair.second) ||
      width_pair.first == width_pair.second) {
    throw ValidationError("face.width_pair", "two distinct indices in [0, 67]");
  }

  FaceModel f;
  f.real_width_ = real_width;
  f.width_pair_ = width_pair;
  Vec3 centroid = Vec3::Zero();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) throw ValidationError("face.points", "finite");
    f.points_[i] = points[i];
    centroid += points[i];
  }
  centroid /= kNumLandmarks;
  const double width = (f.points_[width_pair.second] - f.points_[width_pair.first]).norm();
  if (!(width > 0.0)) throw ValidationError("face.width_pair", "distinct points");
  const double scale = real_width / width;
  for (auto& p : f.points_) p = centroid + scale * (p - centroid);

  Mat3 cov = Mat3::Zero();
  for (const auto& p : f.points_) cov += (p - centroid) * (p - centroid).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 z = eig.eigenvectors().col(0);
  if (z.dot(Vec3::UnitZ()) < 0.0) z = -z;
  Vec3 x = Vec3::UnitX() - Vec3::UnitX().dot(z) * z;
  if (x.norm() < 1e-9) x = Vec3::UnitY() - Vec3::UnitY().dot(z) * z;
  x.normalize();
  f.plane_frame_.rotation.col(0) = x;
  f.plane_frame_.rotation.col(1) = z.cross(x);
  f.plane_frame_.rotation.col(2) = z;
  f.plane_frame_.translation = centroid;

  const Pose to_plane = invert(f.plane_frame_);
  for (int i = 0; i < kNumLandmarks; ++i) {
    const Vec3 q = to_plane.apply(f.points_[i]);
    f.plane_layout_[i] = Vec2(q.x(), q.y());
  }
  return f;
}

FaceModel FaceModel::canonical(double real_width) {
  const LandmarkPoints3 pts = canonical_face_points();
  return from_points(pts, real_width);
}

Vec3 FaceModel::plane_point(int index) const {
  const Vec2& q = plane_layout_.at(static_cast<std::size_t>(index));
  return plane_frame_.apply(Vec3(q.x(), q.y(), 0.0));
}

Pose head_pose_at(const HeadTrajectory& tr, double t) {
  const double w = 2.0 * kPi * tr.frequency;
  const Vec3 dir = tr.direction.norm() > 0.0 ? Vec3(tr.direction.normalized()) : Vec3::Zero();
  switch (tr.kind) {
    case TrajectoryKind::kStatic:
      return tr.base_pose;
    case TrajectoryKind::kSinusoidalYaw:
      return tr.base_pose * rotate_about(tr.pivot, rot_y(tr.amplitude * std::sin(w * t)));
    case TrajectoryKind::kSinusoidalPitch:
      return tr.base_pose * rotate_about(tr.pivot, rot_x(tr.amplitude * std::sin(w * t)));
    case TrajectoryKind::kLinearTranslation: {
      const double s = tr.frequency > 0.0 ? tr.amplitude * std::sin(w * t) : tr.amplitude * t;
      Pose p = tr.base_pose;
      p.translation += s * dir;
      return p;
    }
    case TrajectoryKind::kComposite: {
      const Mat3 r = rot_y(tr.amplitude * std::sin(w * t)) *
                     rot_x(0.5 * tr.amplitude * std::sin(1.5 * w * t));
      Pose p = tr.base_pose * rotate_about(tr.pivot, r);
      p.translation += tr.translation_amplitude * std::sin(0.5 * w * t) * dir;
      return p;
    }
  }
  return tr.base_pose;
}

DetectedLandmarks observe_landmarks(const FaceModel& face, const Pose& head,
                                    const CameraIntrinsics& k, const Pose& cam_pose,
                                    double noise_sigma, std::uint64_t rng_seed, double t) {
  DetectedLandmarks det;
  det.capture_time = t;
  NormalSampler normal(rng_seed);
  const Pose head_in_cam = invert(cam_pose) * head;
  bool behind = false;
  int inside = 0;
  for (int i = 0; i < kNumLandmarks; ++i) {
    const double nu = normal();
    const double nv = normal();
    const Vec3 pc = head_in_cam.apply(face.points()[i]);
    if (!(pc.z() > kMinDepth)) {
      behind = true;
      det.points[i] = Vec2::Zero();
      continue;
    }
    const Vec2 uv = project_camera_point(k, pc);
    det.points[i] = uv + noise_sigma * Vec2(nu, nv);
    if (k.contains(det.points[i])) ++inside;
  }
  det.valid = !behind && inside >= kMinVisibleLandmarks;
  return det;
}

CenterWidth face_center_and_width(const DetectedLandmarks& det, IndexPair pair) {
  if (!det.valid) throw Error(ErrorCode::kInvalidDetection, "detection is not valid");
  CenterWidth out;
  out.center = Vec2::Zero();
  for (const auto& p : det.points) out.center += p;
  out.center /= kNumLandmarks;
  out.width = (det.points.at(pair.second) - det.points.at(pair.first)).norm();
  return out;
}

Pose initial_head_pose_guess(const DetectedLandmarks& det, const FaceModel& face,
                             const CameraIntrinsics& k) {
  const CenterWidth cw = face_center_and_width(det, face.width_pair());
  // Foreshortened or collapsed widths fall back to a nominal desk distance.
  const double depth = cw.width > 1.0 ? distance_from_face_width(k.fx, face.real_width(), cw.width)
                                      : 0.6;
  Vec2 right_eye = Vec2::Zero(), left_eye = Vec2::Zero();
  for (int i = landmarks::kRightEyeBegin; i < landmarks::kRightEyeEnd; ++i) {
    right_eye += det.points[i];
  }
  for (int i = landmarks::kLeftEyeBegin; i < landmarks::kLeftEyeEnd; ++i) {
    left_eye += det.points[i];
  }
  const Vec2 eye_line = left_eye - right_eye;
  const double roll = std::atan2(eye_line.y(), eye_line.x());
  Pose guess;
  // Facing the camera: head +Z along camera -Z, head +Y along image up.
  guess.rotation = rot_z(roll) * Vec3(1.0, -1.0, -1.0).asDiagonal();
  guess.translation = depth * pixel_ray(k, cw.center);
  return guess;
}

HeadPoseEstimate estimate_head_pose(const DetectedLandmarks& det, const FaceModel& face,
                                    const CameraIntrinsics& k, const Pose& seed_pose,
                                    const PoseSolverOptions& options) {
  if (!det.valid) throw Error(ErrorCode::kInvalidDetection, "detection is not valid");

  HeadPoseEstimate est;
  est.pose = seed_pose;
  double cost = reprojection_cost(det, face, k, est.pose);
  if (!std::isfinite(cost)) {
    throw NotConverged(cost, "seed pose places landmarks behind the camera");
  }

  bool converged = false;
  for (int it = 0; it < options.max_iterations; ++it) {
    est.iterations = it + 1;
    Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> jtr = Eigen::Matrix<double, 6, 1>::Zero();
    for (int i = 0; i < kNumLandmarks; ++i) {
      const Vec3 rp = est.pose.rotation * face.points()[i];
      const Vec3 pc = rp + est.pose.translation;
      const double iz = 1.0 / pc.z();
      const Vec2 uv(k.fx * pc.x() * iz + k.cx, k.fy * pc.y() * iz + k.cy);
      const Vec2 r = uv - det.points[i];
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << k.fx * iz, 0.0, -k.fx * pc.x() * iz * iz,
               0.0, k.fy * iz, -k.fy * pc.y() * iz * iz;
      // Left perturbation about the head origin: d(pc)/d(omega) = -[R X]x,
      // d(pc)/d(translation) = I.
      Eigen::Matrix<double, 2, 6> j;
      j.leftCols<3>() = -dproj * skew(rp);
      j.rightCols<3>() = dproj;
      jtj.noalias() += j.transpose() * j;
      jtr.noalias() += j.transpose() * r;
    }
    Eigen::Matrix<double, 6, 1> step = -jtj.ldlt().solve(jtr);
    if (!step.allFinite()) break;

    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h) {
      Pose trial;
      trial.rotation = exp_so3(step.head<3>()) * est.pose.rotation;
      trial.translation = est.pose.translation + step.tail<3>();
      const double trial_cost = reprojection_cost(det, face, k, trial);
      if (trial_cost <= cost) {
        est.pose = trial;
        cost = trial_cost;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    // No descent direction left at working precision: a stationary point.
    if (!accepted || step.norm() < options.step_tolerance) {
      converged = true;
      break;
    }
  }
  est.rms_residual_px = std::sqrt(cost / kNumLandmarks);
  if (!converged) {
    throw NotConverged(est.rms_residual_px,
                       "head pose did not converge in " + std::to_string(options.max_iterations) +
                           " iterations (rms " + std::to_string(est.rms_residual_px) + " px)");
  }
  return est;
}

FacePlane fit_face_plane(const Pose& head_pose, const FaceModel& face) {
  Vec3 centroid = Vec3::Zero();
  LandmarkPoints3 world;
  for (int i = 0; i < kNumLandmarks; ++i) {
    world[i] = head_pose.apply(face.points()[i]);
    centroid += world[i];
  }
  centroid /= kNumLandmarks;
  Mat3 cov = Mat3::Zero();
  for (const auto& p : world) cov += (p - centroid) * (p - centroid).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 n = eig.eigenvectors().col(0).normalized();
  const Vec3 forward = head_pose.rotate(face.plane_frame().axis());
  if (n.dot(forward) < 0.0) n = -n;

  FacePlane plane;
  plane.normal = n;
  plane.center = centroid;
  double ss = 0.0;
  for (const auto& p : world) {
    const double d = n.dot(p - centroid);
    ss += d * d;
  }
  plane.rms_residual = std::sqrt(ss / kNumLandmarks);
  return plane;
}

}  // namespace maskbot

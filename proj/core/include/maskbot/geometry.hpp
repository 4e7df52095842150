#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace maskbot {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Frame convention used throughout: local +Z is the optical / projection axis
// of cameras and projectors, and a Pose maps local coordinates into its parent
// frame (x_parent = rotation * x_local + translation).

/// Rigid transform in 3D. Translation in meters.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static Pose from_rotation(const Mat3& r) { return {r, Vec3::Zero()}; }

  Vec3 apply(const Vec3& point) const { return rotation * point + translation; }
  Vec3 rotate(const Vec3& direction) const { return rotation * direction; }

  /// Optical axis (local +Z) expressed in the parent frame.
  Vec3 axis() const { return rotation.col(2); }
};

Mat3 rot_x(double angle);
Mat3 rot_y(double angle);
Mat3 rot_z(double angle);

/// result.apply(x) == a.apply(b.apply(x)).
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& p);

inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

/// Frobenius norm of R^T R - I.
double orthonormality_drift(const Mat3& r);

/// Nearest rotation matrix (polar decomposition via SVD).
Mat3 orthonormalize(const Mat3& r);

/// True when the rotation is orthonormal with det +1 within `tol`.
bool is_valid_rotation(const Mat3& r, double tol = 1e-9);

/// Rodrigues exponential of a rotation vector.
Mat3 exp_so3(const Vec3& rotation_vector);

/// Inverse of exp_so3; returns a rotation vector with norm in [0, pi].
Vec3 log_so3(const Mat3& r);

/// Geodesic angle between two rotations, radians in [0, pi].
double rotation_angle_between(const Mat3& a, const Mat3& b);

/// Pose whose +Z points from `eye` toward `target`, with +Y leaning toward
/// `up_hint`. Throws Error(kDegenerateAim) when eye == target or up_hint is
/// parallel to the aim direction.
Pose look_at_pose(const Vec3& eye, const Vec3& target, const Vec3& up_hint);

/// Moves `from` a fraction of the way toward `to`: translation linearly,
/// rotation along the geodesic. Fractions are clamped to [0, 1].
Pose interpolate(const Pose& from, const Pose& to, double translation_fraction,
                 double rotation_fraction);

bool approx_equal(const Pose& a, const Pose& b, double tol = 1e-9);

constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace maskbot

#include "maskbot/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "maskbot/error.hpp"

namespace maskbot {
namespace {

constexpr double kReorthonormalizeThreshold = 1e-7;

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace

Mat3 rot_x(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << 1.0, 0.0, 0.0,
       0.0, c, -s,
       0.0, s, c;
  return r;
}

Mat3 rot_y(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << c, 0.0, s,
       0.0, 1.0, 0.0,
       -s, 0.0, c;
  return r;
}

Mat3 rot_z(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat3 r;
  r << c, -s, 0.0,
       s, c, 0.0,
       0.0, 0.0, 1.0;
  return r;
}

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  if (orthonormality_drift(out.rotation) > kReorthonormalizeThreshold) {
    out.rotation = orthonormalize(out.rotation);
  }
  return out;
}

Pose invert(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.transpose();
  out.translation = -(out.rotation * p.translation);
  return out;
}

double orthonormality_drift(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).norm();
}

Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) = -u.col(2);
  }
  return u * v.transpose();
}

bool is_valid_rotation(const Mat3& r, double tol) {
  return orthonormality_drift(r) <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 exp_so3(const Vec3& w) {
  const double theta = w.norm();
  const Mat3 k = skew(w);
  if (theta < 1e-8) {
    // Second-order Taylor expansion; exact to double precision at this size.
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 log_so3(const Mat3& r) {
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Vec3 vee(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  if (theta < 1e-8) {
    return 0.5 * vee;
  }
  if (kPi - theta < 1e-6) {
    // Near pi the antisymmetric part vanishes; recover the axis from the
    // symmetric part instead.
    const Mat3 b = 0.5 * (r + Mat3::Identity());
    int col = 0;
    b.diagonal().maxCoeff(&col);
    Vec3 axis = b.col(col) / std::sqrt(std::max(b(col, col), 1e-300));
    axis.normalize();
    if (axis.dot(vee) < 0.0) axis = -axis;
    return theta * axis;
  }
  return theta / (2.0 * std::sin(theta)) * vee;
}

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  return log_so3(a.transpose() * b).norm();
}

Pose look_at_pose(const Vec3& eye, const Vec3& target, const Vec3& up_hint) {
  const Vec3 aim = target - eye;
  const double aim_norm = aim.norm();
  if (!(aim_norm > 1e-12)) {
    throw Error(ErrorCode::kDegenerateAim, "eye coincides with target");
  }
  const Vec3 z = aim / aim_norm;
  const Vec3 up_perp = up_hint - up_hint.dot(z) * z;
  const double up_norm = up_perp.norm();
  if (!(up_norm > 1e-9 * std::max(1.0, up_hint.norm()))) {
    throw Error(ErrorCode::kDegenerateAim, "up hint is parallel to the aim direction");
  }
  const Vec3 y = up_perp / up_norm;
  const Vec3 x = y.cross(z);
  Pose p;
  p.rotation.col(0) = x;
  p.rotation.col(1) = y;
  p.rotation.col(2) = z;
  p.translation = eye;
  return p;
}

Pose interpolate(const Pose& from, const Pose& to, double translation_fraction,
                 double rotation_fraction) {
  const double ft = std::clamp(translation_fraction, 0.0, 1.0);
  const double fr = std::clamp(rotation_fraction, 0.0, 1.0);
  Pose out;
  out.translation = from.translation + ft * (to.translation - from.translation);
  if (fr >= 1.0) {
    out.rotation = to.rotation;
  } else {
    const Vec3 delta = log_so3(to.rotation * from.rotation.transpose());
    out.rotation = exp_so3(fr * delta) * from.rotation;
  }
  return out;
}

bool approx_equal(const Pose& a, const Pose& b, double tol) {
  return (a.rotation - b.rotation).cwiseAbs().maxCoeff() <= tol &&
         (a.translation - b.translation).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace maskbot

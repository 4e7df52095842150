#pragma once

#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "maskbot/geometry.hpp"

namespace maskbot {

/// Pinhole intrinsics in pixels. Pixel (u, v) = (fx X/Z + cx, fy Y/Z + cy).
struct CameraIntrinsics {
  double fx = 1000.0;
  double fy = 1000.0;
  double cx = 640.0;
  double cy = 360.0;
  int width = 1280;
  int height = 720;

  /// Throws ValidationError naming `field_prefix`.<field> on the first
  /// violated invariant.
  void validate(std::string_view field_prefix = "intrinsics") const;

  bool contains(const Vec2& pixel) const {
    return pixel.x() >= 0.0 && pixel.y() >= 0.0 && pixel.x() < width && pixel.y() < height;
  }
};

CameraIntrinsics default_camera_intrinsics();
CameraIntrinsics default_projector_intrinsics();

/// A projector is an inverse camera: same intrinsics, rays leave instead of
/// arrive. `mount` places the projector frame relative to the tool flange.
struct ProjectorModel {
  CameraIntrinsics intrinsics = default_projector_intrinsics();
  Pose mount;
};

struct Correspondence {
  Vec2 src;
  Vec2 dst;
};

/// Plane-to-plane projective map, kept at unit Frobenius norm with H(2,2) >= 0.
class Homography {
 public:
  Homography() : h_(Mat3::Identity() / std::sqrt(3.0)) {}

  /// Normalizes `m`; throws Error(kDegenerateConfiguration) if m is zero or
  /// not finite.
  static Homography from_matrix(const Mat3& m);

  const Mat3& matrix() const { return h_; }

 private:
  explicit Homography(const Mat3& normalized) : h_(normalized) {}
  Mat3 h_;
};

/// Unit Frobenius norm, sign chosen so H(2,2) >= 0 (first nonzero entry
/// positive when H(2,2) == 0). Idempotent bit-for-bit.
Mat3 normalize_homography(const Mat3& m);

/// Camera-frame point to pixel. Throws Error(kBehindCamera) when Z <= 1e-6.
Vec2 project_camera_point(const CameraIntrinsics& k, const Vec3& camera_point);

/// World point to pixel for a camera whose pose (camera -> world) is `cam_pose`.
Vec2 project_point(const CameraIntrinsics& k, const Pose& cam_pose, const Vec3& world_point);

/// World point on the ray through `pixel` at camera-frame depth Z = `depth`.
/// Throws Error(kNonPositiveDepth) when depth <= 0.
Vec3 backproject_pixel(const CameraIntrinsics& k, const Pose& cam_pose, const Vec2& pixel,
                       double depth);

/// Ray direction through `pixel` in the camera frame, scaled so Z == 1.
Vec3 pixel_ray(const CameraIntrinsics& k, const Vec2& pixel);

/// Normalized DLT from >= 4 correspondences, src -> dst.
/// Throws Error(kInsufficientPairs) or Error(kDegenerateConfiguration).
Homography estimate_homography(std::span<const Correspondence> pairs);

/// Throws Error(kPointAtInfinity) when the homogeneous scale |w| < 1e-12.
Vec2 apply_homography(const Homography& h, const Vec2& pixel);

struct CalibrationResult {
  Homography homography;          ///< projector pixel -> camera pixel
  std::vector<double> errors_px;  ///< per-correspondence transfer error
  double mean_error_px = 0.0;
  double max_error_px = 0.0;
};

/// Fits the projector -> camera homography for the plane the calibration grid
/// was projected on. The result is only valid for that plane.
CalibrationResult calibrate_camera_projector(std::span<const Correspondence> pattern);

/// Similar triangles: d = fx * real_width / pixel_width.
/// Throws Error(kNonPositiveWidth) unless both widths are > 0.
double distance_from_face_width(double fx, double real_width, double pixel_width);

/// Reads `u_src v_src u_dst v_dst` quadruples, one per line; '#' starts a
/// comment. Throws ParseError with the 1-based line number.
std::vector<Correspondence> read_correspondences(std::istream& in);
std::vector<Correspondence> read_correspondences(const std::filesystem::path& path);
void write_correspondences(std::ostream& out, std::span<const Correspondence> pairs);

}  // namespace maskbot

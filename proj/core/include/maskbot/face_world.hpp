#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>

#include "maskbot/geometry.hpp"
#include "maskbot/optics.hpp"

namespace maskbot {

inline constexpr int kNumLandmarks = 68;

/// Standard 68-point index ranges.
namespace landmarks {
inline constexpr int kJawBegin = 0, kJawEnd = 17;
inline constexpr int kBrowsBegin = 17, kBrowsEnd = 27;
inline constexpr int kNoseBegin = 27, kNoseEnd = 36;
inline constexpr int kNoseTip = 30;
inline constexpr int kRightEyeBegin = 36, kRightEyeEnd = 42;
inline constexpr int kLeftEyeBegin = 42, kLeftEyeEnd = 48;
inline constexpr int kMouthBegin = 48, kMouthEnd = 68;
inline constexpr int kInnerMouthBegin = 60;
}  // namespace landmarks

using LandmarkPoints3 = std::array<Vec3, kNumLandmarks>;
using LandmarkPoints2 = std::array<Vec2, kNumLandmarks>;
using IndexPair = std::pair<int, int>;

/// Rigid 68-point head model. Head frame: +X toward the subject's left,
/// +Y up, +Z out of the face toward the observer.
class FaceModel {
 public:
  /// Rescales `points` about their centroid so the width pair is exactly
  /// `real_width` apart. Throws ValidationError on bad sizes or widths.
  static FaceModel from_points(std::span<const Vec3> points, double real_width,
                               IndexPair width_pair = {0, 16});

  /// Procedurally generated canonical face (see canonical_face_points()).
  static FaceModel canonical(double real_width = 0.15);

  const LandmarkPoints3& points() const { return points_; }
  double real_width() const { return real_width_; }
  IndexPair width_pair() const { return width_pair_; }

  /// Head frame -> best-fit plane frame (origin at the centroid, +Z the plane
  /// normal on the nose side, +X along head +X projected into the plane).
  const Pose& plane_frame() const { return plane_frame_; }

  /// Orthographic projection of each landmark onto the best-fit plane,
  /// in plane-frame meters.
  const LandmarkPoints2& plane_layout() const { return plane_layout_; }

  /// Landmark projected onto the best-fit plane, head frame.
  Vec3 plane_point(int index) const;

 private:
  LandmarkPoints3 points_{};
  LandmarkPoints2 plane_layout_{};
  Pose plane_frame_;
  double real_width_ = 0.15;
  IndexPair width_pair_{0, 16};
};

/// Parametric 68-point layout (jaw, brows, nose, eyes, mouth) with at most
/// 3 cm depth relief, centred on its centroid and expressed in its own
/// best-fit plane frame. Jaw extremes are 0.15 m apart.
LandmarkPoints3 canonical_face_points();

/// Reads 68 lines of `x y z` (meters); '#' comments allowed.
LandmarkPoints3 read_landmark_fixture(const std::filesystem::path& path);
void write_landmark_fixture(const std::filesystem::path& path, const LandmarkPoints3& points);

enum class TrajectoryKind { kStatic, kSinusoidalYaw, kSinusoidalPitch, kLinearTranslation, kComposite };

/// Scripted head motion. Rotations act about `pivot` (head frame); yaw turns
/// about head +Y, pitch about head +X.
///   static              base_pose for all t
///   sinusoidal_yaw      yaw = amplitude sin(2 pi f t)
///   sinusoidal_pitch    pitch = amplitude sin(2 pi f t)
///   linear_translation  offset = direction * amplitude sin(2 pi f t);
///                       with f == 0, constant velocity amplitude m/s
///   composite           yaw as above, pitch = amplitude/2 sin(3 pi f t),
///                       plus translation_amplitude sin(pi f t) along direction
struct HeadTrajectory {
  TrajectoryKind kind = TrajectoryKind::kStatic;
  double amplitude = 0.0;  ///< rad, or m for linear_translation
  double frequency = 0.0;  ///< Hz
  Pose base_pose;
  Vec3 direction = Vec3::UnitY();  ///< world frame, normalized on use
  Vec3 pivot = Vec3(0.0, 0.0, -0.09);
  double translation_amplitude = 0.0;
};

Pose head_pose_at(const HeadTrajectory& trajectory, double t);

struct DetectedLandmarks {
  LandmarkPoints2 points{};
  double capture_time = 0.0;
  bool valid = false;
};

/// Minimum number of landmarks inside the image for a detection to count.
inline constexpr int kMinVisibleLandmarks = 60;

/// Simulated detector: exact projection plus i.i.d. Gaussian pixel noise.
/// Always draws 2 * 68 normals from `rng_seed`, valid or not, so runs that
/// differ only in control decisions see identical noise.
DetectedLandmarks observe_landmarks(const FaceModel& face, const Pose& head,
                                    const CameraIntrinsics& k, const Pose& cam_pose,
                                    double noise_sigma, std::uint64_t rng_seed, double t);

struct CenterWidth {
  Vec2 center;
  double width = 0.0;
};

/// Landmark centroid and pixel distance of `pair`.
/// Throws Error(kInvalidDetection) when det is not valid.
CenterWidth face_center_and_width(const DetectedLandmarks& det, IndexPair pair = {0, 16});

struct HeadPoseEstimate {
  Pose pose;  ///< head -> camera
  double rms_residual_px = 0.0;
  int iterations = 0;
};

struct PoseSolverOptions {
  int max_iterations = 50;
  int max_halvings = 8;
  double step_tolerance = 1e-10;
};

/// Gauss-Newton over the six pose parameters minimising summed squared
/// reprojection error, started at `seed_pose` (head -> camera). Residual is
/// non-increasing across iterations.
/// Throws Error(kInvalidDetection) or NotConverged.
HeadPoseEstimate estimate_head_pose(const DetectedLandmarks& det, const FaceModel& face,
                                    const CameraIntrinsics& k, const Pose& seed_pose,
                                    const PoseSolverOptions& options = {});

/// Frontal-facing initial guess from the landmark centroid, face width and eye
/// line; suitable as a seed when no previous estimate exists.
Pose initial_head_pose_guess(const DetectedLandmarks& det, const FaceModel& face,
                             const CameraIntrinsics& k);

struct FacePlane {
  Vec3 normal = Vec3::UnitZ();  ///< unit, pointing out of the face
  Vec3 center = Vec3::Zero();
  double rms_residual = 0.0;    ///< m, point-to-plane
};

/// Least-squares plane through the transformed landmarks: the normal is the
/// smallest principal direction, signed to agree with the head's forward axis.
FacePlane fit_face_plane(const Pose& head_pose, const FaceModel& face);

}  // namespace maskbot

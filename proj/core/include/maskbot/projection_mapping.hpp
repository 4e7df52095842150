#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "maskbot/face_world.hpp"
#include "maskbot/frame.hpp"
#include "maskbot/geometry.hpp"
#include "maskbot/optics.hpp"

namespace maskbot {

using Triangle = std::array<int, 3>;

/// Index triples into a point list; every triangle counter-clockwise, each
/// rotated to start at its smallest index, list sorted.
struct TriangleMesh {
  std::vector<Triangle> triangles;

  bool operator==(const TriangleMesh&) const = default;
};

/// Delaunay triangulation (strict empty circumcircle). Cocircular ties keep the
/// diagonal produced by a sweep over the points in lexicographic (x, y) order.
/// Throws Error(kDegeneratePoints) for fewer than 3 points, duplicates, or all
/// points collinear.
TriangleMesh triangulate_landmarks(std::span<const Vec2> points);

/// Barycentric tolerance: a point counts as inside a triangle when every
/// coordinate is >= -kInsideTolerance.
inline constexpr double kInsideTolerance = 1e-12;

/// Affine map of each mesh triangle from `src` to `dst`, with the point
/// location used by the renderer. Triangles are searched in mesh order and
/// the first containing one wins.
class PiecewiseAffineWarp {
 public:
  PiecewiseAffineWarp(std::span<const Vec2> src, std::span<const Vec2> dst, TriangleMesh mesh);

  const TriangleMesh& mesh() const { return mesh_; }

  /// Index of the first triangle containing p, or -1.
  int locate(const Vec2& p) const;

  /// Barycentric weights of the triangle's second and third vertices.
  Vec2 barycentric(int triangle, const Vec2& p) const;
  static bool inside(const Vec2& weights) {
    return weights.x() >= -kInsideTolerance && weights.y() >= -kInsideTolerance &&
           1.0 - weights.x() - weights.y() >= -kInsideTolerance;
  }
  Vec2 map_barycentric(int triangle, const Vec2& weights) const;

  bool contains(int triangle, const Vec2& p) const { return inside(barycentric(triangle, p)); }

  /// Maps p through triangle `triangle`'s affine transform (no containment check).
  Vec2 map_with(int triangle, const Vec2& p) const {
    return map_barycentric(triangle, barycentric(triangle, p));
  }

  /// Throws Error(kOutsideHull) when no triangle contains p.
  Vec2 map(const Vec2& p) const;

 private:
  struct Cell {
    Eigen::Matrix<double, 2, 3> to_barycentric;  // [l1 l2] = M [x y 1]
    Eigen::Matrix<double, 2, 3> affine;          // dst = A [x y 1]
  };
  TriangleMesh mesh_;
  std::vector<Cell> cells_;
};

/// One-shot convenience over PiecewiseAffineWarp::map.
Vec2 piecewise_affine_map(std::span<const Vec2> src, std::span<const Vec2> dst,
                          const TriangleMesh& mesh, const Vec2& p);

enum class MaskKind { kBeard, kGlasses, kLogo, kMakeup, kCustom };

std::string_view to_string(MaskKind kind);
/// Throws ValidationError("mask.kind", ...) for unknown names.
MaskKind mask_kind_from_string(std::string_view name, std::string_view field = "mask.kind");

struct MaskTemplate {
  Frame texture;
  LandmarkPoints2 anchors{};  ///< texture pixel coordinates of the 68 landmarks
  MaskKind kind = MaskKind::kCustom;

  /// Throws ValidationError when an anchor lies outside the texture.
  void validate() const;
};

/// Procedural template of the given kind drawn over the face layout;
/// texture is `size` x `size` RGB. Throws ValidationError for kCustom.
MaskTemplate make_mask_template(MaskKind kind, const FaceModel& face, int size = 512);

/// Texture (PPM/PGM) plus 68 lines of `u v`; kind is kCustom.
MaskTemplate load_mask_template(const std::filesystem::path& texture,
                                const std::filesystem::path& anchors);
LandmarkPoints2 read_anchor_file(const std::filesystem::path& path);
void write_anchor_file(const std::filesystem::path& path, const LandmarkPoints2& anchors);

enum class Sampling { kNearest, kBilinear };

/// Canonical mesh and warp for a face/template pair. Build once, render many.
class ProjectionMapper {
 public:
  ProjectionMapper(const FaceModel& face, MaskTemplate mask,
                   Sampling sampling = Sampling::kNearest);

  const FaceModel& face() const { return face_; }
  const MaskTemplate& mask() const { return mask_; }
  const TriangleMesh& mesh() const { return warp_.mesh(); }
  const PiecewiseAffineWarp& warp() const { return warp_; }

  /// Renders the projector frame for the estimated head pose (head -> world)
  /// and projector pose (projector -> world). Pixel (i, j) is sampled at its
  /// center, continuous coordinate (i, j). Throws Error(kFaceBehindProjector).
  Frame render(const Pose& face_pose_estimate, const CameraIntrinsics& projector,
               const Pose& projector_pose) const;

  /// Writes the colour of projector pixel (i, j); false when its ray misses
  /// the face hull. Same arithmetic as render().
  bool shade(const Pose& projector_to_plane, const CameraIntrinsics& projector, int i, int j,
             std::uint8_t* out) const;

 private:
  void sample(int triangle, const Vec2& weights, std::uint8_t* out) const;

  FaceModel face_;
  MaskTemplate mask_;
  Sampling sampling_;
  PiecewiseAffineWarp warp_;
};

/// Convenience: builds a ProjectionMapper and renders one frame.
Frame render_projector_frame(const MaskTemplate& mask, const Pose& face_pose_estimate,
                             const FaceModel& face, const ProjectorModel& projector,
                             const Pose& projector_pose);

/// Everything needed to know where an anchor's light went.
struct FrameMapping {
  Pose face_pose_estimate;  ///< head -> world used by the renderer
  Pose render_pose;         ///< projector -> world assumed by the renderer
  Pose emit_pose;           ///< projector -> world when the light is emitted
  CameraIntrinsics projector;
};

struct OnFaceError {
  double mean_mm = 0.0;
  double max_mm = 0.0;
  /// Distances from the landing points to the true 3D landmarks, including
  /// the face relief the planar model ignores.
  double relief_mean_mm = 0.0;
  double relief_max_mm = 0.0;
};

/// For each anchor: the projector pixel the renderer assigned to it (sub-pixel
/// unless `quantize`), ray-cast from the emit pose against the true face plane,
/// compared to the anchor's true position on that plane. NaN when a ray
/// misses the plane or `anchors` is empty.
OnFaceError onface_error(const FrameMapping& mapping, const Pose& truth_head,
                         const FaceModel& face, std::span<const int> anchors,
                         bool quantize = false);

/// All 68 landmark indices.
std::vector<int> all_anchor_indices();

}  // namespace maskbot

#include "maskbot/projection_mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "maskbot/error.hpp"

namespace maskbot {

PiecewiseAffineWarp::PiecewiseAffineWarp(std::span<const Vec2> src, std::span<const Vec2> dst,
                                         TriangleMesh mesh)
    : mesh_(std::move(mesh)) {
  if (src.size() != dst.size()) throw ValidationError("warp.dst", "the same size as src");
  const int n = static_cast<int>(src.size());
  cells_.reserve(mesh_.triangles.size());
  for (const auto& t : mesh_.triangles) {
    for (int v : t) {
      if (v < 0 || v >= n) throw ValidationError("warp.mesh", "indices within the point list");
    }
    const Vec2& a = src[t[0]];
    Eigen::Matrix2d edges;
    edges.col(0) = src[t[1]] - a;
    edges.col(1) = src[t[2]] - a;
    const double det = edges.determinant();
    if (!(std::abs(det) > 0.0)) throw Error(ErrorCode::kDegeneratePoints, "zero-area triangle");
    const Eigen::Matrix2d inv = edges.inverse();
    Cell cell;
    cell.to_barycentric.leftCols<2>() = inv;
    cell.to_barycentric.col(2) = -inv * a;
    Eigen::Matrix2d dst_edges;
    dst_edges.col(0) = dst[t[1]] - dst[t[0]];
    dst_edges.col(1) = dst[t[2]] - dst[t[0]];
    cell.affine.leftCols<2>() = dst_edges;
    cell.affine.col(2) = dst[t[0]];
    cells_.push_back(cell);
  }
}

Vec2 PiecewiseAffineWarp::barycentric(int triangle, const Vec2& p) const {
  const Cell& c = cells_[static_cast<std::size_t>(triangle)];
  return c.to_barycentric.leftCols<2>() * p + c.to_barycentric.col(2);
}

Vec2 PiecewiseAffineWarp::map_barycentric(int triangle, const Vec2& weights) const {
  const Cell& c = cells_[static_cast<std::size_t>(triangle)];
  return c.affine.col(2) + c.affine.leftCols<2>() * weights;
}

int PiecewiseAffineWarp::locate(const Vec2& p) const {
  for (int t = 0; t < static_cast<int>(cells_.size()); ++t) {
    if (contains(t, p)) return t;
  }
  return -1;
}

Vec2 PiecewiseAffineWarp::map(const Vec2& p) const {
  const int t = locate(p);
  if (t < 0) throw Error(ErrorCode::kOutsideHull, "point outside the mesh");
  return map_with(t, p);
}

Vec2 piecewise_affine_map(std::span<const Vec2> src, std::span<const Vec2> dst,
                          const TriangleMesh& mesh, const Vec2& p) {
  return PiecewiseAffineWarp(src, dst, mesh).map(p);
}

std::string_view to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::kBeard: return "beard";
    case MaskKind::kGlasses: return "glasses";
    case MaskKind::kLogo: return "logo";
    case MaskKind::kMakeup: return "makeup";
    case MaskKind::kCustom: return "custom";
  }
  return "unknown";
}

MaskKind mask_kind_from_string(std::string_view name, std::string_view field) {
  for (MaskKind k : {MaskKind::kBeard, MaskKind::kGlasses, MaskKind::kLogo, MaskKind::kMakeup,
                     MaskKind::kCustom}) {
    if (to_string(k) == name) return k;
  }
  throw ValidationError(std::string(field), "one of beard, glasses, logo, makeup, custom");
}

void MaskTemplate::validate() const {
  if (texture.width <= 0 || texture.height <= 0 ||
      texture.data.size() != static_cast<std::size_t>(texture.width) *
                                 static_cast<std::size_t>(texture.height) *
                                 static_cast<std::size_t>(texture.channels)) {
    throw ValidationError("mask.texture", "a non-empty raster");
  }
  for (int i = 0; i < kNumLandmarks; ++i) {
    const Vec2& a = anchors[static_cast<std::size_t>(i)];
    if (!(a.x() >= 0.0 && a.y() >= 0.0 && a.x() <= texture.width - 1.0 &&
          a.y() <= texture.height - 1.0)) {
      throw ValidationError("mask.anchors[" + std::to_string(i) + "]", "inside the texture");
    }
  }
}

namespace {

std::span<const Vec2> as_span(const LandmarkPoints2& pts) { return {pts.data(), pts.size()}; }

// Plane-frame point hit by the ray of projector pixel (i, j); false when the
// ray runs parallel to or away from the plane.
bool pixel_to_plane(const Pose& projector_to_plane, const CameraIntrinsics& k, int i, int j,
                    Vec2& xy) {
  const Vec3 d((i - k.cx) / k.fx, (j - k.cy) / k.fy, 1.0);
  const Vec3 dir = projector_to_plane.rotation * d;
  const Vec3& o = projector_to_plane.translation;
  if (dir.z() == 0.0) return false;
  const double s = -o.z() / dir.z();
  if (!(s > 0.0)) return false;
  xy = Vec2(o.x() + s * dir.x(), o.y() + s * dir.y());
  return true;
}

}  // namespace

ProjectionMapper::ProjectionMapper(const FaceModel& face, MaskTemplate mask, Sampling sampling)
    : face_(face),
      mask_(std::move(mask)),
      sampling_(sampling),
      warp_(as_span(face.plane_layout()), as_span(mask_.anchors),
            triangulate_landmarks(as_span(face.plane_layout()))) {
  mask_.validate();
}

void ProjectionMapper::sample(int triangle, const Vec2& weights, std::uint8_t* out) const {
  const Frame& tex = mask_.texture;
  const Vec2 uv = warp_.map_barycentric(triangle, weights);
  const int ch = tex.channels;
  if (sampling_ == Sampling::kNearest) {
    const int x = std::clamp(static_cast<int>(std::floor(uv.x() + 0.5)), 0, tex.width - 1);
    const int y = std::clamp(static_cast<int>(std::floor(uv.y() + 0.5)), 0, tex.height - 1);
    std::copy_n(tex.pixel(x, y), ch, out);
    return;
  }
  const double u = std::clamp(uv.x(), 0.0, tex.width - 1.0);
  const double v = std::clamp(uv.y(), 0.0, tex.height - 1.0);
  const int x0 = static_cast<int>(std::floor(u)), y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, tex.width - 1), y1 = std::min(y0 + 1, tex.height - 1);
  const double fx = u - x0, fy = v - y0;
  for (int c = 0; c < ch; ++c) {
    const double top = (1.0 - fx) * tex.pixel(x0, y0)[c] + fx * tex.pixel(x1, y0)[c];
    const double bottom = (1.0 - fx) * tex.pixel(x0, y1)[c] + fx * tex.pixel(x1, y1)[c];
    const double value = (1.0 - fy) * top + fy * bottom;
    out[c] = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
  }
}

bool ProjectionMapper::shade(const Pose& projector_to_plane, const CameraIntrinsics& projector,
                             int i, int j, std::uint8_t* out) const {
  Vec2 xy;
  if (!pixel_to_plane(projector_to_plane, projector, i, j, xy)) return false;
  const int t = warp_.locate(xy);
  if (t < 0) return false;
  sample(t, warp_.barycentric(t, xy), out);
  return true;
}

Frame ProjectionMapper::render(const Pose& face_pose_estimate, const CameraIntrinsics& projector,
                               const Pose& projector_pose) const {
  const Pose plane_to_world = face_pose_estimate * face_.plane_frame();
  const Pose plane_to_projector = invert(projector_pose) * plane_to_world;
  const Pose projector_to_plane = invert(plane_to_projector);

  // Landmarks on the estimated plane, in projector pixels.
  const auto& layout = face_.plane_layout();
  std::array<Vec2, kNumLandmarks> pixels;
  for (int v = 0; v < kNumLandmarks; ++v) {
    const Vec2& l = layout[static_cast<std::size_t>(v)];
    const Vec3 p = plane_to_projector.apply(Vec3(l.x(), l.y(), 0.0));
    if (!(p.z() > 1e-6)) {
      throw Error(ErrorCode::kFaceBehindProjector, "landmark " + std::to_string(v) +
                                                       " is not in front of the projector");
    }
    pixels[static_cast<std::size_t>(v)] =
        Vec2(projector.fx * p.x() / p.z() + projector.cx, projector.fy * p.y() / p.z() + projector.cy);
  }

  Frame frame(projector.width, projector.height, mask_.texture.channels);
  std::vector<std::uint8_t> claimed(static_cast<std::size_t>(projector.width) *
                                        static_cast<std::size_t>(projector.height),
                                    0);
  const auto& tris = warp_.mesh().triangles;
  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    const auto& tri = tris[static_cast<std::size_t>(t)];
    const Vec2* v[3] = {&pixels[static_cast<std::size_t>(tri[0])],
                        &pixels[static_cast<std::size_t>(tri[1])],
                        &pixels[static_cast<std::size_t>(tri[2])]};
    const double vmin = std::min({v[0]->y(), v[1]->y(), v[2]->y()});
    const double vmax = std::max({v[0]->y(), v[1]->y(), v[2]->y()});
    const int j0 = std::max(0, static_cast<int>(std::floor(vmin)) - 1);
    const int j1 = std::min(projector.height - 1, static_cast<int>(std::ceil(vmax)) + 1);
    for (int j = j0; j <= j1; ++j) {
      // Span of the projected triangle within the band [j - 1, j + 1], widened
      // by a pixel; the exact containment test below decides.
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (int e = 0; e < 3; ++e) {
        const Vec2& a = *v[e];
        const Vec2& b = *v[(e + 1) % 3];
        if (a.y() >= j - 1.0 && a.y() <= j + 1.0) {
          lo = std::min(lo, a.x());
          hi = std::max(hi, a.x());
        }
        if (a.y() == b.y()) continue;
        for (double y : {j - 1.0, j + 1.0}) {
          const double s = (y - a.y()) / (b.y() - a.y());
          if (s < 0.0 || s > 1.0) continue;
          const double x = a.x() + s * (b.x() - a.x());
          lo = std::min(lo, x);
          hi = std::max(hi, x);
        }
      }
      if (!(lo <= hi)) continue;
      const int i0 = std::max(0, static_cast<int>(std::floor(lo)) - 1);
      const int i1 = std::min(projector.width - 1, static_cast<int>(std::ceil(hi)) + 1);
      for (int i = i0; i <= i1; ++i) {
        const std::size_t idx =
            static_cast<std::size_t>(j) * static_cast<std::size_t>(projector.width) +
            static_cast<std::size_t>(i);
        if (claimed[idx]) continue;
        Vec2 xy;
        if (!pixel_to_plane(projector_to_plane, projector, i, j, xy)) continue;
        const Vec2 weights = warp_.barycentric(t, xy);
        if (!PiecewiseAffineWarp::inside(weights)) continue;
        claimed[idx] = 1;
        sample(t, weights, frame.pixel(i, j));
      }
    }
  }
  return frame;
}

Frame render_projector_frame(const MaskTemplate& mask, const Pose& face_pose_estimate,
                             const FaceModel& face, const ProjectorModel& projector,
                             const Pose& projector_pose) {
  return ProjectionMapper(face, mask).render(face_pose_estimate, projector.intrinsics,
                                             projector_pose);
}

std::vector<int> all_anchor_indices() {
  std::vector<int> idx(kNumLandmarks);
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

OnFaceError onface_error(const FrameMapping& mapping, const Pose& truth_head,
                         const FaceModel& face, std::span<const int> anchors, bool quantize) {
  constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
  OnFaceError out{kNaN, kNaN, kNaN, kNaN};
  if (anchors.empty()) return out;

  const CameraIntrinsics& k = mapping.projector;
  const Pose true_plane = truth_head * face.plane_frame();
  const Vec3 normal = true_plane.axis();
  const Vec3& center = true_plane.translation;

  double sum = 0.0, worst = 0.0, relief_sum = 0.0, relief_worst = 0.0;
  for (int a : anchors) {
    if (a < 0 || a >= kNumLandmarks) throw ValidationError("anchors", "indices in [0, 67]");
    const Vec3 estimated = mapping.face_pose_estimate.apply(face.plane_point(a));
    const Vec3 local = invert(mapping.render_pose).apply(estimated);
    if (!(local.z() > 1e-6)) return {kNaN, kNaN, kNaN, kNaN};
    Vec2 px(k.fx * local.x() / local.z() + k.cx, k.fy * local.y() / local.z() + k.cy);
    if (quantize) px = Vec2(std::floor(px.x() + 0.5), std::floor(px.y() + 0.5));

    const Vec3 dir =
        mapping.emit_pose.rotation * Vec3((px.x() - k.cx) / k.fx, (px.y() - k.cy) / k.fy, 1.0);
    const Vec3& origin = mapping.emit_pose.translation;
    const double denom = normal.dot(dir);
    if (denom == 0.0) return {kNaN, kNaN, kNaN, kNaN};
    const double s = normal.dot(center - origin) / denom;
    if (!(s > 0.0)) return {kNaN, kNaN, kNaN, kNaN};
    const Vec3 hit = origin + s * dir;

    const double e = 1000.0 * (hit - truth_head.apply(face.plane_point(a))).norm();
    const double r = 1000.0 * (hit - truth_head.apply(face.points()[static_cast<std::size_t>(a)])).norm();
    sum += e;
    worst = std::max(worst, e);
    relief_sum += r;
    relief_worst = std::max(relief_worst, r);
  }
  const double n = static_cast<double>(anchors.size());
  return {sum / n, worst, relief_sum / n, relief_worst};
}

}  // namespace maskbot

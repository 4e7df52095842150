#include "maskbot/optics.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "maskbot/error.hpp"

namespace maskbot {
namespace {

constexpr double kMinDepth = 1e-6;
constexpr double kMinHomogeneousScale = 1e-12;

struct NormalizedPoints {
  std::vector<Vec2> points;
  Mat3 transform;  // maps original -> normalized
};

// Isotropic scaling: centroid at the origin, mean distance sqrt(2).
NormalizedPoints hartley_normalize(const std::vector<Vec2>& pts) {
  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - centroid).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "all points coincide");
  }
  const double s = std::sqrt(2.0) / mean_dist;
  NormalizedPoints out;
  out.transform << s, 0.0, -s * centroid.x(),
                   0.0, s, -s * centroid.y(),
                   0.0, 0.0, 1.0;
  out.points.reserve(pts.size());
  for (const auto& p : pts) out.points.emplace_back(s * (p - centroid));
  return out;
}

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// Points are already normalized (unit-ish scale), so an absolute tolerance is
// meaningful here.
void check_configuration(const std::vector<Vec2>& pts, const char* which) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((pts[i] - pts[j]).norm() < 1e-12) {
        throw Error(ErrorCode::kDegenerateConfiguration,
                    std::string("duplicate ") + which + " points");
      }
    }
  }
  constexpr double kCollinearTol = 1e-10;
  if (n == 4) {
    for (std::size_t skip = 0; skip < 4; ++skip) {
      std::vector<Vec2> tri;
      for (std::size_t i = 0; i < 4; ++i) {
        if (i != skip) tri.push_back(pts[i]);
      }
      if (std::abs(orient(tri[0], tri[1], tri[2])) < kCollinearTol) {
        throw Error(ErrorCode::kDegenerateConfiguration,
                    std::string("three collinear ") + which + " points");
      }
    }
    return;
  }
  // n > 4: at least one non-collinear triple through the first point pair.
  double best = 0.0;
  for (std::size_t k = 2; k < n; ++k) {
    best = std::max(best, std::abs(orient(pts[0], pts[1], pts[k])));
  }
  if (best < kCollinearTol) {
    throw Error(ErrorCode::kDegenerateConfiguration,
                std::string("all ") + which + " points collinear");
  }
}

}  // namespace

void CameraIntrinsics::validate(std::string_view field_prefix) const {
  const std::string p(field_prefix);
  if (!(std::isfinite(fx) && fx > 0.0)) throw ValidationError(p + ".fx", "> 0");
  if (!(std::isfinite(fy) && fy > 0.0)) throw ValidationError(p + ".fy", "> 0");
  if (width <= 0) throw ValidationError(p + ".width", "> 0");
  if (height <= 0) throw ValidationError(p + ".height", "> 0");
  if (!(std::isfinite(cx) && cx >= 0.0 && cx < width)) {
    throw ValidationError(p + ".cx", "in [0, width)");
  }
  if (!(std::isfinite(cy) && cy >= 0.0 && cy < height)) {
    throw ValidationError(p + ".cy", "in [0, height)");
  }
}

CameraIntrinsics default_camera_intrinsics() {
  return {1000.0, 1000.0, 640.0, 360.0, 1280, 720};
}

CameraIntrinsics default_projector_intrinsics() {
  return {1700.0, 1700.0, 640.0, 400.0, 1280, 800};
}

Mat3 normalize_homography(const Mat3& m) {
  const double n = m.norm();
  if (!(std::isfinite(n) && n > 0.0)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "homography is zero or not finite");
  }
  // Re-dividing an already unit matrix could flip low bits; skipping keeps
  // normalization idempotent.
  Mat3 out = std::abs(n - 1.0) <= 8.0 * std::numeric_limits<double>::epsilon() ? m : Mat3(m / n);
  double pivot = out(2, 2);
  if (pivot == 0.0) {
    for (int i = 0; i < 9 && pivot == 0.0; ++i) pivot = out(i / 3, i % 3);
  }
  if (pivot < 0.0) out = -out;
  return out;
}

Homography Homography::from_matrix(const Mat3& m) {
  return Homography(normalize_homography(m));
}

Vec2 project_camera_point(const CameraIntrinsics& k, const Vec3& pc) {
  if (!(pc.z() > kMinDepth)) {
    throw Error(ErrorCode::kBehindCamera, "point depth " + std::to_string(pc.z()) + " m");
  }
  return {k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy};
}

Vec2 project_point(const CameraIntrinsics& k, const Pose& cam_pose, const Vec3& world_point) {
  const Vec3 pc = cam_pose.rotation.transpose() * (world_point - cam_pose.translation);
  return project_camera_point(k, pc);
}

Vec3 pixel_ray(const CameraIntrinsics& k, const Vec2& pixel) {
  return {(pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, 1.0};
}

Vec3 backproject_pixel(const CameraIntrinsics& k, const Pose& cam_pose, const Vec2& pixel,
                       double depth) {
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth, "depth " + std::to_string(depth) + " m");
  }
  return cam_pose.apply(depth * pixel_ray(k, pixel));
}

Homography estimate_homography(std::span<const Correspondence> pairs) {
  const std::size_t n = pairs.size();
  if (n < 4) {
    throw Error(ErrorCode::kInsufficientPairs,
                "need at least 4 correspondences, got " + std::to_string(n));
  }
  std::vector<Vec2> src, dst;
  src.reserve(n);
  dst.reserve(n);
  for (const auto& c : pairs) {
    if (!c.src.allFinite() || !c.dst.allFinite()) {
      throw Error(ErrorCode::kDegenerateConfiguration, "non-finite coordinate");
    }
    src.push_back(c.src);
    dst.push_back(c.dst);
  }
  const NormalizedPoints ns = hartley_normalize(src);
  const NormalizedPoints nd = hartley_normalize(dst);
  check_configuration(ns.points, "source");
  check_configuration(nd.points, "destination");

  Eigen::MatrixXd a(2 * n, 9);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ns.points[i].x(), y = ns.points[i].y();
    const double u = nd.points[i].x(), v = nd.points[i].y();
    a.row(2 * i) << -x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u;
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // A rank-deficient system (beyond the one-dimensional null space) means the
  // points do not pin down a unique homography.
  if (sv.size() >= 8 && sv(7) < 1e-10 * sv(0)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "correspondences do not constrain H");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 hn;
  hn << h(0), h(1), h(2),
        h(3), h(4), h(5),
        h(6), h(7), h(8);
  const Mat3 full = nd.transform.inverse() * hn * ns.transform;
  return Homography::from_matrix(full);
}

Vec2 apply_homography(const Homography& h, const Vec2& p) {
  const Vec3 q = h.matrix() * Vec3(p.x(), p.y(), 1.0);
  if (std::abs(q.z()) < kMinHomogeneousScale) {
    throw Error(ErrorCode::kPointAtInfinity, "homogeneous scale vanishes");
  }
  return {q.x() / q.z(), q.y() / q.z()};
}

CalibrationResult calibrate_camera_projector(std::span<const Correspondence> pattern) {
  CalibrationResult out;
  out.homography = estimate_homography(pattern);
  out.errors_px.reserve(pattern.size());
  double sum = 0.0;
  for (const auto& c : pattern) {
    const double e = (apply_homography(out.homography, c.src) - c.dst).norm();
    out.errors_px.push_back(e);
    sum += e;
    out.max_error_px = std::max(out.max_error_px, e);
  }
  out.mean_error_px = sum / static_cast<double>(pattern.size());
  return out;
}

double distance_from_face_width(double fx, double real_width, double pixel_width) {
  if (!(pixel_width > 0.0)) {
    throw Error(ErrorCode::kNonPositiveWidth, "pixel width must be > 0");
  }
  if (!(real_width > 0.0)) {
    throw Error(ErrorCode::kNonPositiveWidth, "real width must be > 0");
  }
  return fx * real_width / pixel_width;
}

std::vector<Correspondence> read_correspondences(std::istream& in) {
  std::vector<Correspondence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double v[4];
    int count = 0;
    double tmp;
    while (ss >> tmp) {
      if (count < 4) v[count] = tmp;
      ++count;
    }
    if (!ss.eof()) throw ParseError(line_no, "expected numbers");
    if (count == 0) continue;
    if (count != 4) {
      throw ParseError(line_no, "expected 4 values, got " + std::to_string(count));
    }
    for (double x : v) {
      if (!std::isfinite(x)) throw ParseError(line_no, "non-finite coordinate");
    }
    out.push_back({Vec2(v[0], v[1]), Vec2(v[2], v[3])});
  }
  return out;
}

std::vector<Correspondence> read_correspondences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return read_correspondences(in);
}

void write_correspondences(std::ostream& out, std::span<const Correspondence> pairs) {
  out << "# u_src v_src u_dst v_dst\n";
  char buf[128];
  for (const auto& c : pairs) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", c.src.x(), c.src.y(), c.dst.x(),
                  c.dst.y());
    out << buf;
  }
}

}  // namespace maskbot

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "maskbot/error.hpp"
#include "maskbot/face_world.hpp"

namespace maskbot {
namespace {

// Ellipse arc sampled at `angles`; y up, z from `depth(angle)`.
template <typename DepthFn>
void put_arc(LandmarkPoints3& pts, int first, const Vec2& center, double ax, double ay,
             std::initializer_list<double> angles, DepthFn depth) {
  int i = first;
  for (double a : angles) {
    pts[i++] = Vec3(center.x() + ax * std::cos(a), center.y() + ay * std::sin(a), depth(a));
  }
}

}  // namespace

LandmarkPoints3 canonical_face_points() {
  LandmarkPoints3 p{};

  // Jaw 0..16: from the subject's right ear line, under the chin, to the left.
  for (int i = 0; i <= 16; ++i) {
    const double phi = kPi * i / 16.0;
    const double x = -0.075 * std::cos(phi);
    const double y = 0.02 - 0.11 * std::pow(std::sin(phi), 1.4);
    const double z = 0.002 + 0.008 * std::sin(phi);
    p[i] = Vec3(x, y, z);
  }

  // Brows 17..21 (right) and 22..26 (left), arched.
  for (int i = 0; i < 5; ++i) {
    const double s = i / 4.0;
    const double x = -0.062 + 0.047 * s;
    const double y = 0.045 + 0.010 * std::sin(kPi * (0.2 + 0.7 * s));
    p[17 + i] = Vec3(x, y, 0.006 + 0.004 * s);
    p[26 - i] = Vec3(-x, y, 0.006 + 0.004 * s);
  }

  // Nose bridge 27..30 down to the tip.
  for (int i = 0; i < 4; ++i) {
    const double s = i / 3.0;
    p[27 + i] = Vec3(0.0, 0.035 - 0.040 * s, 0.010 + 0.014 * s);
  }
  // Nose base 31..35.
  for (int i = 0; i < 5; ++i) {
    const double x = -0.016 + 0.008 * i;
    const double y = -0.013 - 0.004 * std::cos(kPi * (i - 2) / 4.0);
    const double z = 0.012 + 0.005 * std::cos(kPi * (i - 2) / 4.0);
    p[31 + i] = Vec3(x, y, z);
  }

  // Eyes: outer corner, two upper, inner corner, two lower.
  const auto eye_angles = {kPi, 2.0 * kPi / 3.0, kPi / 3.0, 0.0, -kPi / 3.0, -2.0 * kPi / 3.0};
  const auto eye_depth = [](double a) { return 0.001 * std::sin(a); };
  put_arc(p, 36, Vec2(-0.032, 0.022), 0.012, 0.005, eye_angles, eye_depth);
  // Left eye starts at its inner corner, so the same angles apply.
  put_arc(p, 42, Vec2(0.032, 0.022), 0.012, 0.005, eye_angles, eye_depth);

  // Outer lips 48..59 and inner lips 60..67, counter-clockwise from the right
  // corner across the upper lip.
  const auto lip_depth = [](double a) { return 0.008 + 0.003 * std::abs(std::sin(a)); };
  for (int k = 0; k < 12; ++k) {
    const double a = kPi - k * kPi / 6.0;
    const double ay = std::sin(a) >= 0.0 ? 0.010 : 0.012;
    p[48 + k] = Vec3(0.025 * std::cos(a), -0.045 + ay * std::sin(a), lip_depth(a));
  }
  for (int k = 0; k < 8; ++k) {
    const double a = kPi - k * kPi / 4.0;
    p[60 + k] = Vec3(0.018 * std::cos(a), -0.045 + 0.003 * std::sin(a), 0.006);
  }

  // Express in the best-fit plane frame so the head frame and plane frame
  // coincide.
  Vec3 centroid = Vec3::Zero();
  for (const auto& q : p) centroid += q;
  centroid /= kNumLandmarks;
  Mat3 cov = Mat3::Zero();
  for (const auto& q : p) cov += (q - centroid) * (q - centroid).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 z = eig.eigenvectors().col(0);
  if (z.dot(p[landmarks::kNoseTip] - centroid) < 0.0) z = -z;
  Vec3 x = Vec3::UnitX() - Vec3::UnitX().dot(z) * z;
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  for (auto& q : p) q = r.transpose() * (q - centroid);

  const double width = (p[16] - p[0]).norm();
  for (auto& q : p) q *= 0.15 / width;
  return p;
}

LandmarkPoints3 read_landmark_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  LandmarkPoints3 out{};
  std::string line;
  int line_no = 0, count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    double v[3];
    int n = 0;
    double tmp;
    while (ss >> tmp) {
      if (n < 3) v[n] = tmp;
      ++n;
    }
    if (!ss.eof()) throw ParseError(line_no, "expected numbers");
    if (n == 0) continue;
    if (n != 3) throw ParseError(line_no, "expected 3 values, got " + std::to_string(n));
    if (count >= kNumLandmarks) throw ParseError(line_no, "more than 68 landmarks");
    out[count++] = Vec3(v[0], v[1], v[2]);
  }
  if (count != kNumLandmarks) {
    throw ParseError(line_no, "expected 68 landmarks, got " + std::to_string(count));
  }
  return out;
}

void write_landmark_fixture(const std::filesystem::path& path, const LandmarkPoints3& points) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << "# 68-point canonical face, head frame, meters: x y z\n";
  char buf[96];
  for (const auto& q : points) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", q.x(), q.y(), q.z());
    out << buf;
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace maskbot

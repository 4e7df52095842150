#include <gtest/gtest.h>

#include <sstream>
#include <vector>

#include "maskbot/error.hpp"
#include "maskbot/optics.hpp"
#include "test_support.hpp"

namespace maskbot {
namespace {

using testing::Rng;

CameraIntrinsics k800() {
  CameraIntrinsics k;
  k.fx = k.fy = 800;
  k.cx = 320;
  k.cy = 240;
  k.width = 640;
  k.height = 480;
  return k;
}

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no exception thrown";
  return ErrorCode::kIoError;
}

Vec2 apply_raw(const Mat3& h, const Vec2& p) {
  const Vec3 w = h * p.homogeneous();
  return w.hnormalized();
}

// Same projective map, compared after bringing both to unit norm and a common sign.
double relative_error(const Mat3& estimate, const Mat3& truth) {
  Mat3 a = estimate / estimate.norm();
  Mat3 b = truth / truth.norm();
  if ((a - b).norm() > (a + b).norm()) a = -a;
  return (a - b).norm() / b.norm();
}

Mat3 random_homography(Rng& rng) {
  Mat3 h = Mat3::Identity();
  h(0, 0) = rng.uniform(0.8, 1.2);
  h(1, 1) = rng.uniform(0.8, 1.2);
  h(0, 1) = rng.uniform(-0.2, 0.2);
  h(1, 0) = rng.uniform(-0.2, 0.2);
  h(0, 2) = rng.uniform(-50, 50);
  h(1, 2) = rng.uniform(-50, 50);
  h(2, 0) = rng.uniform(-1e-4, 1e-4);
  h(2, 1) = rng.uniform(-1e-4, 1e-4);
  return h;
}

TEST(Intrinsics, DefaultsMatchDocumentedHardware) {
  const CameraIntrinsics cam = default_camera_intrinsics();
  EXPECT_EQ(cam.width, 1280);
  EXPECT_EQ(cam.height, 720);
  EXPECT_EQ(cam.fx, 1000.0);
  EXPECT_EQ(cam.fy, 1000.0);
  EXPECT_EQ(cam.cx, 640.0);
  EXPECT_EQ(cam.cy, 360.0);
  const CameraIntrinsics proj = default_projector_intrinsics();
  EXPECT_EQ(proj.width, 1280);
  EXPECT_EQ(proj.height, 800);
  EXPECT_EQ(proj.fx, 1700.0);
  EXPECT_EQ(proj.fy, 1700.0);
}

TEST(Intrinsics, ValidationNamesTheField) {
  CameraIntrinsics k = k800();
  k.fx = 0;
  try {
    k.validate("camera");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "camera.fx");
  }
  k = k800();
  k.cx = 640;  // must be < width
  EXPECT_THROW(k.validate(), ValidationError);
  k = k800();
  k.cy = -1;
  EXPECT_THROW(k.validate(), ValidationError);
  EXPECT_NO_THROW(k800().validate());
}

TEST(ProjectPoint, OnAxisAndOffAxis) {
  const CameraIntrinsics k = k800();
  const Vec2 a = project_point(k, Pose::identity(), {0, 0, 2});
  EXPECT_EQ(a, Vec2(320, 240));
  const Vec2 b = project_point(k, Pose::identity(), {0.1, 0, 2});
  EXPECT_NEAR(b.x(), 360.0, 1e-12);
  EXPECT_NEAR(b.y(), 240.0, 1e-12);
}

TEST(ProjectPoint, BehindCamera) {
  EXPECT_EQ(code_of([] { project_point(k800(), Pose::identity(), {0, 0, -1}); }),
            ErrorCode::kBehindCamera);
  EXPECT_EQ(code_of([] { project_camera_point(k800(), {0, 0, 1e-6}); }), ErrorCode::kBehindCamera);
}

TEST(ProjectPoint, UsesCameraPose) {
  // Camera at (1, 0, 0) looking along world -X: world origin is 1 m ahead.
  const Pose cam = look_at_pose({1, 0, 0}, Vec3::Zero(), {0, 0, 1});
  const Vec2 px = project_point(k800(), cam, Vec3::Zero());
  EXPECT_NEAR(px.x(), 320, 1e-12);
  EXPECT_NEAR(px.y(), 240, 1e-12);
}

TEST(Backproject, PrincipalRay) {
  const Vec3 p = backproject_pixel(k800(), Pose::identity(), {320, 240}, 2.0);
  EXPECT_EQ(p, Vec3(0, 0, 2));
  EXPECT_EQ(code_of([] { backproject_pixel(k800(), Pose::identity(), {1, 1}, 0.0); }),
            ErrorCode::kNonPositiveDepth);
  EXPECT_EQ(code_of([] { backproject_pixel(k800(), Pose::identity(), {1, 1}, -3.0); }),
            ErrorCode::kNonPositiveDepth);
}

TEST(Backproject, RoundTripRandomPixelsAndDepths) {
  Rng rng(20);
  for (int n = 0; n < 1000; ++n) {
    const Pose cam = rng.pose(2.0);
    const Vec2 px(rng.uniform(-100, 740), rng.uniform(-100, 580));
    const double depth = rng.uniform(0.1, 10.0);
    const Vec3 world = backproject_pixel(k800(), cam, px, depth);
    EXPECT_NEAR(invert(cam).apply(world).z(), depth, 1e-12 * depth + 1e-12);
    EXPECT_LT((project_point(k800(), cam, world) - px).norm(), 1e-9);
  }
}

TEST(PixelRay, UnitDepth) {
  const Vec3 r = pixel_ray(k800(), {400, 200});
  EXPECT_EQ(r.z(), 1.0);
  EXPECT_NEAR(r.x(), 0.1, 1e-15);
  EXPECT_NEAR(r.y(), -0.05, 1e-15);
}

TEST(Homography, UnitSquareIdentity) {
  const std::vector<Correspondence> pairs = {
      {{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{1, 1}, {1, 1}}, {{0, 1}, {0, 1}}};
  const Homography h = estimate_homography(pairs);
  EXPECT_LT(relative_error(h.matrix(), Mat3::Identity()), 1e-12);
  EXPECT_NEAR(h.matrix().norm(), 1.0, 1e-15);
  EXPECT_GE(h.matrix()(2, 2), 0.0);
}

TEST(Homography, TranslatedSquare) {
  std::vector<Correspondence> pairs;
  for (const Vec2 p : {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)}) pairs.push_back({p, p + Vec2(5, 7)});
  const Mat3 h = estimate_homography(pairs).matrix();
  const Vec3 t = h.col(2) / h(2, 2);
  EXPECT_NEAR(t.x(), 5.0, 1e-9);
  EXPECT_NEAR(t.y(), 7.0, 1e-9);
  EXPECT_NEAR(t.z(), 1.0, 1e-15);
  EXPECT_LT(std::abs(h(2, 0)) + std::abs(h(2, 1)), 1e-12);
}

TEST(Homography, SynthesizeAndRecover) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Mat3 truth = random_homography(rng);
    std::vector<Correspondence> pairs;
    for (int i = 0; i < 8; ++i) {
      const Vec2 p(rng.uniform(0, 1280), rng.uniform(0, 800));
      pairs.push_back({p, apply_raw(truth, p)});
    }
    const Homography h = estimate_homography(pairs);
    EXPECT_LT(relative_error(h.matrix(), normalize_homography(truth)), 1e-9);
    for (const auto& c : pairs) EXPECT_LT((apply_homography(h, c.src) - c.dst).norm(), 1e-6);
  }
}

TEST(Homography, InvariantUnderUniformPixelRescale) {
  Rng rng(22);
  const Mat3 truth = random_homography(rng);
  std::vector<Correspondence> pairs, scaled;
  const double s = 3.5;
  for (int i = 0; i < 10; ++i) {
    const Vec2 p(rng.uniform(0, 640), rng.uniform(0, 480));
    Vec2 q = apply_raw(truth, p) + Vec2(rng.normal(0.3), rng.normal(0.3));
    pairs.push_back({p, q});
    scaled.push_back({s * p, s * q});
  }
  const Mat3 h = estimate_homography(pairs).matrix();
  const Mat3 hs = estimate_homography(scaled).matrix();
  // H_s = S H S^-1 with S = diag(s, s, 1).
  const Mat3 S = Eigen::Vector3d(s, s, 1).asDiagonal();
  EXPECT_LT(relative_error(hs, S * h * S.inverse()), 1e-9);
}

TEST(Homography, Errors) {
  const std::vector<Correspondence> three = {{{0, 0}, {0, 0}}, {{1, 0}, {1, 0}}, {{0, 1}, {0, 1}}};
  EXPECT_EQ(code_of([&] { estimate_homography(three); }), ErrorCode::kInsufficientPairs);
  const std::vector<Correspondence> collinear = {
      {{0, 0}, {0, 0}}, {{1, 1}, {1, 0}}, {{2, 2}, {1, 1}}, {{3, 3}, {0, 1}}};
  EXPECT_EQ(code_of([&] { estimate_homography(collinear); }), ErrorCode::kDegenerateConfiguration);
  const std::vector<Correspondence> duplicate = {
      {{0, 0}, {0, 0}}, {{0, 0}, {1, 0}}, {{1, 1}, {1, 1}}, {{0, 1}, {0, 1}}};
  EXPECT_EQ(code_of([&] { estimate_homography(duplicate); }), ErrorCode::kDegenerateConfiguration);
}

TEST(Homography, NormalizationIsIdempotentBitForBit) {
  Rng rng(23);
  for (int n = 0; n < 200; ++n) {
    Mat3 m = random_homography(rng) * rng.uniform(-100, 100);
    if (n % 7 == 0) m(2, 2) = 0.0;
    const Mat3 once = normalize_homography(m);
    const Mat3 twice = normalize_homography(once);
    EXPECT_EQ(once, twice);
    EXPECT_NEAR(once.norm(), 1.0, 1e-15);
    EXPECT_GE(once(2, 2), 0.0);
  }
  EXPECT_EQ(code_of([] { Homography::from_matrix(Mat3::Zero()); }), ErrorCode::kDegenerateConfiguration);
}

TEST(ApplyHomography, IdentityTranslationAndInfinity) {
  const Homography id = Homography::from_matrix(Mat3::Identity());
  EXPECT_LT((apply_homography(id, {12.5, -3}) - Vec2(12.5, -3)).norm(), 1e-12);
  Mat3 t = Mat3::Identity();
  t(0, 2) = 5;
  t(1, 2) = 7;
  EXPECT_LT((apply_homography(Homography::from_matrix(t), {0, 0}) - Vec2(5, 7)).norm(), 1e-12);
  Mat3 bad = Mat3::Identity();
  bad.row(2) << 1.0, 0.0, -1.0;  // w = x - 1 vanishes at x = 1
  const Homography h = Homography::from_matrix(bad);
  EXPECT_EQ(code_of([&] { apply_homography(h, {1.0, 5.0}); }), ErrorCode::kPointAtInfinity);
}

// Projector pixel -> plane -> camera pixel through explicit ray casting.
struct PlanarRig {
  CameraIntrinsics projector = default_projector_intrinsics();
  CameraIntrinsics camera = default_camera_intrinsics();
  Pose projector_pose = look_at_pose({0.04, 0, 0}, {0.04, 0.05, 0.6}, {0, -1, 0});
  Pose camera_pose = look_at_pose({-0.04, 0, 0}, {0.0, 0.0, 0.6}, {0, -1, 0});
  Vec3 plane_point{0, 0, 0.6};
  Vec3 plane_normal = Vec3(0.1, -0.2, -1).normalized();

  Vec2 transfer(const Vec2& proj_px) const {
    const Vec3 dir = projector_pose.rotate(pixel_ray(projector, proj_px));
    const Vec3 o = projector_pose.translation;
    const double s = (plane_point - o).dot(plane_normal) / dir.dot(plane_normal);
    return project_point(camera, camera_pose, o + s * dir);
  }

  std::vector<Correspondence> grid(Rng* noise, double sigma) const {
    std::vector<Correspondence> out;
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 7; ++c) {
        const Vec2 p(200 + 150 * c, 150 + 125 * r);
        Vec2 q = transfer(p);
        if (noise) q += Vec2(noise->normal(sigma), noise->normal(sigma));
        out.push_back({p, q});
      }
    }
    return out;
  }
};

TEST(Calibration, NoiselessGridIsExact) {
  const PlanarRig rig;
  const auto pattern = rig.grid(nullptr, 0.0);
  const CalibrationResult cal = calibrate_camera_projector(pattern);
  EXPECT_LT(cal.max_error_px, 1e-6);
  EXPECT_EQ(cal.errors_px.size(), pattern.size());
  // The fit generalises to other pixels on the same plane.
  EXPECT_LT((apply_homography(cal.homography, {777, 333}) - rig.transfer({777, 333})).norm(), 1e-6);
}

TEST(Calibration, NoisyGridMeanErrorBelowOnePixel) {
  const PlanarRig rig;
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(1000 + seed);
    const CalibrationResult cal = calibrate_camera_projector(rig.grid(&rng, 0.5));
    EXPECT_LT(cal.mean_error_px, 1.0) << "seed " << seed;
    double sum = 0, mx = 0;
    for (double e : cal.errors_px) {
      sum += e;
      mx = std::max(mx, e);
    }
    EXPECT_DOUBLE_EQ(cal.mean_error_px, sum / cal.errors_px.size());
    EXPECT_EQ(cal.max_error_px, mx);
  }
}

TEST(Calibration, ThreePairsInsufficient) {
  const auto grid = PlanarRig{}.grid(nullptr, 0.0);
  const std::vector<Correspondence> three(grid.begin(), grid.begin() + 3);
  EXPECT_EQ(code_of([&] { calibrate_camera_projector(three); }), ErrorCode::kInsufficientPairs);
}

TEST(FaceWidthDistance, HandCalculation) {
  EXPECT_DOUBLE_EQ(distance_from_face_width(1000, 0.15, 150), 1.0);
}

TEST(FaceWidthDistance, RoundTripsForwardModel) {
  Rng rng(24);
  for (int n = 0; n < 1000; ++n) {
    const double d = rng.uniform(0.3, 2.0), fx = rng.uniform(500, 2000), w = rng.uniform(0.1, 0.2);
    EXPECT_NEAR(distance_from_face_width(fx, w, fx * w / d), d, 1e-12 * d);
  }
}

TEST(FaceWidthDistance, NonPositiveWidth) {
  EXPECT_EQ(code_of([] { distance_from_face_width(1000, 0.15, 0.0); }), ErrorCode::kNonPositiveWidth);
  EXPECT_EQ(code_of([] { distance_from_face_width(1000, -0.15, 10.0); }), ErrorCode::kNonPositiveWidth);
}

TEST(CorrespondenceFile, RoundTripAndComments) {
  std::istringstream in("# header\n1 2 3 4\n\n  5.5 6 7 8 # trailing\n");
  const auto pairs = read_correspondences(in);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[1].src, Vec2(5.5, 6));
  EXPECT_EQ(pairs[1].dst, Vec2(7, 8));
  std::ostringstream out;
  write_correspondences(out, pairs);
  std::istringstream back(out.str());
  const auto again = read_correspondences(back);
  ASSERT_EQ(again.size(), 2u);
  EXPECT_EQ(again[0].src, pairs[0].src);
  EXPECT_EQ(again[1].dst, pairs[1].dst);
}

TEST(CorrespondenceFile, ParseErrorsCarryLineNumbers) {
  std::istringstream short_line("1 2 3 4\n1 2 3\n");
  try {
    read_correspondences(short_line);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  std::istringstream junk("# ok\n\n1 2 x 4\n");
  try {
    read_correspondences(junk);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

}  // namespace
}  // namespace maskbot

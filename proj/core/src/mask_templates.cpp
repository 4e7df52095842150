#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "maskbot/error.hpp"
#include "maskbot/projection_mapping.hpp"

namespace maskbot {
namespace {

struct Rgb {
  std::uint8_t r, g, b;
};

bool inside_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      in = !in;
    }
  }
  return in;
}

double segment_distance(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + t * ab - p).norm();
}

class Canvas {
 public:
  explicit Canvas(int size) : frame_(size, size, 3, 0) {}

  void paint(const std::function<bool(const Vec2&)>& region, Rgb c) {
    for (int y = 0; y < frame_.height; ++y) {
      for (int x = 0; x < frame_.width; ++x) {
        if (!region(Vec2(x, y))) continue;
        std::uint8_t* px = frame_.pixel(x, y);
        px[0] = c.r;
        px[1] = c.g;
        px[2] = c.b;
      }
    }
  }

  Frame take() { return std::move(frame_); }

 private:
  Frame frame_;
};

std::vector<Vec2> pick(const LandmarkPoints2& a, std::initializer_list<int> idx) {
  std::vector<Vec2> out;
  for (int i : idx) out.push_back(a[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<Vec2> range(const LandmarkPoints2& a, int begin, int end) {
  return {a.begin() + begin, a.begin() + end};
}

Vec2 mean_of(const std::vector<Vec2>& pts) {
  Vec2 m = Vec2::Zero();
  for (const auto& p : pts) m += p;
  return m / static_cast<double>(pts.size());
}

void draw_beard(Canvas& c, const LandmarkPoints2& a) {
  auto beard = pick(a, {2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 35, 34, 33, 32, 31});
  const auto lips = range(a, 48, 60);
  c.paint([&](const Vec2& p) { return inside_polygon(beard, p) && !inside_polygon(lips, p); },
          {96, 58, 30});
}

void draw_glasses(Canvas& c, const LandmarkPoints2& a) {
  const double eye_w = (a[39] - a[36]).norm();
  const double rx = 0.9 * eye_w, ry = 0.65 * eye_w, rim = 0.12 * eye_w;
  const Vec2 left = mean_of(range(a, 36, 42));
  const Vec2 right = mean_of(range(a, 42, 48));
  const auto ellipse = [&](const Vec2& center, const Vec2& p, double grow) {
    const Vec2 d = p - center;
    return std::pow(d.x() / (rx + grow), 2) + std::pow(d.y() / (ry + grow), 2) <= 1.0;
  };
  c.paint([&](const Vec2& p) { return ellipse(left, p, 0.0) || ellipse(right, p, 0.0); },
          {40, 60, 110});
  const Vec2 bridge_l = left + Vec2(rx, 0.0), bridge_r = right - Vec2(rx, 0.0);
  const Vec2 temple_l = left - Vec2(rx, 0.0), temple_r = right + Vec2(rx, 0.0);
  c.paint(
      [&](const Vec2& p) {
        const bool ring = (ellipse(left, p, rim) && !ellipse(left, p, 0.0)) ||
                          (ellipse(right, p, rim) && !ellipse(right, p, 0.0));
        return ring || segment_distance(bridge_l, bridge_r, p) <= rim ||
               segment_distance(temple_l, a[0], p) <= rim ||
               segment_distance(temple_r, a[16], p) <= rim;
      },
      {0, 200, 255});
}

void draw_logo(Canvas& c, const LandmarkPoints2& a) {
  // Concentric target on the subject's left cheek.
  const Vec2 center = (a[13] + a[35] + a[46]) / 3.0;
  const double radius = 0.45 * (a[13] - a[35]).norm();
  for (int ring = 4; ring >= 1; --ring) {
    const double r = radius * ring / 4.0;
    const Rgb color = ring % 2 == 0 ? Rgb{230, 30, 40} : Rgb{255, 255, 255};
    c.paint([&](const Vec2& p) { return (p - center).norm() <= r; }, color);
  }
  // Star in the middle.
  c.paint(
      [&](const Vec2& p) {
        const Vec2 d = p - center;
        const double ang = std::atan2(d.y(), d.x());
        const double lobe = 0.55 + 0.45 * std::cos(5.0 * ang);
        return d.norm() <= 0.22 * radius * (0.5 + lobe);
      },
      {255, 210, 0});
}

void draw_makeup(Canvas& c, const LandmarkPoints2& a) {
  const auto outer = range(a, 48, 60);
  const auto inner = range(a, 60, 68);
  c.paint([&](const Vec2& p) { return inside_polygon(outer, p) && !inside_polygon(inner, p); },
          {200, 20, 60});
  // Eyeshadow between brow and upper eyelid.
  const auto shadow_r = pick(a, {17, 18, 19, 20, 21, 39, 38, 37, 36});
  const auto shadow_l = pick(a, {22, 23, 24, 25, 26, 45, 44, 43, 42});
  c.paint([&](const Vec2& p) { return inside_polygon(shadow_r, p) || inside_polygon(shadow_l, p); },
          {120, 60, 170});
  const double blush = 0.35 * (a[3] - a[31]).norm();
  const Vec2 cheek_r = (a[2] + a[31] + a[40]) / 3.0;
  const Vec2 cheek_l = (a[14] + a[35] + a[47]) / 3.0;
  c.paint(
      [&](const Vec2& p) { return (p - cheek_r).norm() <= blush || (p - cheek_l).norm() <= blush; },
      {240, 120, 140});
}

}  // namespace

MaskTemplate make_mask_template(MaskKind kind, const FaceModel& face, int size) {
  if (kind == MaskKind::kCustom) {
    throw ValidationError("mask.kind", "a procedural kind (custom needs texture files)");
  }
  if (size < 16) throw ValidationError("mask.size", ">= 16");

  // Viewer's view of the face: texture u along head +X, v down.
  const auto& layout = face.plane_layout();
  double xmin = layout[0].x(), xmax = xmin, ymin = layout[0].y(), ymax = ymin;
  for (const auto& p : layout) {
    xmin = std::min(xmin, p.x());
    xmax = std::max(xmax, p.x());
    ymin = std::min(ymin, p.y());
    ymax = std::max(ymax, p.y());
  }
  const double scale = 0.85 * (size - 1) / std::max(xmax - xmin, ymax - ymin);
  const double mid = 0.5 * (size - 1);
  MaskTemplate mask;
  mask.kind = kind;
  for (int i = 0; i < kNumLandmarks; ++i) {
    const Vec2& p = layout[static_cast<std::size_t>(i)];
    mask.anchors[static_cast<std::size_t>(i)] =
        Vec2(mid + scale * (p.x() - 0.5 * (xmin + xmax)), mid - scale * (p.y() - 0.5 * (ymin + ymax)));
  }

  Canvas canvas(size);
  switch (kind) {
    case MaskKind::kBeard: draw_beard(canvas, mask.anchors); break;
    case MaskKind::kGlasses: draw_glasses(canvas, mask.anchors); break;
    case MaskKind::kLogo: draw_logo(canvas, mask.anchors); break;
    case MaskKind::kMakeup: draw_makeup(canvas, mask.anchors); break;
    case MaskKind::kCustom: break;
  }
  mask.texture = canvas.take();
  mask.validate();
  return mask;
}

LandmarkPoints2 read_anchor_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  LandmarkPoints2 out{};
  std::string line;
  int line_no = 0, count = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<double> v;
    double tmp;
    while (ss >> tmp) v.push_back(tmp);
    if (!ss.eof()) throw ParseError(line_no, "expected numbers");
    if (v.empty()) continue;
    if (v.size() != 2) throw ParseError(line_no, "expected `u v`");
    if (count >= kNumLandmarks) throw ParseError(line_no, "more than 68 anchors");
    out[static_cast<std::size_t>(count++)] = Vec2(v[0], v[1]);
  }
  if (count != kNumLandmarks) {
    throw ParseError(line_no, "expected 68 anchors, got " + std::to_string(count));
  }
  return out;
}

void write_anchor_file(const std::filesystem::path& path, const LandmarkPoints2& anchors) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << "# 68 texture anchors: u v (pixels)\n";
  char buf[64];
  for (const auto& a : anchors) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", a.x(), a.y());
    out << buf;
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

MaskTemplate load_mask_template(const std::filesystem::path& texture,
                                const std::filesystem::path& anchors) {
  MaskTemplate mask;
  mask.kind = MaskKind::kCustom;
  mask.texture = read_pnm(texture);
  mask.anchors = read_anchor_file(anchors);
  mask.validate();
  return mask;
}

}  // namespace maskbot

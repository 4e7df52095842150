#include <algorithm>
#include <list>
#include <map>
#include <numeric>
#include <utility>

#include "maskbot/error.hpp"
#include "maskbot/projection_mapping.hpp"
#include "predicates.hpp"

namespace maskbot {
namespace {

using Edge = std::pair<int, int>;

Triangle canonical_order(Triangle t) {
  const auto it = std::min_element(t.begin(), t.end());
  std::rotate(t.begin(), it, t.end());
  return t;
}

// Lawson flips until every interior edge is locally Delaunay.
void legalize(std::span<const Vec2> pts, std::vector<Triangle>& tris) {
  bool flipped = true;
  while (flipped) {
    flipped = false;
    // Directed edge -> (triangle, opposite vertex).
    std::map<Edge, std::pair<int, int>> owner;
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      for (int e = 0; e < 3; ++e) {
        owner[{tris[t][e], tris[t][(e + 1) % 3]}] = {t, tris[t][(e + 2) % 3]};
      }
    }
    std::vector<bool> touched(tris.size(), false);
    for (const auto& [edge, info] : owner) {
      const auto [a, b] = edge;
      if (a > b) continue;
      const auto twin = owner.find({b, a});
      if (twin == owner.end()) continue;
      const auto [t1, c] = info;
      const auto [t2, d] = twin->second;
      if (touched[t1] || touched[t2]) continue;
      // (a, b, c) is counter-clockwise; d is across edge ab.
      if (detail::incircle(pts[a], pts[b], pts[c], pts[d]) <= 0) continue;
      tris[t1] = {c, a, d};
      tris[t2] = {d, b, c};
      touched[t1] = touched[t2] = true;
      flipped = true;
    }
  }
}

}  // namespace

TriangleMesh triangulate_landmarks(std::span<const Vec2> points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw Error(ErrorCode::kDegeneratePoints, "need at least 3 points");
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::kDegeneratePoints, "non-finite point");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    const Vec2& a = points[i];
    const Vec2& b = points[j];
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    return i < j;
  });
  for (int k = 1; k < n; ++k) {
    if (points[order[k]] == points[order[k - 1]]) {
      throw Error(ErrorCode::kDegeneratePoints, "duplicate points " +
                                                    std::to_string(order[k - 1]) + " and " +
                                                    std::to_string(order[k]));
    }
  }

  // The leading run of collinear points, closed by the first point off it.
  int apex = 2;
  while (apex < n && detail::orient2d(points[order[0]], points[order[1]], points[order[apex]]) == 0)
    ++apex;
  if (apex == n) throw Error(ErrorCode::kDegeneratePoints, "all points collinear");

  std::vector<Triangle> tris;
  std::list<int> hull;  // counter-clockwise
  const int top = order[apex];
  const bool apex_left =
      detail::orient2d(points[order[0]], points[order[1]], points[top]) > 0;
  for (int k = 0; k + 1 < apex; ++k) {
    const int a = order[k], b = order[k + 1];
    tris.push_back(apex_left ? Triangle{a, b, top} : Triangle{b, a, top});
  }
  if (apex_left) {
    for (int k = 0; k < apex; ++k) hull.push_back(order[k]);
    hull.push_back(top);
  } else {
    hull.push_back(top);
    for (int k = apex - 1; k >= 0; --k) hull.push_back(order[k]);
  }

  // Each later point is lexicographically beyond the hull, hence outside it.
  const auto next = [&](std::list<int>::iterator it) {
    return ++it == hull.end() ? hull.begin() : it;
  };
  for (int k = apex + 1; k < n; ++k) {
    const int p = order[k];
    std::vector<std::list<int>::iterator> visible;  // edge starts
    for (auto it = hull.begin(); it != hull.end(); ++it) {
      if (detail::orient2d(points[*it], points[*next(it)], points[p]) < 0) visible.push_back(it);
    }
    for (const auto& it : visible) tris.push_back({*next(it), *it, p});
    // Visible edges form one chain; locate its first edge (predecessor not visible).
    const auto is_visible = [&](std::list<int>::iterator it) {
      return std::find(visible.begin(), visible.end(), it) != visible.end();
    };
    auto first = visible.front();
    while (true) {
      auto prev = first == hull.begin() ? std::prev(hull.end()) : std::prev(first);
      if (!is_visible(prev)) break;
      first = prev;
    }
    // Remove the interior vertices of the chain, then insert p after its start.
    auto cursor = next(first);
    for (std::size_t e = 1; e < visible.size(); ++e) {
      auto after = next(cursor);
      hull.erase(cursor);
      cursor = after;
    }
    hull.insert(cursor == hull.begin() ? hull.end() : cursor, p);
  }

  legalize(points, tris);

  TriangleMesh mesh;
  mesh.triangles.reserve(tris.size());
  for (const auto& t : tris) mesh.triangles.push_back(canonical_order(t));
  std::sort(mesh.triangles.begin(), mesh.triangles.end());
  return mesh;
}

}  // namespace maskbot

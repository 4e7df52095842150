#pragma once

#include "maskbot/geometry.hpp"

namespace maskbot::detail {

/// Sign of the signed area of (a, b, c): +1 counter-clockwise, -1 clockwise,
/// 0 collinear. Exact for all finite double inputs.
int orient2d(const Vec2& a, const Vec2& b, const Vec2& c);

/// +1 when d lies strictly inside the circle through the counter-clockwise
/// triangle (a, b, c), -1 outside, 0 cocircular. Exact for finite inputs.
int incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d);

}  // namespace maskbot::detail

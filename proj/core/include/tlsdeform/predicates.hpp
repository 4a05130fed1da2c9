#pragma once

namespace tlsdeform::predicates {

/// Twice the signed area of (a, b, c): positive when counter-clockwise, negative when clockwise,
/// zero when collinear. The sign is exact; near-degenerate inputs fall back to exact
/// expansion arithmetic.
double orient2d(double ax, double ay, double bx, double by, double cx, double cy);

/// Positive when d lies strictly inside the circle through the counter-clockwise triangle
/// (a, b, c), negative outside, zero on it. Sign is exact.
double incircle(double ax, double ay, double bx, double by, double cx, double cy, double dx, double dy);

/// Same predicates evaluated only with exact arithmetic (no floating-point filter).
double orient2d_exact(double ax, double ay, double bx, double by, double cx, double cy);
double incircle_exact(double ax, double ay, double bx, double by, double cx, double cy, double dx, double dy);

}  // namespace tlsdeform::predicates

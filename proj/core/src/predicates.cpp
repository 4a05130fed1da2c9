#include "tlsdeform/predicates.hpp"

#include <cmath>
#include <vector>

namespace tlsdeform::predicates {

namespace {

// Expansions are sequences of non-overlapping doubles in increasing magnitude whose exact sum
// is the represented value; zero components are dropped.
using Expansion = std::vector<double>;

constexpr double kEpsilon = 0x1p-53;
constexpr double kOrientBound = (3.0 + 16.0 * kEpsilon) * kEpsilon;
constexpr double kInCircleBound = (10.0 + 96.0 * kEpsilon) * kEpsilon;

inline void two_sum(double a, double b, double& x, double& y) {
  x = a + b;
  const double bv = x - a;
  const double av = x - bv;
  y = (a - av) + (b - bv);
}

inline void two_product(double a, double b, double& x, double& y) {
  x = a * b;
  y = std::fma(a, b, -x);
}

Expansion from_difference(double a, double b) {
  double x = 0.0;
  double y = 0.0;
  two_sum(a, -b, x, y);
  Expansion e;
  if (y != 0.0) e.push_back(y);
  if (x != 0.0) e.push_back(x);
  return e;
}

Expansion grow(const Expansion& e, double b) {
  Expansion h;
  h.reserve(e.size() + 1);
  double q = b;
  for (double component : e) {
    double sum = 0.0;
    double err = 0.0;
    two_sum(q, component, sum, err);
    if (err != 0.0) h.push_back(err);
    q = sum;
  }
  if (q != 0.0) h.push_back(q);
  return h;
}

Expansion add(const Expansion& e, const Expansion& f) {
  Expansion r = e;
  for (double component : f) r = grow(r, component);
  return r;
}

Expansion negate(Expansion e) {
  for (double& c : e) c = -c;
  return e;
}

Expansion scale(const Expansion& e, double b) {
  Expansion h;
  if (e.empty() || b == 0.0) return h;
  h.reserve(2 * e.size());
  double q = 0.0;
  double lo = 0.0;
  two_product(e[0], b, q, lo);
  if (lo != 0.0) h.push_back(lo);
  for (std::size_t i = 1; i < e.size(); ++i) {
    double prod_hi = 0.0;
    double prod_lo = 0.0;
    two_product(e[i], b, prod_hi, prod_lo);
    double sum = 0.0;
    double err = 0.0;
    two_sum(q, prod_lo, sum, err);
    if (err != 0.0) h.push_back(err);
    two_sum(prod_hi, sum, q, err);
    if (err != 0.0) h.push_back(err);
  }
  if (q != 0.0) h.push_back(q);
  return h;
}

Expansion multiply(const Expansion& e, const Expansion& f) {
  Expansion r;
  for (double component : f) r = add(r, scale(e, component));
  return r;
}

double sign_of(const Expansion& e) { return e.empty() ? 0.0 : e.back(); }

}  // namespace

double orient2d_exact(double ax, double ay, double bx, double by, double cx, double cy) {
  const Expansion acx = from_difference(ax, cx);
  const Expansion acy = from_difference(ay, cy);
  const Expansion bcx = from_difference(bx, cx);
  const Expansion bcy = from_difference(by, cy);
  return sign_of(add(multiply(acx, bcy), negate(multiply(acy, bcx))));
}

double orient2d(double ax, double ay, double bx, double by, double cx, double cy) {
  const double detleft = (ax - cx) * (by - cy);
  const double detright = (ay - cy) * (bx - cx);
  const double det = detleft - detright;
  double detsum = 0.0;
  if (detleft > 0.0) {
    if (detright <= 0.0) return det;
    detsum = detleft + detright;
  } else if (detleft < 0.0) {
    if (detright >= 0.0) return det;
    detsum = -detleft - detright;
  } else {
    return det;
  }
  const double bound = kOrientBound * detsum;
  if (det >= bound || -det >= bound) return det;
  return orient2d_exact(ax, ay, bx, by, cx, cy);
}

double incircle_exact(double ax, double ay, double bx, double by, double cx, double cy, double dx, double dy) {
  const Expansion adx = from_difference(ax, dx);
  const Expansion ady = from_difference(ay, dy);
  const Expansion bdx = from_difference(bx, dx);
  const Expansion bdy = from_difference(by, dy);
  const Expansion cdx = from_difference(cx, dx);
  const Expansion cdy = from_difference(cy, dy);

  const Expansion bc = add(multiply(bdx, cdy), negate(multiply(cdx, bdy)));
  const Expansion ca = add(multiply(cdx, ady), negate(multiply(adx, cdy)));
  const Expansion ab = add(multiply(adx, bdy), negate(multiply(bdx, ady)));
  const Expansion alift = add(multiply(adx, adx), multiply(ady, ady));
  const Expansion blift = add(multiply(bdx, bdx), multiply(bdy, bdy));
  const Expansion clift = add(multiply(cdx, cdx), multiply(cdy, cdy));

  return sign_of(add(add(multiply(alift, bc), multiply(blift, ca)), multiply(clift, ab)));
}

double incircle(double ax, double ay, double bx, double by, double cx, double cy, double dx, double dy) {
  const double adx = ax - dx;
  const double ady = ay - dy;
  const double bdx = bx - dx;
  const double bdy = by - dy;
  const double cdx = cx - dx;
  const double cdy = cy - dy;

  const double bdxcdy = bdx * cdy;
  const double cdxbdy = cdx * bdy;
  const double alift = adx * adx + ady * ady;
  const double cdxady = cdx * ady;
  const double adxcdy = adx * cdy;
  const double blift = bdx * bdx + bdy * bdy;
  const double adxbdy = adx * bdy;
  const double bdxady = bdx * ady;
  const double clift = cdx * cdx + cdy * cdy;

  const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
  const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                           (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                           (std::abs(adxbdy) + std::abs(bdxady)) * clift;
  const double bound = kInCircleBound * permanent;
  if (det > bound || -det > bound) return det;
  return incircle_exact(ax, ay, bx, by, cx, cy, dx, dy);
}

}  // namespace tlsdeform::predicates

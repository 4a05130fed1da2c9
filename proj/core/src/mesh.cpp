#include "tlsdeform/mesh.hpp"

#include "tlsdeform/error.hpp"
#include "tlsdeform/io.hpp"
#include "tlsdeform/predicates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace tlsdeform {

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

double orient(const Point2& a, const Point2& b, const Point2& c) {
  return predicates::orient2d(a.x(), a.y(), b.x(), b.y(), c.x(), c.y());
}

double circumradius2(const Point2& a, const Point2& b, const Point2& c) {
  const double dx = b.x() - a.x();
  const double dy = b.y() - a.y();
  const double ex = c.x() - a.x();
  const double ey = c.y() - a.y();
  const double bl = dx * dx + dy * dy;
  const double cl = ex * ex + ey * ey;
  const double d = 0.5 / (dx * ey - dy * ex);
  const double x = (ey * bl - dy * cl) * d;
  const double y = (dx * cl - ex * bl) * d;
  const double r2 = x * x + y * y;
  return std::isfinite(r2) ? r2 : std::numeric_limits<double>::infinity();
}

Point2 circumcenter(const Point2& a, const Point2& b, const Point2& c) {
  const double dx = b.x() - a.x();
  const double dy = b.y() - a.y();
  const double ex = c.x() - a.x();
  const double ey = c.y() - a.y();
  const double bl = dx * dx + dy * dy;
  const double cl = ex * ex + ey * ey;
  const double d = 0.5 / (dx * ey - dy * ex);
  return {a.x() + (ey * bl - dy * cl) * d, a.y() + (dx * cl - ex * bl) * d};
}

// Sweep-hull incremental Delaunay triangulation (the Delaunator scheme): points are inserted in
// order of distance from the seed triangle's circumcenter, each one attaching to the visible part
// of the convex hull, followed by Lawson edge flips. Triangles are counter-clockwise.
class Triangulator {
 public:
  explicit Triangulator(const std::vector<Point2>& pts) : pts_(pts) { run(); }

  std::vector<std::uint32_t> triangles;

 private:
  void run();
  std::uint32_t add_triangle(std::uint32_t i0, std::uint32_t i1, std::uint32_t i2, std::uint32_t a,
                             std::uint32_t b, std::uint32_t c);
  void link(std::uint32_t a, std::uint32_t b);
  std::uint32_t legalize(std::uint32_t a);
  std::size_t hash_key(const Point2& p) const;

  const std::vector<Point2>& pts_;
  std::vector<std::uint32_t> halfedges_;
  std::vector<std::uint32_t> hull_prev_;
  std::vector<std::uint32_t> hull_next_;
  std::vector<std::uint32_t> hull_tri_;
  std::vector<std::uint32_t> hull_hash_;
  std::vector<std::uint32_t> edge_stack_;
  std::uint32_t hull_start_ = 0;
  Point2 center_ = Point2::Zero();
};

std::size_t Triangulator::hash_key(const Point2& p) const {
  const double dx = p.x() - center_.x();
  const double dy = p.y() - center_.y();
  const double denom = std::abs(dx) + std::abs(dy);
  const double r = denom > 0.0 ? dx / denom : 0.0;
  const double angle = (dy > 0.0 ? 3.0 - r : 1.0 + r) / 4.0;
  const auto n = hull_hash_.size();
  return static_cast<std::size_t>(std::floor(angle * static_cast<double>(n))) % n;
}

void Triangulator::link(std::uint32_t a, std::uint32_t b) {
  halfedges_[a] = b;
  if (b != kNone) halfedges_[b] = a;
}

std::uint32_t Triangulator::add_triangle(std::uint32_t i0, std::uint32_t i1, std::uint32_t i2, std::uint32_t a,
                                         std::uint32_t b, std::uint32_t c) {
  const auto t = static_cast<std::uint32_t>(triangles.size());
  triangles.insert(triangles.end(), {i0, i1, i2});
  halfedges_.insert(halfedges_.end(), {kNone, kNone, kNone});
  link(t, a);
  link(t + 1, b);
  link(t + 2, c);
  return t;
}

std::uint32_t Triangulator::legalize(std::uint32_t a) {
  std::uint32_t ar = 0;
  edge_stack_.clear();
  while (true) {
    const std::uint32_t b = halfedges_[a];
    const std::uint32_t a0 = a - a % 3;
    ar = a0 + (a + 2) % 3;

    if (b == kNone) {
      if (edge_stack_.empty()) break;
      a = edge_stack_.back();
      edge_stack_.pop_back();
      continue;
    }

    const std::uint32_t b0 = b - b % 3;
    const std::uint32_t al = a0 + (a + 1) % 3;
    const std::uint32_t bl = b0 + (b + 2) % 3;

    const std::uint32_t p0 = triangles[ar];
    const std::uint32_t pr = triangles[a];
    const std::uint32_t pl = triangles[al];
    const std::uint32_t p1 = triangles[bl];

    const Point2& q0 = pts_[p0];
    const Point2& qr = pts_[pr];
    const Point2& ql = pts_[pl];
    const Point2& q1 = pts_[p1];
    const bool illegal =
        predicates::incircle(q0.x(), q0.y(), qr.x(), qr.y(), ql.x(), ql.y(), q1.x(), q1.y()) > 0.0;

    if (illegal) {
      triangles[a] = p1;
      triangles[b] = p0;

      const std::uint32_t hbl = halfedges_[bl];
      if (hbl == kNone) {
        // The flipped edge was on the hull: repoint the hull entry that referenced it.
        std::uint32_t e = hull_start_;
        do {
          if (hull_tri_[e] == bl) {
            hull_tri_[e] = a;
            break;
          }
          e = hull_prev_[e];
        } while (e != hull_start_);
      }
      link(a, hbl);
      link(b, halfedges_[ar]);
      link(ar, bl);

      const std::uint32_t br = b0 + (b + 1) % 3;
      edge_stack_.push_back(br);
    } else {
      if (edge_stack_.empty()) break;
      a = edge_stack_.back();
      edge_stack_.pop_back();
    }
  }
  return ar;
}

void Triangulator::run() {
  const auto n = static_cast<std::uint32_t>(pts_.size());
  if (n < 3) throw DegenerateInputError("triangulation needs at least 3 distinct points");

  Point2 lo = pts_[0];
  Point2 hi = pts_[0];
  for (const auto& p : pts_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Point2 mid = 0.5 * (lo + hi);

  auto argmin = [&](auto&& score) {
    std::uint32_t best = kNone;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::uint32_t i = 0; i < n; ++i) {
      const double s = score(i);
      if (s < best_score) {
        best_score = s;
        best = i;
      }
    }
    return best;
  };

  const std::uint32_t i0 = argmin([&](std::uint32_t i) { return (pts_[i] - mid).squaredNorm(); });
  const std::uint32_t i1 = argmin([&](std::uint32_t i) {
    const double d = (pts_[i] - pts_[i0]).squaredNorm();
    return (i == i0 || d == 0.0) ? std::numeric_limits<double>::infinity() : d;
  });
  if (i1 == kNone) throw DegenerateInputError("triangulation of coincident points");
  std::uint32_t i2 = argmin([&](std::uint32_t i) {
    if (i == i0 || i == i1 || orient(pts_[i0], pts_[i1], pts_[i]) == 0.0) {
      return std::numeric_limits<double>::infinity();
    }
    return circumradius2(pts_[i0], pts_[i1], pts_[i]);
  });
  if (i2 == kNone) throw DegenerateInputError("triangulation of collinear points");

  std::uint32_t s1 = i1;
  std::uint32_t s2 = i2;
  if (orient(pts_[i0], pts_[s1], pts_[s2]) < 0.0) std::swap(s1, s2);
  center_ = circumcenter(pts_[i0], pts_[s1], pts_[s2]);

  std::vector<std::pair<double, std::uint32_t>> order(n);
  for (std::uint32_t i = 0; i < n; ++i) order[i] = {(pts_[i] - center_).squaredNorm(), i};
  std::sort(order.begin(), order.end());

  const std::size_t max_triangles = 2 * static_cast<std::size_t>(n) - 5;
  triangles.reserve(max_triangles * 3);
  halfedges_.reserve(max_triangles * 3);
  hull_prev_.assign(n, 0);
  hull_next_.assign(n, 0);
  hull_tri_.assign(n, 0);
  hull_hash_.assign(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))), kNone);

  hull_start_ = i0;
  hull_next_[i0] = hull_prev_[s2] = s1;
  hull_next_[s1] = hull_prev_[i0] = s2;
  hull_next_[s2] = hull_prev_[s1] = i0;
  hull_tri_[i0] = 0;
  hull_tri_[s1] = 1;
  hull_tri_[s2] = 2;
  hull_hash_[hash_key(pts_[i0])] = i0;
  hull_hash_[hash_key(pts_[s1])] = s1;
  hull_hash_[hash_key(pts_[s2])] = s2;
  add_triangle(i0, s1, s2, kNone, kNone, kNone);

  for (const auto& [dist, i] : order) {
    (void)dist;
    if (i == i0 || i == s1 || i == s2) continue;
    const Point2& p = pts_[i];

    std::uint32_t start = 0;
    const std::size_t key = hash_key(p);
    for (std::size_t j = 0; j < hull_hash_.size(); ++j) {
      start = hull_hash_[(key + j) % hull_hash_.size()];
      if (start != kNone && start != hull_next_[start]) break;
    }
    start = hull_prev_[start];

    std::uint32_t e = start;
    std::uint32_t q = 0;
    bool found = true;
    while (q = hull_next_[e], !(orient(pts_[e], pts_[q], p) < 0.0)) {
      e = q;
      if (e == start) {
        found = false;
        break;
      }
    }
    if (!found) continue;  // coincides with an existing vertex

    std::uint32_t t = add_triangle(e, i, hull_next_[e], kNone, kNone, hull_tri_[e]);
    hull_tri_[i] = legalize(t + 2);
    hull_tri_[e] = t;

    std::uint32_t nx = hull_next_[e];
    while (q = hull_next_[nx], orient(pts_[nx], pts_[q], p) < 0.0) {
      t = add_triangle(nx, i, q, hull_tri_[i], kNone, hull_tri_[nx]);
      hull_tri_[i] = legalize(t + 2);
      hull_next_[nx] = nx;
      nx = q;
    }

    if (e == start) {
      while (q = hull_prev_[e], orient(pts_[q], pts_[e], p) < 0.0) {
        t = add_triangle(q, i, e, kNone, hull_tri_[e], hull_tri_[q]);
        legalize(t + 2);
        hull_tri_[q] = t;
        hull_next_[e] = e;
        e = q;
      }
    }

    hull_start_ = hull_prev_[i] = e;
    hull_next_[e] = hull_prev_[nx] = i;
    hull_next_[i] = nx;
    hull_hash_[hash_key(p)] = i;
    hull_hash_[hash_key(pts_[e])] = e;
  }
}

double area2(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

double box_distance2(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, const Point3& q) {
  return (q.cwiseMax(lo).cwiseMin(hi) - q).squaredNorm();
}

}  // namespace

Point3 closest_point_on_triangle(const Point3& p, const Point3& a, const Point3& b, const Point3& c) {
  const Vector3 ab = b - a;
  const Vector3 ac = c - a;
  const Vector3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vector3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vector3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

TinMesh::TinMesh(std::span<const Point3> points, const Plane& plane)
    : plane_(plane), axis_u_(plane.axis_u()), axis_v_(plane.axis_v()) {
  if (points.size() < 3) throw DegenerateInputError("mesh needs at least 3 points");

  std::vector<Point2> uv(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) uv[i] = project(points[i]);

  // Collapse identical projections, keeping the first occurrence.
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (uv[a].x() != uv[b].x()) return uv[a].x() < uv[b].x();
    if (uv[a].y() != uv[b].y()) return uv[a].y() < uv[b].y();
    return a < b;
  });
  std::vector<std::size_t> kept;
  kept.reserve(points.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && uv[order[k]] == uv[order[k - 1]]) continue;
    kept.push_back(order[k]);
  }
  std::sort(kept.begin(), kept.end());

  std::vector<Point2> unique_uv;
  unique_uv.reserve(kept.size());
  for (std::size_t i : kept) unique_uv.push_back(uv[i]);

  const Triangulator tri(unique_uv);

  // Keep only referenced vertices.
  std::vector<std::uint32_t> remap(kept.size(), kNone);
  for (std::uint32_t v : tri.triangles) remap[v] = 0;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    if (remap[k] == kNone) continue;
    remap[k] = static_cast<std::uint32_t>(vertices_.size());
    vertices_.push_back(points[kept[k]]);
    projected_.push_back(unique_uv[k]);
    heights_.push_back(height_of(points[kept[k]]));
    source_.push_back(kept[k]);
  }
  triangles_.reserve(tri.triangles.size() / 3);
  for (std::size_t t = 0; t < tri.triangles.size(); t += 3) {
    triangles_.push_back({remap[tri.triangles[t]], remap[tri.triangles[t + 1]], remap[tri.triangles[t + 2]]});
  }

  build_locator();
  build_bvh();
}

Point2 TinMesh::project(const Point3& p) const {
  const Vector3 d = p - plane_.origin();
  return {d.dot(axis_u_), d.dot(axis_v_)};
}

Point3 TinMesh::lift(const Point2& uv, double h) const {
  return plane_.origin() + uv.x() * axis_u_ + uv.y() * axis_v_ + h * plane_.normal();
}

void TinMesh::build_locator() {
  Point2 lo = projected_.front();
  Point2 hi = projected_.front();
  for (const auto& p : projected_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Point2 ext = hi - lo;
  const double area = std::max(ext.x() * ext.y(), 1e-300);
  grid_cell_ = std::sqrt(area / static_cast<double>(triangles_.size())) * 1.5;
  if (!(grid_cell_ > 0.0)) grid_cell_ = std::max(ext.maxCoeff(), 1.0);
  grid_origin_ = lo;
  grid_nx_ = static_cast<std::int64_t>(ext.x() / grid_cell_) + 1;
  grid_ny_ = static_cast<std::int64_t>(ext.y() / grid_cell_) + 1;

  auto cell_range = [&](const Triangle& t, std::int64_t& x0, std::int64_t& x1, std::int64_t& y0, std::int64_t& y1) {
    Point2 tlo = projected_[t[0]];
    Point2 thi = tlo;
    for (int k = 1; k < 3; ++k) {
      tlo = tlo.cwiseMin(projected_[t[k]]);
      thi = thi.cwiseMax(projected_[t[k]]);
    }
    x0 = std::clamp<std::int64_t>(static_cast<std::int64_t>((tlo.x() - lo.x()) / grid_cell_), 0, grid_nx_ - 1);
    x1 = std::clamp<std::int64_t>(static_cast<std::int64_t>((thi.x() - lo.x()) / grid_cell_), 0, grid_nx_ - 1);
    y0 = std::clamp<std::int64_t>(static_cast<std::int64_t>((tlo.y() - lo.y()) / grid_cell_), 0, grid_ny_ - 1);
    y1 = std::clamp<std::int64_t>(static_cast<std::int64_t>((thi.y() - lo.y()) / grid_cell_), 0, grid_ny_ - 1);
  };

  const auto cells = static_cast<std::size_t>(grid_nx_ * grid_ny_);
  grid_offsets_.assign(cells + 1, 0);
  for (const auto& t : triangles_) {
    std::int64_t x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    cell_range(t, x0, x1, y0, y1);
    for (std::int64_t y = y0; y <= y1; ++y) {
      for (std::int64_t x = x0; x <= x1; ++x) ++grid_offsets_[static_cast<std::size_t>(y * grid_nx_ + x) + 1];
    }
  }
  std::partial_sum(grid_offsets_.begin(), grid_offsets_.end(), grid_offsets_.begin());
  grid_items_.assign(grid_offsets_.back(), 0);
  std::vector<std::uint32_t> fill(grid_offsets_.begin(), grid_offsets_.end() - 1);
  for (std::size_t ti = 0; ti < triangles_.size(); ++ti) {
    std::int64_t x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    cell_range(triangles_[ti], x0, x1, y0, y1);
    for (std::int64_t y = y0; y <= y1; ++y) {
      for (std::int64_t x = x0; x <= x1; ++x) {
        grid_items_[fill[static_cast<std::size_t>(y * grid_nx_ + x)]++] = static_cast<std::uint32_t>(ti);
      }
    }
  }
}

std::optional<std::size_t> TinMesh::locate(const Point2& uv) const {
  constexpr double kTol = 1e-12;
  const double fx = (uv.x() - grid_origin_.x()) / grid_cell_;
  const double fy = (uv.y() - grid_origin_.y()) / grid_cell_;
  // Allow queries that sit exactly on the far footprint boundary.
  if (!(fx >= -kTol && fy >= -kTol)) return std::nullopt;
  const auto cx = std::min(static_cast<std::int64_t>(std::max(fx, 0.0)), grid_nx_ - 1);
  const auto cy = std::min(static_cast<std::int64_t>(std::max(fy, 0.0)), grid_ny_ - 1);
  if (fx > static_cast<double>(grid_nx_) + kTol || fy > static_cast<double>(grid_ny_) + kTol) return std::nullopt;

  const auto cell = static_cast<std::size_t>(cy * grid_nx_ + cx);
  for (std::uint32_t k = grid_offsets_[cell]; k < grid_offsets_[cell + 1]; ++k) {
    const Triangle& t = triangles_[grid_items_[k]];
    const Point2& a = projected_[t[0]];
    const Point2& b = projected_[t[1]];
    const Point2& c = projected_[t[2]];
    const double d = area2(a, b, c);
    if (area2(uv, b, c) / d >= -kTol && area2(a, uv, c) / d >= -kTol && area2(a, b, uv) / d >= -kTol) {
      return grid_items_[k];
    }
  }
  return std::nullopt;
}

double TinMesh::interpolate(std::size_t triangle, const Point2& uv) const {
  const Triangle& t = triangles_.at(triangle);
  const Point2& a = projected_[t[0]];
  const Point2& b = projected_[t[1]];
  const Point2& c = projected_[t[2]];
  const double d = area2(a, b, c);
  const double la = area2(uv, b, c) / d;
  const double lb = area2(a, uv, c) / d;
  const double lc = area2(a, b, uv) / d;
  return la * heights_[t[0]] + lb * heights_[t[1]] + lc * heights_[t[2]];
}

std::optional<double> TinMesh::height_at(const Point2& uv) const {
  const auto t = locate(uv);
  if (!t) return std::nullopt;
  return interpolate(*t, uv);
}

Vector3 TinMesh::triangle_normal(std::size_t triangle) const {
  const Triangle& t = triangles_.at(triangle);
  Vector3 n = (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]).normalized();
  if (n.dot(plane_.normal()) < 0.0) n = -n;
  return n;
}

std::int32_t TinMesh::build_bvh_node(std::uint32_t begin, std::uint32_t end) {
  BvhNode node;
  node.begin = begin;
  node.end = end;
  node.lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  Eigen::Vector3d clo = node.lo;
  Eigen::Vector3d chi = node.hi;
  for (std::uint32_t i = begin; i < end; ++i) {
    const Triangle& t = triangles_[bvh_order_[i]];
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (std::uint32_t v : t) {
      node.lo = node.lo.cwiseMin(vertices_[v]);
      node.hi = node.hi.cwiseMax(vertices_[v]);
      centroid += vertices_[v];
    }
    centroid /= 3.0;
    clo = clo.cwiseMin(centroid);
    chi = chi.cwiseMax(centroid);
  }
  const auto id = static_cast<std::int32_t>(bvh_nodes_.size());
  bvh_nodes_.push_back(node);
  if (end - begin <= 4) return id;

  Eigen::Index dim = 0;
  (chi - clo).maxCoeff(&dim);
  const std::uint32_t mid = begin + (end - begin) / 2;
  auto centroid_of = [&](std::uint32_t ti) {
    const Triangle& t = triangles_[ti];
    return vertices_[t[0]][dim] + vertices_[t[1]][dim] + vertices_[t[2]][dim];
  };
  std::nth_element(bvh_order_.begin() + begin, bvh_order_.begin() + mid, bvh_order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = centroid_of(a);
                     const double cb = centroid_of(b);
                     return ca < cb || (ca == cb && a < b);
                   });
  const std::int32_t left = build_bvh_node(begin, mid);
  const std::int32_t right = build_bvh_node(mid, end);
  bvh_nodes_[static_cast<std::size_t>(id)].left = left;
  bvh_nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void TinMesh::build_bvh() {
  bvh_order_.resize(triangles_.size());
  std::iota(bvh_order_.begin(), bvh_order_.end(), 0U);
  bvh_nodes_.reserve(triangles_.size() / 2 + 4);
  build_bvh_node(0, static_cast<std::uint32_t>(triangles_.size()));
}

MeshDistance TinMesh::distance(const Point3& p) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best_tri = 0;
  Point3 best_point = Point3::Zero();

  std::vector<std::int32_t> stack;
  stack.reserve(64);
  stack.push_back(0);
  while (!stack.empty()) {
    const BvhNode& node = bvh_nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (box_distance2(node.lo, node.hi, p) > best_d2) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t ti = bvh_order_[i];
        const Triangle& t = triangles_[ti];
        const Point3 c = closest_point_on_triangle(p, vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]);
        const double d2 = (p - c).squaredNorm();
        if (d2 < best_d2 || (d2 == best_d2 && ti < best_tri)) {
          best_d2 = d2;
          best_tri = ti;
          best_point = c;
        }
      }
      continue;
    }
    const BvhNode& l = bvh_nodes_[static_cast<std::size_t>(node.left)];
    const BvhNode& r = bvh_nodes_[static_cast<std::size_t>(node.right)];
    // Push the farther child first so the nearer one is searched first.
    if (box_distance2(l.lo, l.hi, p) <= box_distance2(r.lo, r.hi, p)) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }

  MeshDistance out;
  out.triangle = best_tri;
  out.closest = best_point;
  const double d = std::sqrt(best_d2);
  out.signed_distance = (p - best_point).dot(triangle_normal(best_tri)) < 0.0 ? -d : d;
  out.in_footprint = locate(project(p)).has_value();
  return out;
}

TinMesh delaunay_tin(const PointCloud& cloud, const Plane& plane) { return TinMesh(cloud.span(), plane); }

MeshDistance point_to_mesh_distance(const Point3& p, const TinMesh& mesh) { return mesh.distance(p); }

std::optional<double> height_at(const TinMesh& mesh, double u, double v) { return mesh.height_at({u, v}); }

void write_obj(const TinMesh& mesh, const std::filesystem::path& path) {
  std::ostringstream out;
  for (const auto& v : mesh.vertices()) {
    out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << '\n';
  }
  for (const auto& t : mesh.triangles()) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  write_text_atomic(path, out.str());
}

}  // namespace tlsdeform

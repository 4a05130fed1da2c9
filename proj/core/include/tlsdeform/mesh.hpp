#pragma once

#include "tlsdeform/cloud.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace tlsdeform {

using Point2 = Eigen::Vector2d;

/// Result of a point-to-mesh query.
struct MeshDistance {
  /// Euclidean distance to the closest point on any triangle, negative on the side opposite the
  /// triangle normal (normals are oriented along the projection-plane normal).
  double signed_distance = 0.0;
  Point3 closest = Point3::Zero();
  std::size_t triangle = 0;
  /// Whether the projection of the query onto the plane falls inside some triangle.
  bool in_footprint = false;
};

/// 2.5D Delaunay triangulation of a cloud projected on a plane, lifted back to the original
/// 3D points. Immutable after construction.
class TinMesh {
 public:
  using Triangle = std::array<std::uint32_t, 3>;

  /// Triangulates the projections of `points` onto `plane`. Points with identical projections
  /// are collapsed keeping the first. Throws DegenerateInputError when every projection is
  /// collinear.
  TinMesh(std::span<const Point3> points, const Plane& plane);

  const std::vector<Point3>& vertices() const noexcept { return vertices_; }
  const std::vector<Point2>& projected() const noexcept { return projected_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  /// For each vertex, the index of the input point it came from.
  const std::vector<std::size_t>& source_indices() const noexcept { return source_; }
  const Plane& plane() const noexcept { return plane_; }

  /// Plane coordinates (u, v) of a point.
  Point2 project(const Point3& p) const;
  /// Signed out-of-plane coordinate of a point.
  double height_of(const Point3& p) const { return plane_.signed_distance(p); }
  /// 3D point with plane coordinates (u, v) and out-of-plane height h.
  Point3 lift(const Point2& uv, double h) const;

  /// Lowest-index triangle whose projection contains (u, v), or nullopt outside the footprint.
  std::optional<std::size_t> locate(const Point2& uv) const;
  /// Barycentric interpolation of vertex heights inside a given triangle (may extrapolate).
  double interpolate(std::size_t triangle, const Point2& uv) const;
  /// Height at (u, v), or nullopt outside the footprint.
  std::optional<double> height_at(const Point2& uv) const;

  MeshDistance distance(const Point3& p) const;

  /// Unit normal of a lifted triangle, oriented so that normal·plane.normal() >= 0.
  Vector3 triangle_normal(std::size_t triangle) const;

 private:
  void build_locator();
  void build_bvh();

  struct BvhNode {
    Eigen::Vector3d lo;
    Eigen::Vector3d hi;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };
  std::int32_t build_bvh_node(std::uint32_t begin, std::uint32_t end);

  Plane plane_;
  Vector3 axis_u_;
  Vector3 axis_v_;
  std::vector<Point3> vertices_;
  std::vector<Point2> projected_;
  std::vector<double> heights_;
  std::vector<std::size_t> source_;
  std::vector<Triangle> triangles_;

  // Uniform bucket grid over the footprint (CSR layout).
  Point2 grid_origin_ = Point2::Zero();
  double grid_cell_ = 1.0;
  std::int64_t grid_nx_ = 1;
  std::int64_t grid_ny_ = 1;
  std::vector<std::uint32_t> grid_offsets_;
  std::vector<std::uint32_t> grid_items_;

  std::vector<std::uint32_t> bvh_order_;
  std::vector<BvhNode> bvh_nodes_;
};

TinMesh delaunay_tin(const PointCloud& cloud, const Plane& plane);

MeshDistance point_to_mesh_distance(const Point3& p, const TinMesh& mesh);

std::optional<double> height_at(const TinMesh& mesh, double u, double v);

/// Closest point to `p` on the 3D triangle (a, b, c).
Point3 closest_point_on_triangle(const Point3& p, const Point3& a, const Point3& b, const Point3& c);

/// ASCII OBJ dump (v/f lines), for inspection.
void write_obj(const TinMesh& mesh, const std::filesystem::path& path);

}  // namespace tlsdeform

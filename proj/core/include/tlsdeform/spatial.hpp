#pragma once

#include "tlsdeform/cloud.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace tlsdeform {

/// splitmix64 mixing of (seed, stream); used to give every consumer an independent RNG stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Immutable k-d tree over a copy of a cloud's points. All queries return point indices into
/// the indexed cloud; set-valued queries return them in ascending order.
class SpatialIndex {
 public:
  explicit SpatialIndex(const PointCloud& cloud);

  std::size_t size() const noexcept { return points_.size(); }
  const Point3& point(std::size_t i) const { return points_[i]; }

  struct Neighbour {
    std::size_t index;
    double distance;
  };

  /// Closest point; ties resolve to the lowest index.
  Neighbour nearest(const Point3& query) const;

  /// Indices with ||p - center|| <= radius.
  std::vector<std::size_t> radius_search(const Point3& center, double radius) const;
  void radius_search(const Point3& center, double radius, std::vector<std::size_t>& out) const;

  /// Indices whose radial distance from the axis is <= radius and whose axial offset from
  /// `axis_point` along the unit `direction` is within [-half_height, half_height].
  std::vector<std::size_t> cylinder_search(const Point3& axis_point, const Vector3& direction, double radius,
                                           double half_height) const;
  void cylinder_search(const Point3& axis_point, const Vector3& direction, double radius, double half_height,
                       std::vector<std::size_t>& out) const;

 private:
  struct Node {
    Eigen::Vector3d lo;
    Eigen::Vector3d hi;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void nearest_recursive(std::int32_t node, const Point3& q, double& best_d2, std::size_t& best) const;

  std::vector<Point3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

SpatialIndex build_index(const PointCloud& cloud);

struct HalfSplit {
  PointCloud reference;
  PointCloud query;
  std::vector<std::size_t> reference_indices;
  std::vector<std::size_t> query_indices;
};

/// Partition into two disjoint, spatially interleaved halves whose sizes differ by at most one.
/// Points are ordered along a Morton curve and each consecutive pair is split between the
/// halves, with a seeded coin deciding which member goes where.
HalfSplit split_half(const PointCloud& cloud, std::uint64_t seed);

/// Voxels keyed by floor((p - origin) / size), origin at the cloud's bounding-box minimum.
struct VoxelPartition {
  double voxel_size = 0.0;
  Point3 origin = Point3::Zero();
  struct Voxel {
    std::array<std::int64_t, 3> key;
    std::vector<std::size_t> members;
  };
  /// Sorted by key; members ascending.
  std::vector<Voxel> voxels;
};

VoxelPartition voxel_partition(const PointCloud& cloud, double voxel_size);

/// One randomly chosen original point per non-empty voxel, returned in input order.
PointCloud random_in_voxel(const PointCloud& cloud, double voxel_size, std::uint64_t seed);

/// Greedy subset (in input order) where no two selected points are closer than `min_distance`.
std::vector<std::size_t> subsample_min_distance(const PointCloud& cloud, double min_distance);

}  // namespace tlsdeform

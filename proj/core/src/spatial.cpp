#include "tlsdeform/spatial.hpp"

#include "tlsdeform/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace tlsdeform {

namespace {

constexpr std::uint32_t kLeafSize = 16;

double box_distance2(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, const Point3& q) {
  double d2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double d = q[k] < lo[k] ? lo[k] - q[k] : (q[k] > hi[k] ? q[k] - hi[k] : 0.0);
    d2 += d * d;
  }
  return d2;
}

std::uint64_t spread_bits(std::uint64_t v) {
  v &= 0x1fffff;
  v = (v | v << 32) & 0x1f00000000ffffULL;
  v = (v | v << 16) & 0x1f0000ff0000ffULL;
  v = (v | v << 8) & 0x100f00f00f00f00fULL;
  v = (v | v << 4) & 0x10c30c30c30c30c3ULL;
  v = (v | v << 2) & 0x1249249249249249ULL;
  return v;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SpatialIndex::SpatialIndex(const PointCloud& cloud) : points_(cloud.points()) {
  if (points_.empty()) throw EmptyInputError("spatial index over an empty cloud");
  if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) throw InvalidArgumentError("cloud too large");
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0U);
  nodes_.reserve(2 * points_.size() / kLeafSize + 4);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = node.hi = points_[order_[begin]];
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    node.lo = node.lo.cwiseMin(points_[order_[i]]);
    node.hi = node.hi.cwiseMax(points_[order_[i]]);
  }
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  Eigen::Index dim = 0;
  (node.hi - node.lo).maxCoeff(&dim);
  if (node.hi[dim] == node.lo[dim]) return id;  // all coincident
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points_[a][dim];
                     const double pb = points_[b][dim];
                     return pa < pb || (pa == pb && a < b);
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void SpatialIndex::nearest_recursive(std::int32_t id, const Point3& q, double& best_d2, std::size_t& best) const {
  const Node& node = nodes_[static_cast<std::size_t>(id)];
  if (box_distance2(node.lo, node.hi, q) > best_d2) return;
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      const double d2 = (points_[idx] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
        best_d2 = d2;
        best = idx;
      }
    }
    return;
  }
  const Node& l = nodes_[static_cast<std::size_t>(node.left)];
  const Node& r = nodes_[static_cast<std::size_t>(node.right)];
  const double dl = box_distance2(l.lo, l.hi, q);
  const double dr = box_distance2(r.lo, r.hi, q);
  if (dl <= dr) {
    nearest_recursive(node.left, q, best_d2, best);
    nearest_recursive(node.right, q, best_d2, best);
  } else {
    nearest_recursive(node.right, q, best_d2, best);
    nearest_recursive(node.left, q, best_d2, best);
  }
}

SpatialIndex::Neighbour SpatialIndex::nearest(const Point3& query) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best = std::numeric_limits<std::size_t>::max();
  nearest_recursive(0, query, best_d2, best);
  return {best, std::sqrt(best_d2)};
}

std::vector<std::size_t> SpatialIndex::radius_search(const Point3& center, double radius) const {
  std::vector<std::size_t> out;
  radius_search(center, radius, out);
  return out;
}

void SpatialIndex::radius_search(const Point3& center, double radius, std::vector<std::size_t>& out) const {
  if (!(radius >= 0.0)) throw InvalidArgumentError("negative search radius");
  out.clear();
  const double r2 = radius * radius;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (box_distance2(node.lo, node.hi, center) > r2) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        if ((points_[idx] - center).squaredNorm() <= r2) out.push_back(idx);
      }
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  std::sort(out.begin(), out.end());
}

std::vector<std::size_t> SpatialIndex::cylinder_search(const Point3& axis_point, const Vector3& direction,
                                                       double radius, double half_height) const {
  std::vector<std::size_t> out;
  cylinder_search(axis_point, direction, radius, half_height, out);
  return out;
}

void SpatialIndex::cylinder_search(const Point3& axis_point, const Vector3& direction, double radius,
                                   double half_height, std::vector<std::size_t>& out) const {
  if (std::abs(direction.norm() - 1.0) > 1e-9) throw InvalidArgumentError("cylinder axis is not a unit vector");
  if (!(radius > 0.0) || !(half_height > 0.0)) throw InvalidArgumentError("cylinder radius and height must be positive");
  out.clear();
  const double r2 = radius * radius;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    const Vector3 c = 0.5 * (node.lo + node.hi) - axis_point;
    const double rho = 0.5 * (node.hi - node.lo).norm();
    const double t = c.dot(direction);
    if (std::abs(t) > half_height + rho) continue;
    if ((c - t * direction).norm() > radius + rho) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        const Vector3 v = points_[idx] - axis_point;
        const double a = v.dot(direction);
        if (std::abs(a) <= half_height && (v - a * direction).squaredNorm() <= r2) out.push_back(idx);
      }
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  std::sort(out.begin(), out.end());
}

SpatialIndex build_index(const PointCloud& cloud) { return SpatialIndex(cloud); }

HalfSplit split_half(const PointCloud& cloud, std::uint64_t seed) {
  if (cloud.size() < 2) throw DegenerateInputError("split needs at least 2 points");
  const BoundingBox box = bounding_box(cloud);
  const double extent = box.extents().maxCoeff();
  const double scale = extent > 0.0 ? static_cast<double>((1U << 21) - 1) / extent : 0.0;

  std::vector<std::pair<std::uint64_t, std::size_t>> keyed(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vector3 q = (cloud[i] - box.min) * scale;
    std::uint64_t code = 0;
    for (int k = 0; k < 3; ++k) {
      const auto cell = static_cast<std::uint64_t>(std::clamp(std::floor(q[k]), 0.0, static_cast<double>((1U << 21) - 1)));
      code |= spread_bits(cell) << k;
    }
    keyed[i] = {code, i};
  }
  std::sort(keyed.begin(), keyed.end());

  std::mt19937_64 rng(derive_seed(seed, 0x5917));
  HalfSplit out;
  for (std::size_t k = 0; k < keyed.size(); k += 2) {
    const bool swap = (rng() & 1U) != 0;
    const std::size_t a = keyed[k].second;
    if (k + 1 == keyed.size()) {
      (swap ? out.query_indices : out.reference_indices).push_back(a);
      break;
    }
    const std::size_t b = keyed[k + 1].second;
    out.reference_indices.push_back(swap ? b : a);
    out.query_indices.push_back(swap ? a : b);
  }
  std::sort(out.reference_indices.begin(), out.reference_indices.end());
  std::sort(out.query_indices.begin(), out.query_indices.end());
  out.reference = cloud.subset(out.reference_indices);
  out.query = cloud.subset(out.query_indices);
  return out;
}

VoxelPartition voxel_partition(const PointCloud& cloud, double voxel_size) {
  if (!(voxel_size > 0.0)) throw InvalidArgumentError("voxel size must be positive");
  if (cloud.empty()) throw EmptyInputError("voxel partition of an empty cloud");
  VoxelPartition part;
  part.voxel_size = voxel_size;
  part.origin = bounding_box(cloud).min;

  using Key = std::array<std::int64_t, 3>;
  std::vector<std::pair<Key, std::size_t>> keyed(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vector3 rel = (cloud[i] - part.origin) / voxel_size;
    keyed[i] = {Key{static_cast<std::int64_t>(std::floor(rel.x())), static_cast<std::int64_t>(std::floor(rel.y())),
                    static_cast<std::int64_t>(std::floor(rel.z()))},
                i};
  }
  std::sort(keyed.begin(), keyed.end());
  for (std::size_t i = 0; i < keyed.size();) {
    VoxelPartition::Voxel voxel{keyed[i].first, {}};
    std::size_t j = i;
    for (; j < keyed.size() && keyed[j].first == keyed[i].first; ++j) voxel.members.push_back(keyed[j].second);
    part.voxels.push_back(std::move(voxel));
    i = j;
  }
  return part;
}

PointCloud random_in_voxel(const PointCloud& cloud, double voxel_size, std::uint64_t seed) {
  const VoxelPartition part = voxel_partition(cloud, voxel_size);
  std::mt19937_64 rng(derive_seed(seed, 0x70c5));
  std::vector<std::size_t> chosen;
  chosen.reserve(part.voxels.size());
  for (const auto& voxel : part.voxels) chosen.push_back(voxel.members[rng() % voxel.members.size()]);
  std::sort(chosen.begin(), chosen.end());
  return cloud.subset(chosen);
}

std::vector<std::size_t> subsample_min_distance(const PointCloud& cloud, double min_distance) {
  if (!(min_distance > 0.0)) throw InvalidArgumentError("minimum distance must be positive");
  if (cloud.empty()) return {};
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const noexcept {
      return static_cast<std::size_t>(derive_seed(static_cast<std::uint64_t>(k[0]),
                                                  static_cast<std::uint64_t>(k[1]) * 73856093ULL ^
                                                      static_cast<std::uint64_t>(k[2]) * 19349663ULL));
    }
  };
  const Point3 origin = bounding_box(cloud).min;
  std::unordered_map<std::array<std::int64_t, 3>, std::vector<std::size_t>, KeyHash> grid;
  const double r2 = min_distance * min_distance;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vector3 rel = (cloud[i] - origin) / min_distance;
    const std::array<std::int64_t, 3> key{static_cast<std::int64_t>(std::floor(rel.x())),
                                          static_cast<std::int64_t>(std::floor(rel.y())),
                                          static_cast<std::int64_t>(std::floor(rel.z()))};
    bool blocked = false;
    for (std::int64_t dx = -1; dx <= 1 && !blocked; ++dx) {
      for (std::int64_t dy = -1; dy <= 1 && !blocked; ++dy) {
        for (std::int64_t dz = -1; dz <= 1 && !blocked; ++dz) {
          const auto it = grid.find({key[0] + dx, key[1] + dy, key[2] + dz});
          if (it == grid.end()) continue;
          for (std::size_t j : it->second) {
            if ((cloud[j] - cloud[i]).squaredNorm() < r2) {
              blocked = true;
              break;
            }
          }
        }
      }
    }
    if (blocked) continue;
    grid[key].push_back(i);
    kept.push_back(i);
  }
  return kept;
}

}  // namespace tlsdeform

#pragma once

#include "tlsdeform/cloud.hpp"
#include "tlsdeform/spatial.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace tlsdeform {

/// Per-point unit normals of a cloud. Invalid entries hold a zero vector.
struct NormalField {
  std::vector<Vector3> normals;
  std::vector<std::uint8_t> valid;
  double radius = 0.0;
  Point3 sensor = Point3::Zero();

  std::size_t size() const noexcept { return normals.size(); }
  bool is_valid(std::size_t i) const { return valid[i] != 0; }
  std::size_t valid_count() const;
};

/// Local plane fit within `radius` of every point, oriented so that n·(sensor - p) >= 0.
/// Neighbourhoods with fewer than 3 points or collinear points give an invalid normal.
NormalField estimate_normals(const PointCloud& cloud, double radius, const Point3& sensor);
NormalField estimate_normals(const PointCloud& cloud, const SpatialIndex& index, double radius,
                             const Point3& sensor);

/// Correspondences whose reference point lies inside `box` get weight `weight`.
struct EmphasisRegion {
  BoundingBox box;
  double weight = 1.0;
};

struct IcpParams {
  int max_iterations = 50;
  double translation_tolerance = 1e-6;  // metres
  double rotation_tolerance = 1e-7;     // radians
  double rejection_factor = 3.0;        // multiple of the median correspondence distance
  std::optional<EmphasisRegion> emphasis;
  RigidTransform initial;

  /// Throws InvalidArgumentError when a field is out of range.
  void validate() const;
};

/// Objective of one ICP iteration on its own correspondence set, before and after the update.
struct IcpIterate {
  double objective_before = 0.0;
  double objective_after = 0.0;
  std::size_t inliers = 0;
};

struct RegistrationResult {
  /// Maps query coordinates into the reference frame.
  RigidTransform transform;
  double rmse = 0.0;
  int iterations = 0;
  double inlier_fraction = 1.0;
  bool converged = true;
  /// Number of constrained degrees of freedom in the last linear solve (6 = fully constrained).
  int rank = 6;
  std::vector<IcpIterate> history;
};

using PointPair = std::pair<Point3, Point3>;  // (reference, query)

/// Closed-form least-squares rigid fit of query points onto reference points.
/// Throws DegenerateInputError with fewer than 3 pairs or a collinear configuration.
RegistrationResult register_targets(std::span<const PointPair> pairs);

/// Point-to-plane ICP of `query` onto `reference`; `normals` belong to `reference`.
RegistrationResult icp_point_to_plane(const PointCloud& query, const PointCloud& reference,
                                      const NormalField& normals, const IcpParams& params = {});
RegistrationResult icp_point_to_plane(const PointCloud& query, const PointCloud& reference,
                                      const SpatialIndex& reference_index, const NormalField& normals,
                                      const IcpParams& params = {});

/// Cloud-to-mesh distance statistics between a reference and a registered query.
struct QcReport {
  double mean = 0.0;
  double max_abs = 0.0;
  double rms = 0.0;
  std::size_t count = 0;
  std::vector<double> distances;  // per query point; NaN where out of footprint
};

QcReport registration_qc(const PointCloud& reference, const PointCloud& registered_query);

}  // namespace tlsdeform

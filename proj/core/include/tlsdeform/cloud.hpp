#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tlsdeform {

/// Cartesian point in metres.
using Point3 = Eigen::Vector3d;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

enum class Frame { Scanner, Site, WallLocal };

std::string_view to_string(Frame frame);

/// Ordered points in a tagged coordinate frame. Every coordinate is finite.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Point3> points, Frame frame = Frame::Site, std::string label = {});

  const std::vector<Point3>& points() const noexcept { return points_; }
  std::span<const Point3> span() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const Point3& operator[](std::size_t i) const { return points_[i]; }
  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  Frame frame() const noexcept { return frame_; }
  const std::string& label() const noexcept { return label_; }

  /// Cloud holding the points at `indices`, in the given order, same frame and label.
  PointCloud subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<Point3> points_;
  Frame frame_ = Frame::Site;
  std::string label_;
};

struct BoundingBox {
  Point3 min;
  Point3 max;

  Vector3 extents() const { return max - min; }
  bool contains(const Point3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

/// Plane {p : normal·p = offset} with a unit normal.
class Plane {
 public:
  Plane(const Vector3& normal, double offset);

  const Vector3& normal() const noexcept { return normal_; }
  double offset() const noexcept { return offset_; }

  double signed_distance(const Point3& p) const { return normal_.dot(p) - offset_; }
  /// Same plane with the normal reversed.
  Plane flipped() const { return Plane(-normal_, -offset_); }
  /// Same plane with the normal oriented so that normal·reference >= 0.
  Plane oriented_toward(const Vector3& reference) const;

  /// Point of the plane closest to the origin.
  Point3 origin() const { return normal_ * offset_; }
  /// In-plane orthonormal axes (u, v) with u × v = normal; deterministic for a given normal.
  Vector3 axis_u() const;
  Vector3 axis_v() const { return normal_.cross(axis_u()); }

 private:
  Vector3 normal_;
  double offset_;
};

/// Rotation plus translation, applied as R·p + t. Rotation is orthonormal with det +1.
class RigidTransform {
 public:
  RigidTransform() : rotation_(Matrix3::Identity()), translation_(Vector3::Zero()) {}
  RigidTransform(const Matrix3& rotation, const Vector3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_axis_angle(const Vector3& axis, double angle_rad, const Vector3& translation);

  const Matrix3& rotation() const noexcept { return rotation_; }
  const Vector3& translation() const noexcept { return translation_; }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  RigidTransform inverse() const;
  /// (a * b).apply(p) == a.apply(b.apply(p))
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

  /// Rotation angle of the transform in radians.
  double angle() const;

 private:
  Matrix3 rotation_;
  Vector3 translation_;
};

/// Local retaining-wall frame: x along the wall, y normal to the face (negative toward the
/// excavation pit), z vertical up.
class WallFrame {
 public:
  WallFrame() : WallFrame(Point3::Zero(), Vector3::UnitX(), Vector3::UnitY(), Vector3::UnitZ()) {}
  WallFrame(const Point3& origin, const Vector3& x_axis, const Vector3& y_axis, const Vector3& z_axis);

  /// Frame with z up and y the horizontal normal of the cloud's best-fit plane, oriented so that
  /// `pit_direction` has a non-positive y component. Origin at the bounding-box minimum of the
  /// cloud expressed in the new axes.
  static WallFrame fit(const PointCloud& cloud, const Vector3& pit_direction);

  const Point3& origin() const noexcept { return origin_; }
  /// Columns are the x, y, z axes in the parent frame.
  const Matrix3& axes() const noexcept { return axes_; }

  /// Transform from the parent frame into wall-local coordinates.
  RigidTransform to_local() const;

 private:
  Point3 origin_;
  Matrix3 axes_;
};

BoundingBox bounding_box(const PointCloud& cloud);
BoundingBox bounding_box(std::span<const Point3> points);

/// Least-squares plane: centroid plus smallest-eigenvalue direction of the covariance.
/// The normal sign makes its largest-magnitude component positive.
Plane fit_plane(std::span<const Point3> points);
Plane fit_plane(const PointCloud& cloud);

/// RMS of orthogonal distances from `points` to `plane`.
double plane_rms(std::span<const Point3> points, const Plane& plane);

/// Rotation taking the cloud's best-fit plane normal onto +z (the smallest such rotation).
/// Identity when fewer than three points or the points are collinear.
RigidTransform levelling_transform(const PointCloud& cloud);

/// Mean point spacing S = sqrt(Lx·Ly) / (sqrt(N) - 1), with Lx, Ly taken from the axis-aligned
/// bounding box of the levelled cloud.
double data_spacing(const PointCloud& cloud);

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform);

PointCloud to_wall_frame(const PointCloud& cloud, const WallFrame& frame);
/// Inverse of to_wall_frame; the result is tagged with `parent`.
PointCloud from_wall_frame(const PointCloud& cloud, const WallFrame& frame, Frame parent = Frame::Site);

}  // namespace tlsdeform

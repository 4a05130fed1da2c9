#include "tlsdeform/cloud.hpp"

#include "tlsdeform/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <cmath>

namespace tlsdeform {

namespace {

constexpr double kOrthonormalTol = 1e-9;

bool is_orthonormal(const Matrix3& r) {
  return ((r.transpose() * r - Matrix3::Identity()).cwiseAbs().maxCoeff() <= kOrthonormalTol) &&
         std::abs(r.determinant() - 1.0) <= kOrthonormalTol;
}

}  // namespace

std::string_view to_string(Frame frame) {
  switch (frame) {
    case Frame::Scanner: return "scanner";
    case Frame::Site: return "site";
    case Frame::WallLocal: return "wall-local";
  }
  return "unknown";
}

PointCloud::PointCloud(std::vector<Point3> points, Frame frame, std::string label)
    : points_(std::move(points)), frame_(frame), label_(std::move(label)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].allFinite()) {
      throw InvariantError("point " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  std::vector<Point3> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(points_.at(i));
  PointCloud result;
  result.points_ = std::move(out);
  result.frame_ = frame_;
  result.label_ = label_;
  return result;
}

Plane::Plane(const Vector3& normal, double offset) : normal_(normal), offset_(offset) {
  if (!normal.allFinite() || !std::isfinite(offset)) throw InvariantError("plane with non-finite parameters");
  const double len = normal.norm();
  if (len == 0.0) throw InvariantError("plane normal has zero length");
  if (std::abs(len - 1.0) > 1e-12) {
    normal_ /= len;
    offset_ /= len;
  }
}

Plane Plane::oriented_toward(const Vector3& reference) const {
  return normal_.dot(reference) < 0.0 ? flipped() : *this;
}

Vector3 Plane::axis_u() const {
  const Vector3 ref = std::abs(normal_.x()) < 0.9 ? Vector3::UnitX() : Vector3::UnitY();
  return (ref - ref.dot(normal_) * normal_).normalized();
}

RigidTransform::RigidTransform(const Matrix3& rotation, const Vector3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw InvariantError("rigid transform with non-finite entries");
  }
  if (!is_orthonormal(rotation)) throw InvariantError("rotation is not orthonormal with determinant +1");
}

RigidTransform RigidTransform::from_axis_angle(const Vector3& axis, double angle_rad, const Vector3& translation) {
  if (axis.norm() == 0.0) throw InvalidArgumentError("rotation axis has zero length");
  return {Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix(), translation};
}

RigidTransform RigidTransform::inverse() const {
  const Matrix3 rt = rotation_.transpose();
  return {rt, -(rt * translation_)};
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation_ * b.rotation_, a.rotation_ * b.translation_ + a.translation_};
}

double RigidTransform::angle() const {
  const Eigen::Quaterniond q(rotation_);
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

WallFrame::WallFrame(const Point3& origin, const Vector3& x_axis, const Vector3& y_axis, const Vector3& z_axis)
    : origin_(origin) {
  axes_.col(0) = x_axis;
  axes_.col(1) = y_axis;
  axes_.col(2) = z_axis;
  if (!origin.allFinite() || !axes_.allFinite()) throw InvariantError("wall frame with non-finite entries");
  if (!is_orthonormal(axes_)) throw InvariantError("wall frame axes are not a right-handed orthonormal triad");
  if ((z_axis - Vector3::UnitZ()).cwiseAbs().maxCoeff() > kOrthonormalTol) {
    throw InvariantError("wall frame z axis must be vertical up");
  }
}

WallFrame WallFrame::fit(const PointCloud& cloud, const Vector3& pit_direction) {
  const Plane plane = fit_plane(cloud);
  Vector3 y(plane.normal().x(), plane.normal().y(), 0.0);
  if (y.norm() < 1e-6) throw DegenerateInputError("best-fit plane is horizontal; no wall normal");
  y.normalize();
  if (y.dot(pit_direction) > 0.0) y = -y;
  const Vector3 z = Vector3::UnitZ();
  const Vector3 x = y.cross(z);

  Matrix3 axes;
  axes << x, y, z;
  Point3 lo = Point3::Constant(std::numeric_limits<double>::infinity());
  for (const auto& p : cloud) lo = lo.cwiseMin(axes.transpose() * p);
  return {axes * lo, x, y, z};
}

RigidTransform WallFrame::to_local() const {
  const Matrix3 rt = axes_.transpose();
  return {rt, -(rt * origin_)};
}

BoundingBox bounding_box(std::span<const Point3> points) {
  if (points.empty()) throw EmptyInputError("bounding box of an empty cloud");
  BoundingBox box{points.front(), points.front()};
  for (const auto& p : points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

BoundingBox bounding_box(const PointCloud& cloud) { return bounding_box(cloud.span()); }

Plane fit_plane(std::span<const Point3> points) {
  if (points.size() < 3) throw DegenerateInputError("plane fit needs at least 3 points");
  Point3 centroid = Point3::Zero();
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(points.size());
  Matrix3 cov = Matrix3::Zero();
  for (const auto& p : points) {
    const Vector3 d = p - centroid;
    cov.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Matrix3> solver(cov);
  const Vector3 evals = solver.eigenvalues();
  if (!(evals(2) > 0.0) || evals(1) <= 1e-12 * evals(2)) {
    throw DegenerateInputError("plane fit on collinear or coincident points");
  }
  Vector3 n = solver.eigenvectors().col(0);
  Eigen::Index largest = 0;
  n.cwiseAbs().maxCoeff(&largest);
  if (n(largest) < 0.0) n = -n;
  return {n, n.dot(centroid)};
}

Plane fit_plane(const PointCloud& cloud) { return fit_plane(cloud.span()); }

double plane_rms(std::span<const Point3> points, const Plane& plane) {
  if (points.empty()) throw EmptyInputError("plane residual of an empty set");
  double sum = 0.0;
  for (const auto& p : points) {
    const double d = plane.signed_distance(p);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(points.size()));
}

RigidTransform levelling_transform(const PointCloud& cloud) {
  Vector3 n;
  try {
    n = fit_plane(cloud).normal();
  } catch (const DegenerateInputError&) {
    return RigidTransform::identity();
  }
  if (n.z() < 0.0) n = -n;
  const Matrix3 r = Eigen::Quaterniond::FromTwoVectors(n, Vector3::UnitZ()).toRotationMatrix();
  return {r, Vector3::Zero()};
}

double data_spacing(const PointCloud& cloud) {
  if (cloud.size() < 2) throw DegenerateInputError("data spacing needs at least 2 points");
  const PointCloud levelled = apply_transform(cloud, levelling_transform(cloud));
  const Vector3 ext = bounding_box(levelled).extents();
  const double area = ext.x() * ext.y();
  if (!(area > 0.0)) throw DegenerateInputError("data spacing on a zero-area bounding box");
  return std::sqrt(area) / (std::sqrt(static_cast<double>(cloud.size())) - 1.0);
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& transform) {
  std::vector<Point3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.push_back(transform.apply(p));
  return PointCloud(std::move(out), cloud.frame(), cloud.label());
}

PointCloud to_wall_frame(const PointCloud& cloud, const WallFrame& frame) {
  if (cloud.empty()) throw EmptyInputError("wall-frame conversion of an empty cloud");
  const PointCloud moved = apply_transform(cloud, frame.to_local());
  return PointCloud(moved.points(), Frame::WallLocal, cloud.label());
}

PointCloud from_wall_frame(const PointCloud& cloud, const WallFrame& frame, Frame parent) {
  const PointCloud moved = apply_transform(cloud, frame.to_local().inverse());
  return PointCloud(moved.points(), parent, cloud.label());
}

}  // namespace tlsdeform

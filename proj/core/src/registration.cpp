#include "tlsdeform/registration.hpp"

#include "tlsdeform/deform.hpp"
#include "tlsdeform/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tlsdeform {

namespace {

using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;

bool lex_less(const Point3& a, const Point3& b) {
  if (a.x() != b.x()) return a.x() < b.x();
  if (a.y() != b.y()) return a.y() < b.y();
  return a.z() < b.z();
}

// Ratio of the second to the first singular value of the centred set; ~0 when collinear.
double spread_ratio(const std::vector<Point3>& pts, const Point3& centroid) {
  Matrix3 cov = Matrix3::Zero();
  for (const auto& p : pts) cov += (p - centroid) * (p - centroid).transpose();
  const Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
  const Vector3 ev = eig.eigenvalues();
  return ev(2) > 0.0 ? ev(1) / ev(2) : 0.0;
}

struct Correspondence {
  std::size_t query;
  std::size_t reference;
  double residual;
  double weight;
  double distance;  // Euclidean, used for rejection
};

double median_abs(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

std::size_t NormalField::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

NormalField estimate_normals(const PointCloud& cloud, double radius, const Point3& sensor) {
  if (cloud.empty()) throw EmptyInputError("normal estimation on an empty cloud");
  const SpatialIndex index(cloud);
  return estimate_normals(cloud, index, radius, sensor);
}

NormalField estimate_normals(const PointCloud& cloud, const SpatialIndex& index, double radius,
                             const Point3& sensor) {
  if (!(radius > 0.0)) throw InvalidArgumentError("normal estimation radius must be positive");
  NormalField field;
  field.radius = radius;
  field.sensor = sensor;
  field.normals.assign(cloud.size(), Vector3::Zero());
  field.valid.assign(cloud.size(), 0);

  std::vector<std::size_t> nb;
  Eigen::SelfAdjointEigenSolver<Matrix3> eig;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    index.radius_search(cloud[i], radius, nb);
    if (nb.size() < 3) continue;
    Point3 c = Point3::Zero();
    for (std::size_t j : nb) c += index.point(j);
    c /= static_cast<double>(nb.size());
    Matrix3 cov = Matrix3::Zero();
    for (std::size_t j : nb) {
      const Vector3 d = index.point(j) - c;
      cov.noalias() += d * d.transpose();
    }
    eig.compute(cov);
    const Vector3 ev = eig.eigenvalues();
    if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) continue;
    Vector3 n = eig.eigenvectors().col(0).normalized();
    if (n.dot(sensor - cloud[i]) < 0.0) n = -n;
    field.normals[i] = n;
    field.valid[i] = 1;
  }
  return field;
}

void IcpParams::validate() const {
  if (max_iterations < 1) throw InvalidArgumentError("ICP max iterations must be at least 1");
  if (!(rejection_factor > 1.0)) throw InvalidArgumentError("ICP rejection factor must exceed 1");
  if (!(translation_tolerance > 0.0) || !(rotation_tolerance > 0.0)) {
    throw InvalidArgumentError("ICP convergence tolerances must be positive");
  }
  if (emphasis && !(emphasis->weight >= 1.0)) throw InvalidArgumentError("emphasis weight must be >= 1");
}

RegistrationResult register_targets(std::span<const PointPair> pairs) {
  if (pairs.size() < 3) {
    throw DegenerateInputError("target registration needs at least 3 point pairs, got " +
                               std::to_string(pairs.size()));
  }
  // Sorting makes the arithmetic independent of the input labelling.
  std::vector<PointPair> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end(), [](const PointPair& a, const PointPair& b) {
    if (a.first != b.first) return lex_less(a.first, b.first);
    return lex_less(a.second, b.second);
  });

  std::vector<Point3> ref;
  std::vector<Point3> qry;
  for (const auto& [r, q] : sorted) {
    ref.push_back(r);
    qry.push_back(q);
  }
  const double n = static_cast<double>(sorted.size());
  const Point3 rc = std::accumulate(ref.begin(), ref.end(), Point3(Point3::Zero())) / n;
  const Point3 qc = std::accumulate(qry.begin(), qry.end(), Point3(Point3::Zero())) / n;
  if (spread_ratio(ref, rc) <= 1e-12 || spread_ratio(qry, qc) <= 1e-12) {
    throw DegenerateInputError("target registration with a collinear configuration");
  }

  Matrix3 h = Matrix3::Zero();
  for (std::size_t i = 0; i < ref.size(); ++i) h += (qry[i] - qc) * (ref[i] - rc).transpose();
  const Eigen::JacobiSVD<Matrix3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 d = Matrix3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  Matrix3 rot = svd.matrixV() * d * svd.matrixU().transpose();
  // Re-orthonormalize against accumulated rounding.
  const Eigen::JacobiSVD<Matrix3> polish(rot, Eigen::ComputeFullU | Eigen::ComputeFullV);
  rot = polish.matrixU() * polish.matrixV().transpose();

  RegistrationResult result;
  result.transform = RigidTransform(rot, rc - rot * qc);
  double sse = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) sse += (ref[i] - result.transform.apply(qry[i])).squaredNorm();
  result.rmse = std::sqrt(sse / n);
  result.iterations = 1;
  return result;
}

RegistrationResult icp_point_to_plane(const PointCloud& query, const PointCloud& reference,
                                      const NormalField& normals, const IcpParams& params) {
  if (reference.empty()) throw EmptyInputError("ICP reference cloud is empty");
  const SpatialIndex index(reference);
  return icp_point_to_plane(query, reference, index, normals, params);
}

RegistrationResult icp_point_to_plane(const PointCloud& query, const PointCloud& reference,
                                      const SpatialIndex& reference_index, const NormalField& normals,
                                      const IcpParams& params) {
  params.validate();
  if (query.empty()) throw EmptyInputError("ICP query cloud is empty");
  if (reference.empty()) throw EmptyInputError("ICP reference cloud is empty");
  if (normals.size() != reference.size()) {
    throw InvalidArgumentError("normal field size does not match the reference cloud");
  }

  auto weight_of = [&](std::size_t ref_index) {
    if (!params.emphasis) return 1.0;
    return params.emphasis->box.contains(reference[ref_index]) ? params.emphasis->weight : 1.0;
  };

  std::vector<Point3> moved(query.size());
  std::vector<Correspondence> corr;
  std::vector<double> abs_res;

  // Nearest-neighbour matching plus median trimming under transform `t`.
  auto match = [&](const RigidTransform& t) {
    for (std::size_t i = 0; i < query.size(); ++i) moved[i] = t.apply(query[i]);
    corr.clear();
    abs_res.clear();
    for (std::size_t i = 0; i < query.size(); ++i) {
      const auto nb = reference_index.nearest(moved[i]);
      if (!normals.is_valid(nb.index)) continue;
      const double r = (moved[i] - reference[nb.index]).dot(normals.normals[nb.index]);
      corr.push_back({i, nb.index, r, weight_of(nb.index), nb.distance});
      abs_res.push_back(nb.distance);
    }
    if (corr.empty()) throw RegistrationError("ICP found no correspondences with valid normals");
    double limit = params.rejection_factor * median_abs(abs_res);
    if (limit == 0.0) {
      // Noise-free input where most residuals are exactly zero: scale from the nonzero ones.
      std::erase(abs_res, 0.0);
      if (!abs_res.empty()) limit = params.rejection_factor * median_abs(abs_res);
    }
    std::erase_if(corr, [&](const Correspondence& c) { return c.distance > limit; });
    if (corr.empty()) throw RegistrationError("ICP rejected every correspondence");
  };

  auto objective = [&](const Matrix3& rot, const Vector3& trans, const Point3& center) {
    double e = 0.0;
    for (const auto& c : corr) {
      const Point3 p = rot * (moved[c.query] - center) + center + trans;
      const double r = (p - reference[c.reference]).dot(normals.normals[c.reference]);
      e += c.weight * r * r;
    }
    return e;
  };

  RegistrationResult result;
  result.converged = false;
  RigidTransform current = params.initial;

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    match(current);

    Point3 center = Point3::Zero();
    double wsum = 0.0;
    for (const auto& c : corr) {
      center += c.weight * moved[c.query];
      wsum += c.weight;
    }
    center /= wsum;

    Matrix6 a = Matrix6::Zero();
    Vector6 b = Vector6::Zero();
    double before = 0.0;
    for (const auto& c : corr) {
      const Vector3& n = normals.normals[c.reference];
      Vector6 j;
      j.head<3>() = (moved[c.query] - center).cross(n);
      j.tail<3>() = n;
      a.noalias() += c.weight * j * j.transpose();
      b.noalias() -= c.weight * c.residual * j;
      before += c.weight * c.residual * c.residual;
    }

    const Eigen::SelfAdjointEigenSolver<Matrix6> eig(a);
    const Vector6 ev = eig.eigenvalues();
    const double cutoff = 1e-9 * ev.maxCoeff();
    Vector6 x = Vector6::Zero();
    int rank = 0;
    for (int k = 0; k < 6; ++k) {
      if (ev(k) > cutoff && ev(k) > 0.0) {
        const Vector6 vk = eig.eigenvectors().col(k);
        x += (vk.dot(b) / ev(k)) * vk;
        ++rank;
      }
    }
    result.rank = rank;

    Vector3 omega = x.head<3>();
    Vector3 trans = x.tail<3>();
    auto rotation_of = [](const Vector3& w) -> Matrix3 {
      const double angle = w.norm();
      if (angle == 0.0) return Matrix3::Identity();
      return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
    };
    Matrix3 rot = rotation_of(omega);
    double after = objective(rot, trans, center);
    for (int halving = 0; after > before && halving < 30; ++halving) {
      omega *= 0.5;
      trans *= 0.5;
      rot = rotation_of(omega);
      after = objective(rot, trans, center);
    }
    if (after > before) {
      omega.setZero();
      trans.setZero();
      rot.setIdentity();
      after = before;
    }

    current = RigidTransform(rot, center - rot * center + trans) * current;
    result.history.push_back({before, after, corr.size()});
    result.iterations = iter + 1;

    if (trans.norm() < params.translation_tolerance && omega.norm() < params.rotation_tolerance) {
      result.converged = true;
      break;
    }
  }

  match(current);
  double sse = 0.0;
  for (const auto& c : corr) sse += c.residual * c.residual;
  result.transform = current;
  result.rmse = std::sqrt(sse / static_cast<double>(corr.size()));
  result.inlier_fraction = static_cast<double>(corr.size()) / static_cast<double>(query.size());
  return result;
}

QcReport registration_qc(const PointCloud& reference, const PointCloud& registered_query) {
  const PointwiseDeformation d = c2m(registered_query, reference);
  QcReport report;
  report.distances.reserve(d.size());
  double sum = 0.0;
  double sum2 = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d.valid(i)) {
      report.distances.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double v = d.values[i];
    report.distances.push_back(v);
    sum += v;
    sum2 += v * v;
    report.max_abs = std::max(report.max_abs, std::abs(v));
    ++report.count;
  }
  if (report.count == 0) throw DegenerateInputError("registration QC: no query point inside the reference mesh");
  report.mean = sum / static_cast<double>(report.count);
  report.rms = std::sqrt(sum2 / static_cast<double>(report.count));
  return report;
}

}  // namespace tlsdeform

#include "tlsdeform/deform.hpp"

#include "tlsdeform/error.hpp"
#include "tlsdeform/io.hpp"
#include "tlsdeform/mesh.hpp"
#include "tlsdeform/spatial.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace tlsdeform {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_nonempty(const PointCloud& cloud, const char* what) {
  if (cloud.empty()) throw EmptyInputError(std::string(what) + " cloud is empty");
}

void require_same_frame(const PointCloud& a, const PointCloud& b) {
  if (a.frame() != b.frame()) {
    throw InvalidArgumentError("clouds are in different frames (" + std::string(to_string(a.frame())) + " vs " +
                               std::string(to_string(b.frame())) + ")");
  }
}

Plane reference_plane(const PointCloud& reference) { return fit_plane(reference).oriented_toward(Vector3::UnitY()); }

std::int64_t cell_key(double v, double cell) { return static_cast<std::int64_t>(std::floor(v / cell)); }

template <typename T>
DeformationSummary summarize_values(const T& d) {
  DeformationSummary s;
  s.total = d.size();
  double sum = 0.0;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d.valid(i)) continue;
    ++s.valid;
    sum += d.values[i];
    s.min = std::min(s.min, d.values[i]);
    s.max = std::max(s.max, d.values[i]);
  }
  if (s.valid == 0) {
    s.mean = s.min = s.max = kNaN;
  } else {
    s.mean = sum / static_cast<double>(s.valid);
  }
  return s;
}

std::optional<Vector3> local_normal(const SpatialIndex& index, const Point3& center, double radius,
                                    std::vector<std::size_t>& scratch) {
  index.radius_search(center, radius, scratch);
  if (scratch.size() < 3) return std::nullopt;
  Point3 c = Point3::Zero();
  for (std::size_t j : scratch) c += index.point(j);
  c /= static_cast<double>(scratch.size());
  Matrix3 cov = Matrix3::Zero();
  for (std::size_t j : scratch) {
    const Vector3 d = index.point(j) - c;
    cov.noalias() += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
  const Vector3 ev = eig.eigenvalues();
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) return std::nullopt;
  Vector3 n = eig.eigenvectors().col(0).normalized();
  if (n.y() < 0.0) n = -n;
  return n;
}

double mean_axial(const SpatialIndex& index, const std::vector<std::size_t>& members, const Point3& origin,
                  const Vector3& axis) {
  double sum = 0.0;
  for (std::size_t j : members) sum += (index.point(j) - origin).dot(axis);
  return sum / static_cast<double>(members.size());
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::C2M: return "c2m";
    case Method::M2M: return "m2m";
    case Method::M3C2: return "m3c2";
    case Method::ICP: return "icp";
  }
  return "unknown";
}

std::optional<Method> method_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  for (Method m : {Method::C2M, Method::M2M, Method::M3C2, Method::ICP}) {
    if (lower == to_string(m)) return m;
  }
  return std::nullopt;
}

std::string_view to_string(InvalidReason reason) {
  switch (reason) {
    case InvalidReason::None: return "valid";
    case InvalidReason::EmptyCylinder: return "empty-cylinder";
    case InvalidReason::OutOfFootprint: return "out-of-footprint";
    case InvalidReason::NoCorrespondence: return "no-correspondence";
    case InvalidReason::InvalidNormal: return "invalid-normal";
    case InvalidReason::OutOfRange: return "out-of-range";
    case InvalidReason::EmptyCell: return "empty-cell";
  }
  return "unknown";
}

std::size_t PointwiseDeformation::valid_count() const {
  return static_cast<std::size_t>(std::count(reasons.begin(), reasons.end(), InvalidReason::None));
}

void PointwiseDeformation::add(const Point3& position, double value) {
  positions.push_back(position);
  values.push_back(value);
  reasons.push_back(InvalidReason::None);
}

void PointwiseDeformation::add_invalid(const Point3& position, InvalidReason reason) {
  positions.push_back(position);
  values.push_back(kNaN);
  reasons.push_back(reason);
}

std::optional<std::size_t> GridLayout::locate(double x, double z) const {
  if (!std::isfinite(x) || !std::isfinite(z)) return std::nullopt;
  const std::int64_t ix = cell_key(x, cell) - std::llround(x0 / cell);
  const std::int64_t iz = cell_key(z, cell) - std::llround(z0 / cell);
  if (ix < 0 || iz < 0 || ix >= static_cast<std::int64_t>(nx) || iz >= static_cast<std::int64_t>(nz)) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(iz) * nx + static_cast<std::size_t>(ix);
}

GridLayout GridLayout::covering(std::span<const Point3> points, double cell) {
  if (!(cell > 0.0)) throw InvalidArgumentError("cell size must be positive");
  if (points.empty()) throw EmptyInputError("grid over an empty point set");
  const BoundingBox box = bounding_box(points);
  const std::int64_t kx0 = cell_key(box.min.x(), cell);
  const std::int64_t kx1 = cell_key(box.max.x(), cell);
  const std::int64_t kz0 = cell_key(box.min.z(), cell);
  const std::int64_t kz1 = cell_key(box.max.z(), cell);
  GridLayout g;
  g.cell = cell;
  g.x0 = static_cast<double>(kx0) * cell;
  g.z0 = static_cast<double>(kz0) * cell;
  g.nx = static_cast<std::size_t>(kx1 - kx0 + 1);
  g.nz = static_cast<std::size_t>(kz1 - kz0 + 1);
  return g;
}

std::size_t DeformationMap::valid_count() const {
  return static_cast<std::size_t>(std::count(reasons.begin(), reasons.end(), InvalidReason::None));
}

std::optional<double> DeformationMap::value_at(double x, double z) const {
  const auto i = grid.locate(x, z);
  if (!i || !valid(*i)) return std::nullopt;
  return values[*i];
}

DeformationSummary summarize(const PointwiseDeformation& d) { return summarize_values(d); }
DeformationSummary summarize(const DeformationMap& map) { return summarize_values(map); }

void M3C2Params::validate() const {
  if (!(normal_diameter > 0.0)) throw InvalidArgumentError("M3C2 normal diameter must be positive");
  if (!(projection_diameter > 0.0)) throw InvalidArgumentError("M3C2 projection diameter must be positive");
  if (!(cylinder_height > 0.0)) throw InvalidArgumentError("M3C2 cylinder height must be positive");
  if (!(core_resolution >= 0.0)) throw InvalidArgumentError("M3C2 core resolution must be non-negative");
}

PointwiseDeformation c2m(const PointCloud& query, const PointCloud& reference, C2MDistance mode) {
  require_nonempty(query, "query");
  require_nonempty(reference, "reference");
  require_same_frame(query, reference);
  const Plane plane = reference_plane(reference);
  const double ny = plane.normal().y();
  if (mode == C2MDistance::PlaneNormal && !(ny > 1e-6)) {
    throw DegenerateInputError("reference plane is parallel to the wall y axis");
  }
  const TinMesh mesh(reference.span(), plane);

  PointwiseDeformation out;
  out.method = Method::C2M;
  out.positions.reserve(query.size());
  out.values.reserve(query.size());
  out.reasons.reserve(query.size());
  for (const auto& p : query) {
    if (mode == C2MDistance::Euclidean) {
      const MeshDistance d = mesh.distance(p);
      if (d.in_footprint) {
        out.add(p, d.signed_distance);
      } else {
        out.add_invalid(p, InvalidReason::OutOfFootprint);
      }
      continue;
    }
    const auto h = mesh.height_at(mesh.project(p));
    if (h) {
      out.add(p, (mesh.height_of(p) - *h) / ny);
    } else {
      out.add_invalid(p, InvalidReason::OutOfFootprint);
    }
  }
  return out;
}

DeformationMap m2m(const PointCloud& reference, const PointCloud& query, double cell_size,
                   const std::optional<GridLayout>& layout) {
  require_nonempty(query, "query");
  require_nonempty(reference, "reference");
  require_same_frame(query, reference);
  if (!(cell_size > 0.0)) throw InvalidArgumentError("M2M cell size must be positive");

  const Plane plane = reference_plane(reference);
  const double ny = plane.normal().y();
  if (!(ny > 1e-6)) throw DegenerateInputError("reference plane is parallel to the wall y axis");
  const TinMesh ref_mesh(reference.span(), plane);
  const TinMesh qry_mesh(query.span(), plane);

  DeformationMap map;
  map.method = Method::M2M;
  map.grid = layout ? *layout : GridLayout::covering(reference.span(), cell_size);
  map.values.assign(map.grid.size(), kNaN);
  map.counts.assign(map.grid.size(), 0);
  map.reasons.assign(map.grid.size(), InvalidReason::OutOfFootprint);

  const Vector3& n = plane.normal();
  for (std::size_t iz = 0; iz < map.grid.nz; ++iz) {
    for (std::size_t ix = 0; ix < map.grid.nx; ++ix) {
      const double x = map.grid.center_x(ix);
      const double z = map.grid.center_z(iz);
      const double y = (plane.offset() - n.x() * x - n.z() * z) / ny;
      const Point2 uv = ref_mesh.project({x, y, z});
      const auto hr = ref_mesh.height_at(uv);
      if (!hr) continue;
      const auto hq = qry_mesh.height_at(uv);
      if (!hq) continue;
      const std::size_t i = iz * map.grid.nx + ix;
      map.values[i] = (*hq - *hr) / ny;
      map.counts[i] = 1;
      map.reasons[i] = InvalidReason::None;
    }
  }
  return map;
}

M3C2Result m3c2(const PointCloud& reference, const PointCloud& query, const M3C2Params& params) {
  params.validate();
  require_nonempty(query, "query");
  require_nonempty(reference, "reference");
  require_same_frame(query, reference);

  const SpatialIndex ref_index(reference);
  const SpatialIndex qry_index(query);

  std::vector<std::size_t> cores;
  if (params.core_resolution > 0.0) {
    cores = subsample_min_distance(reference, params.core_resolution);
  } else {
    cores.resize(reference.size());
    for (std::size_t i = 0; i < cores.size(); ++i) cores[i] = i;
  }

  M3C2Result out;
  out.method = Method::M3C2;
  out.core_indices = cores;
  const double normal_radius = 0.5 * params.normal_diameter;
  const double radius = 0.5 * params.projection_diameter;
  const double half_height = 0.5 * params.cylinder_height;

  std::vector<std::size_t> scratch;
  std::vector<std::size_t> in_ref;
  std::vector<std::size_t> in_qry;
  for (std::size_t core : cores) {
    const Point3& c = reference[core];
    const auto n = local_normal(ref_index, c, normal_radius, scratch);
    if (!n || (params.output == M3C2Output::YEquivalent && !(n->y() > 1e-6))) {
      out.add_invalid(c, InvalidReason::InvalidNormal);
      out.normal_distances.push_back(kNaN);
      out.normals.push_back(n.value_or(Vector3::Zero()));
      continue;
    }
    ref_index.cylinder_search(c, *n, radius, half_height, in_ref);
    qry_index.cylinder_search(c, *n, radius, half_height, in_qry);
    out.normals.push_back(*n);
    if (in_ref.empty() || in_qry.empty()) {
      out.add_invalid(c, InvalidReason::EmptyCylinder);
      out.normal_distances.push_back(kNaN);
      continue;
    }
    const double d = mean_axial(qry_index, in_qry, c, *n) - mean_axial(ref_index, in_ref, c, *n);
    out.normal_distances.push_back(d);
    out.add(c, params.output == M3C2Output::YEquivalent ? d / n->y() : d);
  }
  return out;
}

PointwiseDeformation icp_deform(const PointCloud& reference, const PointCloud& query, const IcpDeformParams& params) {
  require_nonempty(query, "query");
  require_nonempty(reference, "reference");
  require_same_frame(query, reference);

  const SpatialIndex ref_index(reference);
  const double radius = params.normal_radius > 0.0 ? params.normal_radius : params.normal_radius_factor * data_spacing(reference);
  Point3 sensor = Point3::Zero();
  for (const auto& p : reference) sensor += p;
  sensor = sensor / static_cast<double>(reference.size()) - 1000.0 * Vector3::UnitY();
  const NormalField normals = estimate_normals(reference, ref_index, radius, sensor);
  const RegistrationResult reg = icp_point_to_plane(query, reference, ref_index, normals, params.icp);

  PointwiseDeformation out;
  out.method = Method::ICP;
  out.positions.reserve(query.size());
  out.values.reserve(query.size());
  out.reasons.reserve(query.size());
  for (const auto& q : query) {
    const auto nb = ref_index.nearest(reg.transform.apply(q));
    out.add(q, q.y() - reference[nb.index].y());
  }
  return out;
}

PointwiseDeformation filter_range(const PointwiseDeformation& d, double lo, double hi) {
  if (!(lo <= hi)) throw InvalidArgumentError("filter range lower bound exceeds upper bound");
  PointwiseDeformation out = d;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.valid(i) && (out.values[i] < lo || out.values[i] > hi)) out.reasons[i] = InvalidReason::OutOfRange;
  }
  return out;
}

DeformationMap filter_range(const DeformationMap& map, double lo, double hi) {
  if (!(lo <= hi)) throw InvalidArgumentError("filter range lower bound exceeds upper bound");
  DeformationMap out = map;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.valid(i) && (out.values[i] < lo || out.values[i] > hi)) out.reasons[i] = InvalidReason::OutOfRange;
  }
  return out;
}

DeformationMap rasterize(const PointwiseDeformation& d, double cell_size, const std::optional<GridLayout>& layout) {
  if (!(cell_size > 0.0)) throw InvalidArgumentError("raster cell size must be positive");
  if (d.positions.empty()) throw EmptyInputError("rasterizing an empty deformation set");
  DeformationMap map;
  map.method = d.method;
  map.grid = layout ? *layout : GridLayout::covering(d.positions, cell_size);
  std::vector<double> sums(map.grid.size(), 0.0);
  map.counts.assign(map.grid.size(), 0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d.valid(i)) continue;
    const auto cell = map.grid.locate(d.positions[i].x(), d.positions[i].z());
    if (!cell) continue;
    sums[*cell] += d.values[i];
    ++map.counts[*cell];
  }
  map.values.assign(map.grid.size(), kNaN);
  map.reasons.assign(map.grid.size(), InvalidReason::EmptyCell);
  for (std::size_t i = 0; i < map.grid.size(); ++i) {
    if (map.counts[i] == 0) continue;
    map.values[i] = sums[i] / static_cast<double>(map.counts[i]);
    map.reasons[i] = InvalidReason::None;
  }
  return map;
}

std::string map_to_csv(const DeformationMap& map) {
  std::ostringstream out;
  out << "x_m,z_m,deformation_mm,count,valid\n";
  for (std::size_t iz = 0; iz < map.grid.nz; ++iz) {
    for (std::size_t ix = 0; ix < map.grid.nx; ++ix) {
      const std::size_t i = iz * map.grid.nx + ix;
      const double v = map.values[i];
      out << format_fixed(map.grid.center_x(ix), 4) << ',' << format_fixed(map.grid.center_z(iz), 4) << ','
          << (std::isfinite(v) ? format_fixed(v * 1000.0, 3) : std::string("nan")) << ',' << map.counts[i] << ','
          << (map.valid(i) ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

void write_map_csv(const DeformationMap& map, const std::filesystem::path& path) {
  write_text_atomic(path, map_to_csv(map));
}

DeformationMap read_map_csv(const std::filesystem::path& path, Method method, double default_cell) {
  const NumericCsv table = read_numeric_csv(path, "x_m,z_m,deformation_mm,count,valid");
  struct Row {
    double x, z, value;
    std::uint32_t count;
    bool valid;
  };
  std::vector<Row> rows;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& f = table.rows[k];
    if (!std::isfinite(f[0]) || !std::isfinite(f[1])) {
      throw ParseError(path.string(), table.lines[k], "non-finite cell centre");
    }
    if (!(f[3] >= 0.0)) throw ParseError(path.string(), table.lines[k], "negative cell count");
    rows.push_back({f[0], f[1], f[2] / 1000.0, static_cast<std::uint32_t>(f[3]), f[4] != 0.0});
  }
  if (rows.empty()) throw ParseError(path.string(), 0, "map has no cells");

  std::vector<double> xs;
  std::vector<double> zs;
  for (const auto& r : rows) {
    xs.push_back(r.x);
    zs.push_back(r.z);
  }
  auto unique_sorted = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  unique_sorted(xs);
  unique_sorted(zs);
  double cell = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < xs.size(); ++i) cell = std::min(cell, xs[i] - xs[i - 1]);
  for (std::size_t i = 1; i < zs.size(); ++i) cell = std::min(cell, zs[i] - zs[i - 1]);
  if (!std::isfinite(cell)) cell = default_cell;

  DeformationMap map;
  map.method = method;
  map.grid.cell = cell;
  map.grid.x0 = xs.front() - 0.5 * cell;
  map.grid.z0 = zs.front() - 0.5 * cell;
  map.grid.nx = static_cast<std::size_t>(std::llround((xs.back() - xs.front()) / cell)) + 1;
  map.grid.nz = static_cast<std::size_t>(std::llround((zs.back() - zs.front()) / cell)) + 1;
  map.values.assign(map.grid.size(), kNaN);
  map.counts.assign(map.grid.size(), 0);
  map.reasons.assign(map.grid.size(), InvalidReason::EmptyCell);
  for (const auto& r : rows) {
    const auto ix = static_cast<std::size_t>(std::llround((r.x - xs.front()) / cell));
    const auto iz = static_cast<std::size_t>(std::llround((r.z - zs.front()) / cell));
    const std::size_t i = iz * map.grid.nx + ix;
    map.values[i] = r.value;
    map.counts[i] = r.count;
    map.reasons[i] = r.valid ? InvalidReason::None : InvalidReason::EmptyCell;
  }
  return map;
}

}  // namespace tlsdeform

#pragma once

#include "tlsdeform/cloud.hpp"
#include "tlsdeform/registration.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tlsdeform {

enum class Method { C2M, M2M, M3C2, ICP };

std::string_view to_string(Method method);
/// Accepts "c2m", "m2m", "m3c2", "icp" (case-insensitive).
std::optional<Method> method_from_string(std::string_view name);

enum class InvalidReason : std::uint8_t {
  None,
  EmptyCylinder,
  OutOfFootprint,
  NoCorrespondence,
  InvalidNormal,
  OutOfRange,
  EmptyCell,
};

std::string_view to_string(InvalidReason reason);

/// Per-point deformation estimates in metres. Invalid entries keep their position and a reason;
/// their value is NaN except for range-filtered entries, which keep the rejected value.
struct PointwiseDeformation {
  Method method = Method::C2M;
  std::vector<Point3> positions;
  std::vector<double> values;
  std::vector<InvalidReason> reasons;

  std::size_t size() const noexcept { return values.size(); }
  bool valid(std::size_t i) const { return reasons[i] == InvalidReason::None; }
  std::size_t valid_count() const;
  void add(const Point3& position, double value);
  void add_invalid(const Point3& position, InvalidReason reason);
};

/// Regular grid layout in the wall x-z plane. Cell (ix, iz) spans
/// [x0 + ix·cell, x0 + (ix+1)·cell) × [z0 + iz·cell, z0 + (iz+1)·cell).
struct GridLayout {
  double x0 = 0.0;
  double z0 = 0.0;
  double cell = 0.02;
  std::size_t nx = 0;
  std::size_t nz = 0;

  std::size_t size() const noexcept { return nx * nz; }
  double center_x(std::size_t ix) const { return x0 + (static_cast<double>(ix) + 0.5) * cell; }
  double center_z(std::size_t iz) const { return z0 + (static_cast<double>(iz) + 0.5) * cell; }
  /// Row-major cell index containing (x, z), or nullopt outside the grid.
  std::optional<std::size_t> locate(double x, double z) const;

  /// Smallest grid whose origin is a multiple of `cell` covering the x-z extent of `points`.
  static GridLayout covering(std::span<const Point3> points, double cell);
};

/// Per-cell deformation grid, values in metres. Rows run along z, so index = iz·nx + ix.
struct DeformationMap {
  Method method = Method::C2M;
  GridLayout grid;
  std::vector<double> values;
  std::vector<std::uint32_t> counts;
  std::vector<InvalidReason> reasons;

  std::size_t size() const noexcept { return values.size(); }
  bool valid(std::size_t i) const { return reasons[i] == InvalidReason::None; }
  std::size_t valid_count() const;
  /// Value of the cell containing (x, z) when that cell is valid.
  std::optional<double> value_at(double x, double z) const;
};

struct DeformationSummary {
  std::size_t total = 0;
  std::size_t valid = 0;
  double mean = 0.0;  // NaN when nothing is valid
  double min = 0.0;
  double max = 0.0;
  double valid_fraction() const { return total ? static_cast<double>(valid) / static_cast<double>(total) : 0.0; }
};

DeformationSummary summarize(const PointwiseDeformation& d);
DeformationSummary summarize(const DeformationMap& map);

/// How M3C2 distances are reported.
enum class M3C2Output {
  /// Distance between the cylinder means, converted to the equivalent y displacement d / (n·y).
  YEquivalent,
  /// Raw distance along the local normal.
  Normal,
};

struct M3C2Params {
  double normal_diameter = 0.03;      // D_n
  double projection_diameter = 0.03;  // D_d
  double cylinder_height = 4.0;       // h
  double core_resolution = 0.0;       // 0 = every reference point is a core point
  M3C2Output output = M3C2Output::YEquivalent;

  void validate() const;
};

/// M3C2 output with the raw along-normal distances and normals kept alongside.
struct M3C2Result : PointwiseDeformation {
  std::vector<double> normal_distances;
  std::vector<Vector3> normals;
  std::vector<std::size_t> core_indices;
};

enum class C2MDistance {
  /// Offset from the TIN along the reference-plane normal, as the equivalent y displacement.
  PlaneNormal,
  /// Signed Euclidean distance to the closest point of the TIN.
  Euclidean,
};

/// Signed distance of every query point to a TIN of the reference (positive toward +y). Query
/// points whose projection falls outside the TIN are invalid.
PointwiseDeformation c2m(const PointCloud& query, const PointCloud& reference,
                         C2MDistance mode = C2MDistance::PlaneNormal);

/// Query mesh height minus reference mesh height along y, sampled at cell centres of a grid
/// lifted onto the reference best-fit plane. Pass a layout to sample a fixed grid.
DeformationMap m2m(const PointCloud& reference, const PointCloud& query, double cell_size = 0.020,
                   const std::optional<GridLayout>& layout = std::nullopt);

M3C2Result m3c2(const PointCloud& reference, const PointCloud& query, const M3C2Params& params = {});

struct IcpDeformParams {
  IcpParams icp;
  /// Normal estimation radius for the reference; 0 picks normal_radius_factor × data spacing.
  double normal_radius = 0.0;
  double normal_radius_factor = 2.0;
};

/// y of (query − nearest reference point) on the unaligned pair, with correspondences found
/// after point-to-plane alignment of the query.
PointwiseDeformation icp_deform(const PointCloud& reference, const PointCloud& query,
                                const IcpDeformParams& params = {});

/// Marks valid entries outside [lo, hi] invalid with reason OutOfRange.
PointwiseDeformation filter_range(const PointwiseDeformation& d, double lo = -0.015, double hi = 0.0);
DeformationMap filter_range(const DeformationMap& map, double lo = -0.015, double hi = 0.0);

/// Per-cell mean of valid values. Cells without valid values are invalid (EmptyCell).
DeformationMap rasterize(const PointwiseDeformation& d, double cell_size = 0.020,
                         const std::optional<GridLayout>& layout = std::nullopt);

/// CSV `x_m,z_m,deformation_mm,count,valid`, row-major, millimetres with 3 decimals.
std::string map_to_csv(const DeformationMap& map);
void write_map_csv(const DeformationMap& map, const std::filesystem::path& path);
/// Reads a map CSV. The grid is reconstructed from the cell centres.
DeformationMap read_map_csv(const std::filesystem::path& path, Method method = Method::C2M,
                            double default_cell = 0.020);

}  // namespace tlsdeform

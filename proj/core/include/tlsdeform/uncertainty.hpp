#pragma once

#include "tlsdeform/cloud.hpp"
#include "tlsdeform/deform.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tlsdeform {

/// Mean absolute value. Throws EmptyInputError on an empty sequence.
double mae(std::span<const double> values);
/// MAE over the valid entries only.
double mae(const PointwiseDeformation& d);
double mae(const DeformationMap& map);

struct LodRow {
  int level = 0;
  double voxel_size = 0.0;  // 0 at level 0 (no subsampling)
  double spacing = 0.0;     // measured data spacing, mean of the two halves
  Method method = Method::C2M;
  double mae = 0.0;         // NaN when the method failed at this level
  std::size_t count = 0;    // 0 when the method failed at this level

  bool ok() const noexcept { return count > 0; }
};

struct LodReport {
  double initial_spacing = 0.0;  // S0
  double step = 0.0;             // voxel size increment per level (2·S0)
  std::vector<Method> methods;
  std::vector<LodRow> rows;      // level-major, methods in the order given

  std::vector<LodRow> rows_for(Method method) const;
};

struct LodParams {
  std::vector<Method> methods{Method::C2M, Method::M2M, Method::M3C2, Method::ICP};
  int levels = 6;
  std::uint64_t seed = 0;
  double m2m_cell = 0.020;
  double m3c2_factor = 4.0;       // D_n = D_d = factor × current spacing
  double cylinder_height = 4.0;
  double icp_normal_factor = 2.0;  // ICP normal radius = factor × current spacing

  void validate() const;
};

/// Split-half self comparison over a sweep of random-in-voxel subsampling levels.
LodReport lod_sweep(const PointCloud& cloud, const LodParams& params = {});

/// CSV `level,voxel_size_m,spacing_m,method,mae_mm,count`.
std::string lod_to_csv(const LodReport& report);
void write_lod_csv(const LodReport& report, const std::filesystem::path& path);

/// Spearman rank correlation with average ranks for ties. Requires equal sizes >= 2.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace tlsdeform

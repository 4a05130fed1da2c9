#pragma once

#include "tlsdeform/deform.hpp"

#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

namespace tlsdeform {

/// Arcseconds per radian.
inline constexpr double kArcsecondsPerRadian = 648000.0 / std::numbers::pi;

/// Lateral displacement D = Δβ / ρ · L for an angular change `delta_beta_arcsec` seen over a
/// sight length `length_m`. Throws InvalidArgumentError when L <= 0.
double small_angle_deformation(double delta_beta_arcsec, double length_m);

/// Single-axis probe readings taken every `interval` metres, ordered bottom to top.
struct InclinometerTrace {
  static constexpr double kDefaultInterval = 0.5;

  double interval = kDefaultInterval;
  std::vector<double> theta_deg;

  double tube_depth() const { return interval * static_cast<double>(theta_deg.size()); }
  void validate() const;
};

/// Lateral deformation (positive in the lean direction) at depths below ground level. Entries
/// are ordered from the tube bottom (deformation exactly 0) up to the surface.
struct DepthProfile {
  std::vector<double> depth;
  std::vector<double> deformation;

  std::size_t size() const noexcept { return depth.size(); }
};

/// Cumulative sum of interval·sin(θ) from the fixed tube bottom.
DepthProfile inclinometer_profile(const InclinometerTrace& trace);

struct ProfileDifference {
  double depth = 0.0;
  double map_mm = 0.0;      // NaN when the cell is missing
  double profile_mm = 0.0;  // profile mapped to wall y (pit-ward lean is negative y)
  double difference_mm = 0.0;
  bool present = false;
};

struct ProfileComparison {
  std::vector<ProfileDifference> rows;
  std::string notice;  // set when the profile and the map do not overlap
};

/// Map value at (x, z0 − depth) minus the wall-frame profile value, for every profile depth
/// inside the map's vertical extent. Positive profile deformation means a pit-ward lean,
/// which is −y in the wall frame.
ProfileComparison compare_profile(const DeformationMap& map, double x, const DepthProfile& profile,
                                  double ground_level_z);

/// CSV `depth_m,theta_deg`, bottom row deepest. Depths must step by `interval`.
InclinometerTrace read_trace_csv(const std::filesystem::path& path);
void write_trace_csv(const InclinometerTrace& trace, const std::filesystem::path& path);
/// CSV `depth_m,deformation_mm`, surface first, bottom row deepest.
std::string profile_to_csv(const DepthProfile& profile);
void write_profile_csv(const DepthProfile& profile, const std::filesystem::path& path);
DepthProfile read_profile_csv(const std::filesystem::path& path);
/// CSV `depth_m,map_mm,profile_mm,difference_mm,present`.
std::string comparison_to_csv(const ProfileComparison& comparison);

}  // namespace tlsdeform

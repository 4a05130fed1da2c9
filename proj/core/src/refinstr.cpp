#include "tlsdeform/refinstr.hpp"

#include "tlsdeform/error.hpp"
#include "tlsdeform/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace tlsdeform {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Row order by decreasing depth, i.e. bottom of the tube first.
std::vector<std::size_t> bottom_first(const std::vector<double>& depth) {
  std::vector<std::size_t> order(depth.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return depth[a] > depth[b]; });
  return order;
}

}  // namespace

double small_angle_deformation(double delta_beta_arcsec, double length_m) {
  if (!(length_m > 0.0)) throw InvalidArgumentError("sight length must be positive");
  if (!std::isfinite(delta_beta_arcsec)) throw InvalidArgumentError("angle change must be finite");
  return delta_beta_arcsec / kArcsecondsPerRadian * length_m;
}

void InclinometerTrace::validate() const {
  if (!(interval > 0.0) || !std::isfinite(interval)) throw InvalidArgumentError("inclinometer interval must be positive");
  if (theta_deg.empty()) throw InvalidArgumentError("inclinometer trace has no readings");
  for (std::size_t i = 0; i < theta_deg.size(); ++i) {
    if (!std::isfinite(theta_deg[i]) || std::abs(theta_deg[i]) >= 90.0) {
      throw InvalidArgumentError("inclinometer reading " + std::to_string(i) + " is not a tilt below 90 degrees");
    }
  }
}

DepthProfile inclinometer_profile(const InclinometerTrace& trace) {
  trace.validate();
  const std::size_t n = trace.theta_deg.size();
  DepthProfile profile;
  profile.depth.resize(n + 1);
  profile.deformation.resize(n + 1);
  double sum = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    profile.depth[k] = trace.interval * static_cast<double>(n - k);
    profile.deformation[k] = sum;
    if (k < n) sum += trace.interval * std::sin(trace.theta_deg[k] * kDegToRad);
  }
  return profile;
}

ProfileComparison compare_profile(const DeformationMap& map, double x, const DepthProfile& profile,
                                  double ground_level_z) {
  if (profile.depth.size() != profile.deformation.size()) {
    throw InvalidArgumentError("profile depth and deformation sizes differ");
  }
  ProfileComparison out;
  const GridLayout& g = map.grid;
  const double z_lo = g.z0;
  const double z_hi = g.z0 + static_cast<double>(g.nz) * g.cell;
  const double x_hi = g.x0 + static_cast<double>(g.nx) * g.cell;
  if (x >= g.x0 && x < x_hi) {
    for (std::size_t k = 0; k < profile.size(); ++k) {
      const double z = ground_level_z - profile.depth[k];
      if (z < z_lo || z >= z_hi) continue;
      ProfileDifference row;
      row.depth = profile.depth[k];
      row.profile_mm = -profile.deformation[k] * 1000.0;
      const auto v = map.value_at(x, z);
      if (v) {
        row.present = true;
        row.map_mm = *v * 1000.0;
        row.difference_mm = row.map_mm - row.profile_mm;
      } else {
        row.map_mm = std::numeric_limits<double>::quiet_NaN();
        row.difference_mm = std::numeric_limits<double>::quiet_NaN();
      }
      out.rows.push_back(row);
    }
  }
  if (out.rows.empty()) out.notice = "profile does not overlap the deformation map";
  return out;
}

InclinometerTrace read_trace_csv(const std::filesystem::path& path) {
  const NumericCsv table = read_numeric_csv(path, "depth_m,theta_deg");
  if (table.rows.empty()) throw ParseError(path.string(), 0, "trace has no readings");
  std::vector<double> depth;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    if (!std::isfinite(table.rows[k][0]) || !std::isfinite(table.rows[k][1])) {
      throw ParseError(path.string(), table.lines[k], "non-finite trace value");
    }
    depth.push_back(table.rows[k][0]);
  }
  const auto order = bottom_first(depth);
  InclinometerTrace trace;
  if (order.size() > 1) trace.interval = depth[order[0]] - depth[order[1]];
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t row = order[k];
    // Reading k sits at the lower end of its interval.
    const double expected = trace.interval * static_cast<double>(order.size() - k);
    if (std::abs(depth[row] - expected) > 1e-6) {
      throw ParseError(path.string(), table.lines[row], "depth does not follow a regular interval from the surface");
    }
    trace.theta_deg.push_back(table.rows[row][1]);
  }
  try {
    trace.validate();
  } catch (const InvalidArgumentError& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  return trace;
}

void write_trace_csv(const InclinometerTrace& trace, const std::filesystem::path& path) {
  trace.validate();
  std::ostringstream out;
  out << "depth_m,theta_deg\n";
  const std::size_t n = trace.theta_deg.size();
  for (std::size_t i = n; i-- > 0;) {
    out << format_double(trace.interval * static_cast<double>(n - i)) << ',' << format_double(trace.theta_deg[i])
        << '\n';
  }
  write_text_atomic(path, out.str());
}

std::string profile_to_csv(const DepthProfile& profile) {
  std::ostringstream out;
  out << "depth_m,deformation_mm\n";
  for (std::size_t k = profile.size(); k-- > 0;) {
    out << format_double(profile.depth[k]) << ',' << format_double(profile.deformation[k] * 1000.0) << '\n';
  }
  return out.str();
}

void write_profile_csv(const DepthProfile& profile, const std::filesystem::path& path) {
  write_text_atomic(path, profile_to_csv(profile));
}

DepthProfile read_profile_csv(const std::filesystem::path& path) {
  const NumericCsv table = read_numeric_csv(path, "depth_m,deformation_mm");
  if (table.rows.empty()) throw ParseError(path.string(), 0, "profile has no rows");
  std::vector<double> depth;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    if (!std::isfinite(table.rows[k][0]) || !std::isfinite(table.rows[k][1])) {
      throw ParseError(path.string(), table.lines[k], "non-finite profile value");
    }
    depth.push_back(table.rows[k][0]);
  }
  DepthProfile profile;
  for (std::size_t row : bottom_first(depth)) {
    profile.depth.push_back(table.rows[row][0]);
    profile.deformation.push_back(table.rows[row][1] / 1000.0);
  }
  return profile;
}

std::string comparison_to_csv(const ProfileComparison& comparison) {
  std::ostringstream out;
  out << "depth_m,map_mm,profile_mm,difference_mm,present\n";
  auto num = [](double v) { return std::isfinite(v) ? format_fixed(v, 3) : std::string("nan"); };
  for (const auto& r : comparison.rows) {
    out << format_double(r.depth) << ',' << num(r.map_mm) << ',' << num(r.profile_mm) << ',' << num(r.difference_mm)
        << ',' << (r.present ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace tlsdeform

#include <tlsdeform/error.hpp>
#include <tlsdeform/io.hpp>
#include <tlsdeform/refinstr.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

namespace tlsdeform {
namespace {

namespace fs = std::filesystem;
constexpr double kDeg = std::numbers::pi / 180.0;

TEST(SmallAngle, Examples) {
  EXPECT_EQ(small_angle_deformation(0.0, 80.0), 0.0);
  const double d = small_angle_deformation(10.0, 80.0);
  // 80 m at 10 arcsec is 3.87851 mm; the quoted 3.8784 is a rounding of that.
  EXPECT_NEAR(d * 1000.0, 3.8784, 2e-4);
  const double exact = 80.0 * std::tan(10.0 * std::numbers::pi / 648000.0);
  EXPECT_LT(std::abs(d - exact) / exact, 1e-7);
  EXPECT_NEAR(small_angle_deformation(206.2648, 1.0) * 1000.0, 1.0, 1e-6);
  EXPECT_NEAR(kArcsecondsPerRadian, 206264.806, 1e-3);
}

TEST(SmallAngle, SignAndLinearity) {
  EXPECT_LT(small_angle_deformation(-5.0, 30.0), 0.0);
  EXPECT_DOUBLE_EQ(small_angle_deformation(-5.0, 30.0), -small_angle_deformation(5.0, 30.0));
  EXPECT_NEAR(small_angle_deformation(20.0, 30.0), 2.0 * small_angle_deformation(10.0, 30.0), 1e-18);
  EXPECT_NEAR(small_angle_deformation(10.0, 60.0), 2.0 * small_angle_deformation(10.0, 30.0), 1e-18);
  for (double b = -100.0; b <= 100.0; b += 7.0) {
    if (b == 0.0) continue;
    const double exact = 50.0 * std::tan(b * std::numbers::pi / 648000.0);
    EXPECT_LT(std::abs(small_angle_deformation(b, 50.0) - exact) / std::abs(exact), 1e-7);
  }
}

TEST(SmallAngle, RejectsBadLength) {
  EXPECT_THROW(small_angle_deformation(1.0, 0.0), InvalidArgumentError);
  EXPECT_THROW(small_angle_deformation(1.0, -3.0), InvalidArgumentError);
}

TEST(Inclinometer, ZeroTiltIsZero) {
  InclinometerTrace t;
  t.theta_deg.assign(45, 0.0);
  EXPECT_DOUBLE_EQ(t.tube_depth(), 22.5);
  const DepthProfile p = inclinometer_profile(t);
  ASSERT_EQ(p.size(), 46u);
  EXPECT_DOUBLE_EQ(p.depth.front(), 22.5);
  EXPECT_DOUBLE_EQ(p.depth.back(), 0.0);
  for (double d : p.deformation) EXPECT_EQ(d, 0.0);
}

TEST(Inclinometer, TwoIntervalsAtOneHundredthDegree) {
  InclinometerTrace t;
  t.theta_deg = {0.01, 0.01, 0.0, 0.0};
  const DepthProfile p = inclinometer_profile(t);
  EXPECT_NEAR(p.deformation.back() * 1000.0, 2 * 0.5 * std::sin(0.01 * kDeg) * 1000.0, 1e-12);
  EXPECT_NEAR(p.deformation.back() * 1000.0, 0.1745, 1e-4);
  EXPECT_EQ(p.deformation.front(), 0.0);
}

TEST(Inclinometer, RoundTripFromSmoothCurve) {
  const int n = 40;
  InclinometerTrace t;
  std::vector<double> target(n + 1);
  for (int k = 0; k <= n; ++k) target[k] = 0.02 * std::sin(0.1 * k) * (k / double(n));
  for (int k = 0; k < n; ++k) t.theta_deg.push_back(std::asin((target[k + 1] - target[k]) / 0.5) / kDeg);
  const DepthProfile p = inclinometer_profile(t);
  for (int k = 0; k <= n; ++k) EXPECT_NEAR(p.deformation[k], target[k], 1e-9);
}

TEST(Inclinometer, ConcatenationIsPrefixSum) {
  InclinometerTrace a, b, ab;
  a.theta_deg = {0.5, -0.2, 1.0};
  b.theta_deg = {0.3, 0.3};
  ab.theta_deg = {0.5, -0.2, 1.0, 0.3, 0.3};
  const DepthProfile pa = inclinometer_profile(a), pb = inclinometer_profile(b), pab = inclinometer_profile(ab);
  for (std::size_t k = 0; k < pb.size(); ++k) {
    EXPECT_NEAR(pab.deformation[3 + k], pa.deformation.back() + pb.deformation[k], 1e-15);
  }
}

TEST(Inclinometer, Validation) {
  InclinometerTrace t;
  t.theta_deg = {10.0, 90.0};
  EXPECT_THROW(inclinometer_profile(t), InvalidArgumentError);
  t.theta_deg = {};
  EXPECT_THROW(inclinometer_profile(t), Error);
}

TEST(TraceCsv, RoundTripAndOrder) {
  const fs::path dir = fs::temp_directory_path() / "tlsdeform_refinstr";
  fs::create_directories(dir);
  InclinometerTrace t;
  t.theta_deg = {0.1, 0.2, 0.3};
  write_trace_csv(t, dir / "trace.csv");
  const std::string text = read_text(dir / "trace.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "depth_m,theta_deg");
  const InclinometerTrace back = read_trace_csv(dir / "trace.csv");
  EXPECT_EQ(back.theta_deg, t.theta_deg);
  EXPECT_DOUBLE_EQ(back.interval, 0.5);

  // Either row order is accepted.
  write_text_atomic(dir / "rev.csv", "depth_m,theta_deg\n1.5,0.1\n1.0,0.2\n0.5,0.3\n");
  write_text_atomic(dir / "fwd.csv", "depth_m,theta_deg\n0.5,0.3\n1.0,0.2\n1.5,0.1\n");
  EXPECT_EQ(read_trace_csv(dir / "rev.csv").theta_deg, t.theta_deg);
  EXPECT_EQ(read_trace_csv(dir / "fwd.csv").theta_deg, t.theta_deg);
  write_text_atomic(dir / "gap.csv", "depth_m,theta_deg\n0.5,0.3\n1.0,0.2\n2.0,0.1\n");
  EXPECT_THROW(read_trace_csv(dir / "gap.csv"), ParseError);
}

TEST(ProfileCsv, RoundTrip) {
  InclinometerTrace t;
  t.theta_deg = {0.4, -0.1, 0.25, 0.0};
  const DepthProfile p = inclinometer_profile(t);
  const fs::path path = fs::temp_directory_path() / "tlsdeform_profile.csv";
  write_profile_csv(p, path);
  const DepthProfile back = read_profile_csv(path);
  ASSERT_EQ(back.size(), p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    EXPECT_DOUBLE_EQ(back.depth[k], p.depth[k]);
    EXPECT_NEAR(back.deformation[k], p.deformation[k], 1e-12);
  }
}

DeformationMap column_map(const DepthProfile& p, double ground_z, double bias_mm, double x0 = 0.0) {
  DeformationMap m;
  m.grid = GridLayout{x0, ground_z - 12.0, 0.5, 2, 24};
  m.values.assign(m.grid.size(), 0.0);
  m.counts.assign(m.grid.size(), 1);
  m.reasons.assign(m.grid.size(), InvalidReason::None);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (const auto cell = m.grid.locate(x0 + 0.25, ground_z - p.depth[k])) {
      m.values[*cell] = -p.deformation[k] + bias_mm / 1000.0;
    }
  }
  return m;
}

TEST(CompareProfile, ExactAndBiasedMaps) {
  InclinometerTrace t;
  t.theta_deg.assign(20, 0.05);
  const DepthProfile p = inclinometer_profile(t);
  // Depth nodes sit at cell centres: ground 0.25 above a cell boundary.
  const double ground = 12.25;
  const ProfileComparison exact = compare_profile(column_map(p, ground, 0.0), 0.25, p, ground);
  ASSERT_FALSE(exact.rows.empty());
  EXPECT_TRUE(exact.notice.empty());
  for (const auto& r : exact.rows) {
    ASSERT_TRUE(r.present);
    EXPECT_NEAR(r.difference_mm, 0.0, 1e-9);
  }
  const ProfileComparison biased = compare_profile(column_map(p, ground, -2.0), 0.25, p, ground);
  for (const auto& r : biased.rows) EXPECT_NEAR(r.difference_mm, -2.0, 1e-9);
}

TEST(CompareProfile, MissingCellsAndNoOverlap) {
  InclinometerTrace t;
  t.theta_deg.assign(10, 0.05);
  const DepthProfile p = inclinometer_profile(t);
  DeformationMap m = column_map(p, 12.25, 0.0);
  m.reasons[m.grid.locate(0.25, 12.25 - 2.0).value()] = InvalidReason::EmptyCell;
  const ProfileComparison c = compare_profile(m, 0.25, p, 12.25);
  std::size_t missing = 0;
  for (const auto& r : c.rows) {
    if (!r.present) {
      ++missing;
      EXPECT_TRUE(std::isnan(r.map_mm));
      EXPECT_DOUBLE_EQ(r.depth, 2.0);
    }
  }
  EXPECT_EQ(missing, 1u);
  const ProfileComparison none = compare_profile(m, 0.25, p, 100.0);
  EXPECT_TRUE(none.rows.empty());
  EXPECT_FALSE(none.notice.empty());
  const std::string csv = comparison_to_csv(c);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "depth_m,map_mm,profile_mm,difference_mm,present");
}

}  // namespace
}  // namespace tlsdeform

#include <tlsdeform/deform.hpp>
#include <tlsdeform/error.hpp>
#include <tlsdeform/io.hpp>
#include <tlsdeform/synth.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

namespace tlsdeform {
namespace {

WallSpec flat_wall(double length, double height, double spacing, double noise = 0.0, std::uint64_t seed = 0) {
  WallSpec w;
  w.length = length;
  w.height = height;
  w.spacing = spacing;
  w.amplitude = 0.0;
  w.noise = noise;
  w.seed = seed;
  return w;
}

PointCloud shifted(const PointCloud& c, double dy) {
  return apply_transform(c, RigidTransform(Matrix3::Identity(), Vector3(0, dy, 0)));
}

std::vector<double> valid_values(const PointwiseDeformation& d) {
  std::vector<double> v;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.valid(i)) v.push_back(d.values[i]);
  }
  return v;
}

double stddev(const std::vector<double>& v) {
  const double m = oracle::mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

TEST(C2M, IdenticalCloudsAreZero) {
  WallSpec w;
  w.length = 0.6;
  w.height = 0.4;
  w.spacing = 0.01;
  const PointCloud c = gen_wall(w);
  const PointwiseDeformation d = c2m(c, c);
  ASSERT_EQ(d.size(), c.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    ASSERT_TRUE(d.valid(i));
    EXPECT_EQ(d.values[i], 0.0);
  }
}

TEST(C2M, UniformOffsetBothDistanceModes) {
  const PointCloud ref = gen_wall(flat_wall(1.0, 0.5, 0.02));
  const PointCloud qry = shifted(gen_wall(flat_wall(1.0, 0.5, 0.02, 0.0, 9)), -0.010);
  for (auto mode : {C2MDistance::PlaneNormal, C2MDistance::Euclidean}) {
    const PointwiseDeformation d = c2m(qry, ref, mode);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d.valid(i)) EXPECT_NEAR(d.values[i], -0.010, 1e-12);
      else EXPECT_EQ(d.reasons[i], InvalidReason::OutOfFootprint);
    }
    EXPECT_GT(d.valid_count(), d.size() * 95 / 100);
  }
}

TEST(C2M, ImposedFieldOnWavyWall) {
  WallSpec w;
  w.length = 1.2;
  w.height = 0.6;
  w.spacing = 0.005;
  w.seed = 1;
  const PointCloud ref = gen_wall(w);
  w.seed = 2;
  const auto field = DeformationField::bowl({0, w.length, 0, w.height}, -0.012 / 0.5625);
  const PointCloud qry = deform_wall(gen_wall(w), field);
  const double cell = 0.05;
  const DeformationMap map = rasterize(c2m(qry, ref), cell);
  std::size_t cells = 0;
  for (std::size_t iz = 0; iz < map.grid.nz; ++iz) {
    for (std::size_t ix = 0; ix < map.grid.nx; ++ix) {
      const std::size_t k = iz * map.grid.nx + ix;
      if (!map.valid(k) || map.counts[k] < 50) continue;
      const double xc = map.grid.center_x(ix), zc = map.grid.center_z(iz);
      if (xc - cell / 2 < 0 || xc + cell / 2 > w.length || zc - cell / 2 < 0 || zc + cell / 2 > w.height) continue;
      double s = 0;
      for (int a = 0; a < 10; ++a) {
        for (int b = 0; b < 10; ++b) s += field(xc + ((a + 0.5) / 10 - 0.5) * cell, zc + ((b + 0.5) / 10 - 0.5) * cell);
      }
      EXPECT_NEAR(map.values[k], s / 100.0, 0.001) << xc << "," << zc;
      ++cells;
    }
  }
  EXPECT_GT(cells, 200u);
}

TEST(C2M, RejectsMixedFramesAndEmpty) {
  const PointCloud wall = gen_wall(flat_wall(0.3, 0.3, 0.03));
  const PointCloud site(wall.points(), Frame::Site);
  EXPECT_THROW(c2m(site, wall), InvalidArgumentError);
  EXPECT_THROW(c2m(PointCloud({}, Frame::WallLocal), wall), EmptyInputError);
}

TEST(M2M, IdenticalCloudsAreZero) {
  WallSpec w;
  w.length = 0.8;
  w.height = 0.5;
  w.spacing = 0.01;
  const PointCloud c = gen_wall(w);
  const DeformationMap m = m2m(c, c);
  EXPECT_GT(m.valid_count(), 0u);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.valid(i)) EXPECT_NEAR(m.values[i], 0.0, 1e-12);
  }
}

TEST(M2M, PlanesOffsetFiveMillimetres) {
  const PointCloud ref = gen_wall(flat_wall(1.0, 0.6, 0.01));
  const PointCloud qry = shifted(gen_wall(flat_wall(1.0, 0.6, 0.01, 0.0, 3)), -0.005);
  const DeformationMap m = m2m(ref, qry);
  EXPECT_GT(m.valid_count(), m.size() * 8 / 10);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.valid(i)) EXPECT_NEAR(m.values[i], -0.005, 1e-12);
  }
}

TEST(M2M, TiltedQueryRamp) {
  const PointCloud ref = gen_wall(flat_wall(4.0, 0.4, 0.02));
  const auto ramp = DeformationField::ramp({0, 4.0, 0, 0.4}, 0.0, -0.001, 0.0);
  const PointCloud qry = deform_wall(gen_wall(flat_wall(4.0, 0.4, 0.02, 0.0, 4)), ramp);
  const DeformationMap m = m2m(ref, qry);
  std::size_t checked = 0;
  for (std::size_t iz = 0; iz < m.grid.nz; ++iz) {
    for (std::size_t ix = 0; ix < m.grid.nx; ++ix) {
      const std::size_t k = iz * m.grid.nx + ix;
      if (!m.valid(k)) continue;
      EXPECT_NEAR(m.values[k], -0.001 * m.grid.center_x(ix), 1e-4);
      ++checked;
    }
  }
  EXPECT_GT(checked, 3000u);
}

TEST(M2M, FixedLayoutAndEmptyNodes) {
  const PointCloud ref = gen_wall(flat_wall(0.5, 0.5, 0.01));
  GridLayout layout{-0.5, 0.0, 0.1, 10, 5};
  const DeformationMap m = m2m(ref, ref, 0.1, layout);
  EXPECT_EQ(m.grid.nx, 10u);
  for (std::size_t iz = 0; iz < 5; ++iz) {
    for (std::size_t ix = 0; ix < 5; ++ix) EXPECT_EQ(m.reasons[iz * 10 + ix], InvalidReason::OutOfFootprint);
  }
}

TEST(M3C2, PlaneOffsetEveryCorePoint) {
  const PointCloud ref = gen_wall(flat_wall(0.6, 0.4, 0.005));
  const PointCloud qry = shifted(gen_wall(flat_wall(0.6, 0.4, 0.005, 0.0, 5)), -0.010);
  const M3C2Result d = m3c2(ref, qry);
  std::size_t valid = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d.valid(i)) continue;
    ++valid;
    EXPECT_NEAR(d.values[i], -0.010, 1e-12);
    EXPECT_NEAR(d.normal_distances[i], -0.010, 1e-12);
    EXPECT_NEAR(d.normals[i].y(), 1.0, 1e-12);
  }
  EXPECT_EQ(valid, ref.size());
}

TEST(M3C2, EmptyQueryCylinderIsInvalid) {
  const PointCloud ref = gen_wall(flat_wall(0.6, 0.4, 0.005));
  std::vector<Point3> holey;
  for (const auto& p : gen_wall(flat_wall(0.6, 0.4, 0.005, 0.0, 6))) {
    if ((p - Point3(0.3, 0, 0.2)).norm() > 0.05) holey.push_back(p + Vector3(0, -0.01, 0));
  }
  const M3C2Result d = m3c2(ref, PointCloud(holey, Frame::WallLocal));
  std::size_t empty = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Point3& c = d.positions[i];
    if ((c - Point3(0.3, 0, 0.2)).norm() < 0.03) {
      EXPECT_EQ(d.reasons[i], InvalidReason::EmptyCylinder);
      EXPECT_TRUE(std::isnan(d.values[i]));
      ++empty;
    }
  }
  EXPECT_GT(empty, 50u);
}

TEST(M3C2, NoiseMatchesStandardErrorFormula) {
  const double sigma = 0.0015;
  const PointCloud ref = gen_wall(flat_wall(1.0, 0.6, 0.004, sigma, 1));
  const PointCloud qry = shifted(gen_wall(flat_wall(1.0, 0.6, 0.004, sigma, 2)), -0.010);
  M3C2Params p;
  p.normal_diameter = 0.04;
  p.projection_diameter = 0.04;
  p.core_resolution = 0.05;  // nearly independent cylinders
  const M3C2Result d = m3c2(ref, qry, p);
  ASSERT_GT(d.valid_count(), 150u);
  // Points per cylinder: area over spacing squared.
  const double n = std::numbers::pi * 0.02 * 0.02 / (0.004 * 0.004);
  ASSERT_GE(n, 30.0);
  const auto v = valid_values(d);
  const double expected = sigma * std::sqrt(2.0 / n);
  EXPECT_NEAR(oracle::mean(v), -0.010, 1e-4);
  EXPECT_GT(stddev(v), 0.7 * expected);
  EXPECT_LT(stddev(v), 1.4 * expected);
}

TEST(M3C2, ResolutionSubsetGivesIdenticalValues) {
  WallSpec w;
  w.length = 0.5;
  w.height = 0.4;
  w.spacing = 0.01;
  w.seed = 3;
  const PointCloud ref = gen_wall(w);
  w.seed = 4;
  const PointCloud qry = deform_wall(gen_wall(w), DeformationField::constant({0, 0.5, 0, 0.4}, -0.004));
  const M3C2Result all = m3c2(ref, qry);
  M3C2Params p;
  p.core_resolution = 0.035;
  const M3C2Result sub = m3c2(ref, qry, p);
  ASSERT_LT(sub.size(), all.size());
  for (std::size_t k = 0; k < sub.size(); ++k) {
    const std::size_t core = sub.core_indices[k];
    EXPECT_EQ(all.core_indices[core], core);
    EXPECT_EQ(sub.reasons[k], all.reasons[core]);
    if (sub.valid(k)) EXPECT_EQ(sub.values[k], all.values[core]);
  }
}

TEST(M3C2, ParameterValidation) {
  M3C2Params p;
  p.normal_diameter = 0.0;
  EXPECT_THROW(p.validate(), InvalidArgumentError);
  p = {};
  p.core_resolution = -1.0;
  EXPECT_THROW(p.validate(), InvalidArgumentError);
  p = {};
  p.cylinder_height = -4.0;
  EXPECT_THROW(p.validate(), InvalidArgumentError);
}

TEST(IcpDeform, IdenticalCloudsAreZero) {
  const PointCloud c = gen_wall(flat_wall(0.6, 0.4, 0.01, 0.001));
  const PointwiseDeformation d = icp_deform(c, c);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d.values[i], 0.0);
}

TEST(IcpDeform, StructuredOffset) {
  WallSpec w;
  w.length = 1.0;
  w.height = 0.6;
  w.spacing = 0.01;
  w.noise = 0.0;
  w.seed = 1;
  const PointCloud ref = gen_wall(w);
  w.seed = 2;
  const PointCloud qry = shifted(gen_wall(w), -0.010);
  const PointwiseDeformation d = icp_deform(ref, qry);
  EXPECT_NEAR(oracle::mean(valid_values(d)), -0.010, 1e-3);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d.positions[i], qry[i]);
}

// C2M is a single-point estimator like ICP, so it is left out of the comparison.
TEST(IcpDeform, NoisierThanAveragingEstimators) {
  WallSpec w;
  w.length = 1.0;
  w.height = 0.6;
  w.spacing = 0.008;
  w.seed = 3;
  const PointCloud ref = gen_wall(w);
  w.seed = 4;
  const PointCloud qry = deform_wall(gen_wall(w), DeformationField::constant({0, 1.0, 0, 0.6}, -0.005));
  const auto interior = [](const PointwiseDeformation& d) {
    std::vector<double> v;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const Point3& p = d.positions[i];
      if (d.valid(i) && p.x() > 0.05 && p.x() < 0.95 && p.z() > 0.05 && p.z() < 0.55) v.push_back(d.values[i]);
    }
    return v;
  };
  const double s_icp = stddev(interior(icp_deform(ref, qry)));
  const double s_m3c2 = stddev(interior(m3c2(ref, qry)));
  std::vector<double> m2m_values;
  const DeformationMap mm = m2m(ref, qry);
  for (std::size_t i = 0; i < mm.size(); ++i) {
    if (mm.valid(i)) m2m_values.push_back(mm.values[i]);
  }
  EXPECT_GT(s_icp, s_m3c2);
  EXPECT_GT(s_icp, stddev(m2m_values));
}

TEST(Estimators, UniformTranslationNoiseFree) {
  const PointCloud ref = gen_wall(flat_wall(0.8, 0.5, 0.01));
  for (double v : {-0.010, 0.004}) {
    const PointCloud qry = shifted(ref, v);
    const auto check = [&](const PointwiseDeformation& d, std::size_t min_valid) {
      std::size_t n = 0;
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (!d.valid(i)) continue;
        EXPECT_NEAR(d.values[i], v, 1e-9);
        ++n;
      }
      EXPECT_GE(n, min_valid);
    };
    check(c2m(qry, ref), ref.size() * 9 / 10);
    check(m3c2(ref, qry), ref.size());
    check(icp_deform(ref, qry), ref.size());
    const DeformationMap m = m2m(ref, qry);
    EXPECT_GT(m.valid_count(), 0u);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m.valid(i)) EXPECT_NEAR(m.values[i], v, 1e-9);
    }
  }
}

TEST(Estimators, InvariantToJointRigidMotionWithFrame) {
  WallSpec w;
  w.length = 0.6;
  w.height = 0.4;
  w.spacing = 0.01;
  w.seed = 8;
  const PointCloud ref = gen_wall(w);
  w.seed = 9;
  const PointCloud qry = deform_wall(gen_wall(w), DeformationField::bowl({0, 0.6, 0, 0.4}, -0.01));

  // Place the wall somewhere in a site frame, then come back through the matching wall frame.
  const double a = 1.1;
  const Matrix3 axes = (Matrix3() << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1).finished();
  const Point3 origin(512.3, -81.7, 14.2);
  const WallFrame frame(origin, axes.col(0), axes.col(1), axes.col(2));
  const RigidTransform to_site = frame.to_local().inverse();
  const PointCloud ref_site(apply_transform(ref, to_site).points(), Frame::Site);
  const PointCloud qry_site(apply_transform(qry, to_site).points(), Frame::Site);
  const PointCloud ref2 = to_wall_frame(ref_site, frame);
  const PointCloud qry2 = to_wall_frame(qry_site, frame);

  const auto compare = [](const PointwiseDeformation& x, const PointwiseDeformation& y) {
    ASSERT_EQ(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      ASSERT_EQ(x.reasons[i], y.reasons[i]);
      if (x.valid(i)) EXPECT_NEAR(x.values[i], y.values[i], 1e-9);
    }
  };
  compare(c2m(qry, ref), c2m(qry2, ref2));
  compare(m3c2(ref, qry), m3c2(ref2, qry2));
  const GridLayout layout = GridLayout::covering(ref.span(), 0.02);
  const DeformationMap m1 = m2m(ref, qry, 0.02, layout);
  const DeformationMap m2 = m2m(ref2, qry2, 0.02, layout);
  for (std::size_t i = 0; i < m1.size(); ++i) {
    ASSERT_EQ(m1.reasons[i], m2.reasons[i]);
    if (m1.valid(i)) EXPECT_NEAR(m1.values[i], m2.values[i], 1e-9);
  }
}

TEST(FilterRange, Examples) {
  PointwiseDeformation d;
  for (double v : {-0.016, -0.010, 0.001}) d.add(Point3(v, 0, 0), v);
  const PointwiseDeformation f = filter_range(d);
  EXPECT_FALSE(f.valid(0));
  EXPECT_TRUE(f.valid(1));
  EXPECT_FALSE(f.valid(2));
  EXPECT_EQ(f.reasons[0], InvalidReason::OutOfRange);
  EXPECT_EQ(f.values[1], -0.010);

  PointwiseDeformation in_range;
  for (double v : {-0.015, -0.007, 0.0}) in_range.add(Point3::Zero(), v);
  const PointwiseDeformation same = filter_range(in_range);
  EXPECT_EQ(same.valid_count(), 3u);
  EXPECT_EQ(same.values, in_range.values);

  PointwiseDeformation artifact;
  artifact.add(Point3::Zero(), 0.4);
  EXPECT_EQ(filter_range(artifact).valid_count(), 0u);
  EXPECT_THROW(filter_range(d, 0.0, -0.015), InvalidArgumentError);
}

TEST(FilterRange, NeverAltersSurvivorsAndCountsAddUp) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.05, 0.45);
  DeformationMap m;
  m.grid = GridLayout{0, 0, 0.02, 50, 40};
  for (std::size_t i = 0; i < m.grid.size(); ++i) {
    m.values.push_back(u(rng));
    m.counts.push_back(1);
    m.reasons.push_back(i % 17 == 0 ? InvalidReason::EmptyCell : InvalidReason::None);
  }
  const DeformationMap f = filter_range(m);
  std::size_t removed = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(f.values[i], m.values[i]);
    if (m.valid(i) && !f.valid(i)) {
      ++removed;
      EXPECT_EQ(f.reasons[i], InvalidReason::OutOfRange);
    }
    if (f.valid(i)) {
      EXPECT_GE(f.values[i], -0.015);
      EXPECT_LE(f.values[i], 0.0);
    }
  }
  EXPECT_EQ(f.valid_count() + removed, m.valid_count());
}

TEST(Rasterize, OnePointPerCellAndMean) {
  PointwiseDeformation d;
  d.add(Point3(0.01, 0, 0.01), -0.002);
  d.add(Point3(0.03, 0, 0.01), -0.003);
  d.add(Point3(0.05, 0, 0.03), -0.004);
  d.add(Point3(0.051, 0, 0.031), -0.006);
  d.add_invalid(Point3(0.01, 0, 0.03), InvalidReason::EmptyCylinder);
  const DeformationMap m = rasterize(d, 0.02);
  EXPECT_EQ(m.grid.nx, 3u);
  EXPECT_EQ(m.grid.nz, 2u);
  EXPECT_EQ(*m.value_at(0.01, 0.01), -0.002);
  EXPECT_EQ(*m.value_at(0.03, 0.01), -0.003);
  EXPECT_NEAR(*m.value_at(0.05, 0.03), -0.005, 1e-18);
  EXPECT_EQ(m.counts[1 * 3 + 2], 2u);
  EXPECT_FALSE(m.value_at(0.01, 0.03).has_value());
  EXPECT_EQ(m.reasons[1 * 3 + 0], InvalidReason::EmptyCell);
}

TEST(Rasterize, DenseFieldCellAverages) {
  const auto field = DeformationField::bowl({0, 1, 0, 1}, -0.012 / 0.5625);
  PointwiseDeformation d;
  for (int i = 0; i < 500; ++i) {
    for (int j = 0; j < 500; ++j) {
      const double x = (i + 0.5) / 500.0, z = (j + 0.5) / 500.0;
      d.add(Point3(x, 0, z), field(x, z));
    }
  }
  const DeformationMap m = rasterize(d, 0.02);
  EXPECT_EQ(m.valid_count(), 2500u);
  for (std::size_t iz = 0; iz < m.grid.nz; ++iz) {
    for (std::size_t ix = 0; ix < m.grid.nx; ++ix) {
      double s = 0;
      for (int a = 0; a < 20; ++a) {
        for (int b = 0; b < 20; ++b) s += field(0.02 * (ix + (a + 0.5) / 20), 0.02 * (iz + (b + 0.5) / 20));
      }
      EXPECT_NEAR(m.values[iz * m.grid.nx + ix], s / 400.0, 0.0005);
    }
  }
}

TEST(GridLayout, CoveringSnapsToCellMultiples) {
  const std::vector<Point3> pts{Point3(0.013, 0, -0.051), Point3(0.499, 1, 0.2)};
  const GridLayout g = GridLayout::covering(pts, 0.02);
  EXPECT_NEAR(g.x0, 0.0, 1e-15);
  EXPECT_NEAR(g.z0, -0.06, 1e-15);
  EXPECT_TRUE(g.locate(0.499, 0.2).has_value());
  EXPECT_TRUE(g.locate(0.013, -0.051).has_value());
  EXPECT_FALSE(g.locate(-0.001, 0.0).has_value());
}

TEST(MapCsv, RoundTrip) {
  PointwiseDeformation d;
  d.add(Point3(0.01, 0, 0.01), -0.0021234);
  d.add(Point3(0.05, 0, 0.03), -0.004);
  const DeformationMap m = rasterize(d, 0.02);
  const std::string text = map_to_csv(m);
  EXPECT_EQ(text.substr(0, text.find('\n')), "x_m,z_m,deformation_mm,count,valid");
  EXPECT_NE(text.find("-2.123"), std::string::npos);
  const auto path = std::filesystem::temp_directory_path() / "tlsdeform_map_rt.csv";
  write_map_csv(m, path);
  const DeformationMap back = read_map_csv(path, Method::M3C2);
  EXPECT_EQ(back.method, Method::M3C2);
  EXPECT_EQ(back.grid.nx, m.grid.nx);
  EXPECT_EQ(back.grid.nz, m.grid.nz);
  EXPECT_NEAR(back.grid.cell, 0.02, 1e-12);
  EXPECT_EQ(back.valid_count(), m.valid_count());
  EXPECT_NEAR(*back.value_at(0.01, 0.01), -0.002123, 1e-12);
  EXPECT_EQ(map_to_csv(back), text);
}

TEST(Method, Names) {
  for (Method m : {Method::C2M, Method::M2M, Method::M3C2, Method::ICP}) {
    EXPECT_EQ(method_from_string(to_string(m)), m);
  }
  EXPECT_EQ(method_from_string("M3C2"), Method::M3C2);
  EXPECT_FALSE(method_from_string("c2c").has_value());
}

}  // namespace
}  // namespace tlsdeform

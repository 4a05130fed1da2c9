#include "tlsdeform/uncertainty.hpp"

#include "tlsdeform/error.hpp"
#include "tlsdeform/io.hpp"
#include "tlsdeform/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace tlsdeform {

namespace {

template <typename T>
double mae_valid(const T& d) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!d.valid(i)) continue;
    sum += std::abs(d.values[i]);
    ++n;
  }
  if (n == 0) throw EmptyInputError("MAE of a set with no valid values");
  return sum / static_cast<double>(n);
}

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double mae(std::span<const double> values) {
  if (values.empty()) throw EmptyInputError("MAE of an empty sequence");
  double sum = 0.0;
  for (double v : values) sum += std::abs(v);
  return sum / static_cast<double>(values.size());
}

double mae(const PointwiseDeformation& d) { return mae_valid(d); }
double mae(const DeformationMap& map) { return mae_valid(map); }

std::vector<LodRow> LodReport::rows_for(Method method) const {
  std::vector<LodRow> out;
  for (const auto& r : rows) {
    if (r.method == method) out.push_back(r);
  }
  return out;
}

void LodParams::validate() const {
  if (levels < 1) throw InvalidArgumentError("LoD sweep needs at least 1 level");
  if (methods.empty()) throw InvalidArgumentError("LoD sweep needs at least one method");
  if (!(m2m_cell > 0.0) || !(m3c2_factor > 0.0) || !(cylinder_height > 0.0) ||
      !(icp_normal_factor > 0.0)) {
    throw InvalidArgumentError("LoD sweep parameters must be positive");
  }
}

LodReport lod_sweep(const PointCloud& cloud, const LodParams& params) {
  params.validate();
  const HalfSplit halves = split_half(cloud, derive_seed(params.seed, 1));

  LodReport report;
  report.methods = params.methods;
  report.initial_spacing = 0.5 * (data_spacing(halves.reference) + data_spacing(halves.query));
  report.step = 2.0 * report.initial_spacing;

  for (int level = 0; level <= params.levels; ++level) {
    const double voxel = level == 0 ? 0.0 : report.step * level;
    PointCloud ref = halves.reference;
    PointCloud qry = halves.query;
    if (level > 0) {
      const auto k = static_cast<std::uint64_t>(level);
      ref = random_in_voxel(halves.reference, voxel, derive_seed(params.seed, 100 + 2 * k));
      qry = random_in_voxel(halves.query, voxel, derive_seed(params.seed, 101 + 2 * k));
    }
    double spacing = std::numeric_limits<double>::quiet_NaN();
    try {
      spacing = 0.5 * (data_spacing(ref) + data_spacing(qry));
    } catch (const Error&) {
    }

    for (Method method : params.methods) {
      LodRow row;
      row.level = level;
      row.voxel_size = voxel;
      row.spacing = spacing;
      row.method = method;
      row.mae = std::numeric_limits<double>::quiet_NaN();
      try {
        switch (method) {
          case Method::C2M: {
            const auto d = c2m(qry, ref);
            row.mae = mae(d);
            row.count = d.valid_count();
            break;
          }
          case Method::M2M: {
            const auto d = m2m(ref, qry, params.m2m_cell);
            row.mae = mae(d);
            row.count = d.valid_count();
            break;
          }
          case Method::M3C2: {
            if (!std::isfinite(spacing)) throw DegenerateInputError("no spacing for adaptive M3C2");
            M3C2Params p;
            p.normal_diameter = params.m3c2_factor * spacing;
            p.projection_diameter = params.m3c2_factor * spacing;
            p.cylinder_height = params.cylinder_height;
            const auto d = m3c2(ref, qry, p);
            row.mae = mae(d);
            row.count = d.valid_count();
            break;
          }
          case Method::ICP: {
            IcpDeformParams p;
            p.normal_radius_factor = params.icp_normal_factor;
            const auto d = icp_deform(ref, qry, p);
            row.mae = mae(d);
            row.count = d.valid_count();
            break;
          }
        }
      } catch (const Error&) {
        row.mae = std::numeric_limits<double>::quiet_NaN();
        row.count = 0;
      }
      report.rows.push_back(row);
    }
  }
  return report;
}

std::string lod_to_csv(const LodReport& report) {
  std::ostringstream out;
  out << "level,voxel_size_m,spacing_m,method,mae_mm,count\n";
  auto num = [](double v, int decimals) { return std::isfinite(v) ? format_fixed(v, decimals) : std::string("nan"); };
  for (const auto& r : report.rows) {
    out << r.level << ',' << num(r.voxel_size, 6) << ',' << num(r.spacing, 6) << ',' << to_string(r.method) << ','
        << num(r.mae * 1000.0, 6) << ',' << r.count << '\n';
  }
  return out.str();
}

void write_lod_csv(const LodReport& report, const std::filesystem::path& path) {
  write_text_atomic(path, lod_to_csv(report));
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw InvalidArgumentError("spearman needs two equal-length sequences");
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace tlsdeform

#include "tlsdeform/synth.hpp"

#include "tlsdeform/error.hpp"
#include "tlsdeform/io.hpp"
#include "tlsdeform/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

namespace tlsdeform {

namespace {

constexpr std::uint64_t kGeometrySeed = 0x6a77e11u;

std::array<double, 4> bernstein(double t) {
  const double s = 1.0 - t;
  return {s * s * s, 3.0 * t * s * s, 3.0 * t * t * s, t * t * t};
}

// Quasi-grid with nodes i·spacing for i = 0..round(extent/spacing), jittered from a fixed seed
// and clamped to the rectangle.
std::vector<std::array<double, 2>> quasi_grid(double width, double height, double spacing, double jitter) {
  const auto nx = static_cast<std::size_t>(std::llround(width / spacing)) + 1;
  const auto nz = static_cast<std::size_t>(std::llround(height / spacing)) + 1;
  std::mt19937_64 rng(derive_seed(kGeometrySeed, 0));
  std::uniform_real_distribution<double> uni(-jitter * spacing, jitter * spacing);
  std::vector<std::array<double, 2>> out;
  out.reserve(nx * nz);
  for (std::size_t iz = 0; iz < nz; ++iz) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      double x = static_cast<double>(ix) * spacing;
      double z = static_cast<double>(iz) * spacing;
      if (jitter > 0.0) {
        x = std::clamp(x + uni(rng), 0.0, width);
        z = std::clamp(z + uni(rng), 0.0, height);
      }
      out.push_back({x, z});
    }
  }
  return out;
}

double to_double(const std::string& value, const std::string& key, const std::string& source, std::size_t line) {
  try {
    return parse_number(value, source, line);
  } catch (const ParseError&) {
    throw ParseError(source, line, "key '" + key + "': invalid number '" + value + "'");
  }
}

std::vector<double> to_list(const std::string& value, const std::string& key, const std::string& source,
                            std::size_t line) {
  std::vector<double> out;
  std::string_view rest(value);
  while (true) {
    const auto comma = rest.find(',');
    std::string field(rest.substr(0, comma));
    field.erase(0, field.find_first_not_of(" \t"));
    field.erase(field.find_last_not_of(" \t") + 1);
    out.push_back(to_double(field, key, source, line));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return out;
}

class KeyReader {
 public:
  KeyReader(std::string_view text, std::string source) : source_(std::move(source)) {
    kv_ = parse_key_values(text, source_, &lines_);
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }
  std::string text(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }
  double number(const std::string& key, double fallback) {
    used_.insert(key);
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : to_double(it->second, key, source_, line_of(key));
  }
  std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
    const double v = number(key, static_cast<double>(fallback));
    if (!(v >= 0.0) || v != std::floor(v)) throw ParseError(source_, line_of(key), "key '" + key + "' must be a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }
  std::vector<double> list(const std::string& key, std::size_t expected) {
    used_.insert(key);
    auto v = to_list(kv_.at(key), key, source_, line_of(key));
    if (v.size() != expected) {
      throw ParseError(source_, line_of(key), "key '" + key + "' needs " + std::to_string(expected) + " values");
    }
    return v;
  }
  void reject_unknown() const {
    for (const auto& [k, v] : kv_) {
      if (!used_.count(k)) throw ParseError(source_, line_of(k), "unknown key '" + k + "'");
    }
  }

 private:
  std::size_t line_of(const std::string& key) const {
    const auto it = lines_.find(key);
    return it == lines_.end() ? 0 : it->second;
  }

  std::map<std::string, std::string> kv_;
  std::map<std::string, std::size_t> lines_;
  std::string source_;
  std::set<std::string> used_;
};

}  // namespace

void WallSpec::validate() const {
  if (!(length > 0.0) || !(height > 0.0) || !(spacing > 0.0) || !(wavelength > 0.0)) {
    throw InvalidArgumentError("wall lengths must be positive");
  }
  if (!(amplitude >= 0.0) || !(noise >= 0.0)) throw InvalidArgumentError("wall amplitude and noise must be >= 0");
  if (!(jitter >= 0.0 && jitter < 0.5)) throw InvalidArgumentError("wall jitter must be in [0, 0.5)");
}

double WallSpec::surface_y(double x, double z) const {
  const double k = 2.0 * std::numbers::pi / wavelength;
  return amplitude * std::sin(k * x) * std::sin(k * z);
}

DeformationField::DeformationField(const FieldExtent& extent, const Controls& controls)
    : extent_(extent), controls_(controls) {
  if (!(extent.x1 > extent.x0) || !(extent.z1 > extent.z0)) throw InvalidArgumentError("field extent is empty");
  for (const auto& row : controls) {
    for (double c : row) {
      if (!std::isfinite(c)) throw InvariantError("field control is not finite");
    }
  }
}

DeformationField DeformationField::constant(const FieldExtent& extent, double value) {
  Controls c;
  for (auto& row : c) row.fill(value);
  return {extent, c};
}

DeformationField DeformationField::ramp(const FieldExtent& extent, double value, double slope_x, double slope_z) {
  Controls c;
  const double wx = extent.x1 - extent.x0;
  const double wz = extent.z1 - extent.z0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) c[i][j] = value + slope_x * wx * i / 3.0 + slope_z * wz * j / 3.0;
  }
  return {extent, c};
}

DeformationField DeformationField::bowl(const FieldExtent& extent, double peak) {
  constexpr std::array<double, 4> w{0.0, 1.0, 1.0, 0.0};
  Controls c;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) c[i][j] = peak * w[i] * w[j];
  }
  return {extent, c};
}

double DeformationField::max_magnitude() const {
  double m = 0.0;
  for (const auto& row : controls_) {
    for (double c : row) m = std::max(m, std::abs(c));
  }
  return m;
}

DeformationField DeformationField::negated() const {
  Controls c = controls_;
  for (auto& row : c) {
    for (double& v : row) v = -v;
  }
  return {extent_, c};
}

double DeformationField::operator()(double x, double z) const {
  const double wx = extent_.x1 - extent_.x0;
  const double wz = extent_.z1 - extent_.z0;
  const double tol = 1e-9 * std::max(wx, wz);
  if (!(x >= extent_.x0 - tol && x <= extent_.x1 + tol && z >= extent_.z0 - tol && z <= extent_.z1 + tol)) {
    throw InvalidArgumentError("deformation field evaluated outside its extent");
  }
  const auto bu = bernstein(std::clamp((x - extent_.x0) / wx, 0.0, 1.0));
  const auto bv = bernstein(std::clamp((z - extent_.z0) / wz, 0.0, 1.0));
  double f = 0.0;
  for (int i = 0; i < 4; ++i) {
    double row = 0.0;
    for (int j = 0; j < 4; ++j) row += bv[j] * controls_[i][j];
    f += bu[i] * row;
  }
  return f;
}

PointCloud gen_wall(const WallSpec& spec) {
  spec.validate();
  const auto grid = quasi_grid(spec.length, spec.height, spec.spacing, spec.jitter);
  std::mt19937_64 rng(derive_seed(spec.seed, 2));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Point3> pts;
  pts.reserve(grid.size());
  for (const auto& [x, z] : grid) {
    const double noise = spec.noise > 0.0 ? spec.noise * gauss(rng) : 0.0;
    pts.emplace_back(x, spec.surface_y(x, z) + noise, z);
  }
  return PointCloud(std::move(pts), Frame::WallLocal, "synthetic wall");
}

PointCloud deform_wall(const PointCloud& cloud, const DeformationField& field) {
  if (cloud.frame() != Frame::WallLocal) throw InvalidArgumentError("deform_wall needs a wall-local cloud");
  std::vector<Point3> pts = cloud.points();
  for (auto& p : pts) p.y() += field(p.x(), p.z());
  return PointCloud(std::move(pts), cloud.frame(), cloud.label());
}

void FacadeSpec::validate() const {
  if (!(width > 0.0) || !(height > 0.0) || !(spacing > 0.0)) throw InvalidArgumentError("facade lengths must be positive");
  if (windows_x < 0 || windows_z < 0) throw InvalidArgumentError("window counts must be >= 0");
  if (!(recess >= 0.0) || !(noise >= 0.0)) throw InvalidArgumentError("facade recess and noise must be >= 0");
  if (!(jitter >= 0.0 && jitter < 0.5)) throw InvalidArgumentError("facade jitter must be in [0, 0.5)");
  if (windows_x > 0 && windows_z > 0) {
    if (!(window_width > 0.0 && window_width < width / windows_x) ||
        !(window_height > 0.0 && window_height < height / windows_z)) {
      throw InvalidArgumentError("windows do not fit in their bays");
    }
  }
}

double FacadeSpec::surface_y(double x, double z) const {
  if (windows_x == 0 || windows_z == 0 || recess == 0.0) return 0.0;
  const double bay_x = width / windows_x;
  const double bay_z = height / windows_z;
  const int i = std::clamp(static_cast<int>(x / bay_x), 0, windows_x - 1);
  const int j = std::clamp(static_cast<int>(z / bay_z), 0, windows_z - 1);
  const double cx = (i + 0.5) * bay_x;
  const double cz = (j + 0.5) * bay_z;
  const double inward = std::min(0.5 * window_width - std::abs(x - cx), 0.5 * window_height - std::abs(z - cz));
  return inward > 0.0 ? std::min(recess, inward) : 0.0;
}

PointCloud gen_facade(const FacadeSpec& spec) {
  spec.validate();
  const auto grid = quasi_grid(spec.width, spec.height, spec.spacing, spec.jitter);
  std::mt19937_64 rng(derive_seed(spec.seed, 3));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Point3> pts;
  pts.reserve(grid.size());
  for (const auto& [x, z] : grid) {
    const double noise = spec.noise > 0.0 ? spec.noise * gauss(rng) : 0.0;
    pts.emplace_back(x, spec.surface_y(x, z) + noise, z);
  }
  return PointCloud(std::move(pts), Frame::Site, "synthetic facade");
}

std::map<std::string, std::string> parse_key_values(std::string_view text, const std::string& source,
                                                    std::map<std::string, std::size_t>* lines) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ParseError(source, line_no, "expected 'key = value'");
    if (!out.emplace(key, value).second) throw ParseError(source, line_no, "duplicate key '" + key + "'");
    if (lines) (*lines)[key] = line_no;
  }
  return out;
}

SceneSpec parse_scene(std::string_view text, const std::string& source) {
  KeyReader r(text, source);
  SceneSpec spec;
  const std::string kind = r.text("kind", "wall");
  const std::uint64_t seed = r.integer("seed", 0);
  spec.query_seed = r.integer("query_seed", seed + 1);

  if (kind == "wall") {
    spec.kind = SceneSpec::Kind::Wall;
    WallSpec& w = spec.wall;
    w.length = r.number("length_m", w.length);
    w.height = r.number("height_m", w.height);
    w.spacing = r.number("spacing_m", w.spacing);
    w.amplitude = r.number("amplitude_m", w.amplitude);
    w.wavelength = r.number("wavelength_m", w.wavelength);
    w.noise = r.number("noise_m", w.noise);
    w.jitter = r.number("jitter", w.jitter);
    w.seed = seed;
    const FieldExtent extent{0.0, w.length, 0.0, w.height};
    const std::string field = r.text("field", "none");
    if (field == "constant") {
      spec.field = DeformationField::constant(extent, r.number("field_mm", 0.0) / 1000.0);
    } else if (field == "ramp") {
      spec.field = DeformationField::ramp(extent, r.number("field_mm", 0.0) / 1000.0,
                                          r.number("field_slope_x_mm_per_m", 0.0) / 1000.0,
                                          r.number("field_slope_z_mm_per_m", 0.0) / 1000.0);
    } else if (field == "bowl") {
      spec.field = DeformationField::bowl(extent, r.number("field_mm", 0.0) / 1000.0);
    } else if (field == "controls") {
      if (!r.has("field_controls_mm")) throw ParseError(source, 0, "field = controls needs field_controls_mm");
      const auto v = r.list("field_controls_mm", 16);
      DeformationField::Controls c;
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) c[i][j] = v[static_cast<std::size_t>(4 * i + j)] / 1000.0;
      }
      spec.field = DeformationField(extent, c);
    } else if (field != "none") {
      throw ParseError(source, 0, "unknown field '" + field + "'");
    }
    w.validate();
  } else if (kind == "facade") {
    spec.kind = SceneSpec::Kind::Facade;
    FacadeSpec& f = spec.facade;
    f.width = r.number("width_m", f.width);
    f.height = r.number("height_m", f.height);
    f.spacing = r.number("spacing_m", f.spacing);
    f.windows_x = static_cast<int>(r.integer("windows_x", static_cast<std::uint64_t>(f.windows_x)));
    f.windows_z = static_cast<int>(r.integer("windows_z", static_cast<std::uint64_t>(f.windows_z)));
    f.window_width = r.number("window_width_m", f.window_width);
    f.window_height = r.number("window_height_m", f.window_height);
    f.recess = r.number("recess_m", f.recess);
    f.noise = r.number("noise_m", f.noise);
    f.jitter = r.number("jitter", f.jitter);
    f.seed = seed;
    Vector3 axis = Vector3::UnitZ();
    Vector3 translation = Vector3::Zero();
    if (r.has("rotation_axis")) {
      const auto v = r.list("rotation_axis", 3);
      axis = Vector3(v[0], v[1], v[2]);
    }
    if (r.has("translation_m")) {
      const auto v = r.list("translation_m", 3);
      translation = Vector3(v[0], v[1], v[2]);
    }
    const double angle = r.number("rotation_deg", 0.0) * std::numbers::pi / 180.0;
    try {
      spec.query_motion = RigidTransform::from_axis_angle(axis, angle, translation);
    } catch (const Error& e) {
      throw ParseError(source, 0, e.what());
    }
    f.validate();
  } else {
    throw ParseError(source, 0, "unknown scene kind '" + kind + "'");
  }
  r.reject_unknown();
  return spec;
}

SceneSpec read_scene(const std::filesystem::path& path) { return parse_scene(read_text(path), path.string()); }

Scene generate_scene(const SceneSpec& spec) {
  Scene scene;
  if (spec.kind == SceneSpec::Kind::Wall) {
    scene.reference = gen_wall(spec.wall);
    WallSpec q = spec.wall;
    q.seed = spec.query_seed;
    scene.query = gen_wall(q);
    if (spec.field) scene.query = deform_wall(scene.query, *spec.field);
  } else {
    scene.reference = gen_facade(spec.facade);
    FacadeSpec q = spec.facade;
    q.seed = spec.query_seed;
    scene.query = apply_transform(gen_facade(q), spec.query_motion);
  }
  return scene;
}

std::string field_to_text(const DeformationField& field) {
  std::ostringstream out;
  const FieldExtent& e = field.extent();
  out << "x0_m = " << format_double(e.x0) << "\nx1_m = " << format_double(e.x1) << "\nz0_m = " << format_double(e.z0)
      << "\nz1_m = " << format_double(e.z1) << "\n";
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) out << "c" << i << j << "_m = " << format_double(field.controls()[i][j]) << "\n";
  }
  return out.str();
}

DeformationField parse_field(std::string_view text, const std::string& source) {
  KeyReader r(text, source);
  for (const char* key : {"x0_m", "x1_m", "z0_m", "z1_m"}) {
    if (!r.has(key)) throw ParseError(source, 0, std::string("missing key '") + key + "'");
  }
  FieldExtent e{r.number("x0_m", 0.0), r.number("x1_m", 1.0), r.number("z0_m", 0.0), r.number("z1_m", 1.0)};
  DeformationField::Controls c;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const std::string key = "c" + std::to_string(i) + std::to_string(j) + "_m";
      if (!r.has(key)) throw ParseError(source, 0, "missing key '" + key + "'");
      c[i][j] = r.number(key, 0.0);
    }
  }
  r.reject_unknown();
  return {e, c};
}

}  // namespace tlsdeform

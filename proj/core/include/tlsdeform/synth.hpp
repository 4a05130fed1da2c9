#pragma once

#include "tlsdeform/cloud.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace tlsdeform {

/// Wavy wall in wall-local coordinates: x ∈ [0, length], z ∈ [0, height], face near y = 0.
struct WallSpec {
  double length = 4.0;
  double height = 2.0;
  double spacing = 0.005;
  double amplitude = 0.030;
  double wavelength = 0.3;
  double noise = 0.0015;
  /// Grid jitter as a fraction of the spacing. The jitter pattern does not depend on `seed`.
  double jitter = 0.25;
  std::uint64_t seed = 0;

  void validate() const;
  double surface_y(double x, double z) const;
};

struct FieldExtent {
  double x0 = 0.0;
  double x1 = 1.0;
  double z0 = 0.0;
  double z1 = 1.0;
};

/// Smooth y displacement f(x, z), a bicubic Bézier patch over a rectangle. Control (i, j)
/// sits at x fraction i/3 and z fraction j/3.
class DeformationField {
 public:
  using Controls = std::array<std::array<double, 4>, 4>;

  DeformationField(const FieldExtent& extent, const Controls& controls);

  static DeformationField constant(const FieldExtent& extent, double value);
  /// f = value + slope_x·(x − x0) + slope_z·(z − z0).
  static DeformationField ramp(const FieldExtent& extent, double value, double slope_x, double slope_z);
  /// Zero on the boundary, most negative (0.5625·peak) in the middle for peak < 0.
  static DeformationField bowl(const FieldExtent& extent, double peak);

  const FieldExtent& extent() const noexcept { return extent_; }
  const Controls& controls() const noexcept { return controls_; }
  /// Bound on |f| over the extent (largest control magnitude).
  double max_magnitude() const;
  DeformationField negated() const;

  /// Throws InvalidArgumentError outside the extent.
  double operator()(double x, double z) const;

 private:
  FieldExtent extent_;
  Controls controls_;
};

PointCloud gen_wall(const WallSpec& spec);

/// Shifts y of every point by f(x, z). The cloud must be in the wall-local frame.
PointCloud deform_wall(const PointCloud& cloud, const DeformationField& field);

/// Building façade: plane y = 0 with a grid of rectangular window recesses of depth `recess`
/// pushed toward +y, with 45° reveals.
struct FacadeSpec {
  double width = 6.0;
  double height = 4.0;
  double spacing = 0.02;
  int windows_x = 3;
  int windows_z = 3;
  double window_width = 0.8;
  double window_height = 1.0;
  double recess = 0.10;
  double noise = 0.0;
  double jitter = 0.25;
  std::uint64_t seed = 0;

  void validate() const;
  double surface_y(double x, double z) const;
};

PointCloud gen_facade(const FacadeSpec& spec);

/// Scene description read from `key = value` text.
struct SceneSpec {
  enum class Kind { Wall, Facade };
  Kind kind = Kind::Wall;
  WallSpec wall;
  FacadeSpec facade;
  std::optional<DeformationField> field;  // wall scenes: deformation of the query epoch
  RigidTransform query_motion;            // facade scenes: displacement of the query epoch
  std::uint64_t query_seed = 1;
};

/// `key = value` lines; `#` starts a comment. Throws ParseError on malformed lines or duplicates.
/// When `lines` is given it receives the line number of every key.
std::map<std::string, std::string> parse_key_values(std::string_view text, const std::string& source,
                                                    std::map<std::string, std::size_t>* lines = nullptr);

SceneSpec parse_scene(std::string_view text, const std::string& source = "<scene>");
SceneSpec read_scene(const std::filesystem::path& path);

/// Reference and query epochs generated from a scene.
struct Scene {
  PointCloud reference;
  PointCloud query;
};
Scene generate_scene(const SceneSpec& spec);

/// Ground-truth field as `key = value` text (extent plus 16 controls in metres).
std::string field_to_text(const DeformationField& field);
DeformationField parse_field(std::string_view text, const std::string& source = "<field>");

}  // namespace tlsdeform

#include "support.hpp"

#include <tlsdeform/error.hpp>
#include <tlsdeform/io.hpp>

#include <cmath>

namespace tlsdeform::cli {

std::vector<double> parse_vector(const std::string& text, std::size_t n, const std::string& what) {
  std::vector<double> out;
  std::string_view rest(text);
  while (true) {
    const auto comma = rest.find(',');
    std::string field(rest.substr(0, comma));
    field.erase(0, field.find_first_not_of(" \t"));
    field.erase(field.find_last_not_of(" \t") + 1);
    try {
      out.push_back(parse_number(field, what, 0));
    } catch (const ParseError&) {
      throw InvalidArgumentError(what + ": invalid number '" + field + "'");
    }
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  if (out.size() != n) throw InvalidArgumentError(what + ": expected " + std::to_string(n) + " comma-separated values");
  return out;
}

Json transform_to_json(const RigidTransform& t) {
  Json rot = Json::array();
  for (int i = 0; i < 3; ++i) rot.push_back({t.rotation()(i, 0), t.rotation()(i, 1), t.rotation()(i, 2)});
  return Json{{"rotation", rot},
              {"translation_m", {t.translation().x(), t.translation().y(), t.translation().z()}}};
}

RigidTransform transform_from_json(const Json& j, const std::string& source) {
  try {
    const Json& node = j.contains("transform") ? j.at("transform") : j;
    Matrix3 r;
    for (int i = 0; i < 3; ++i) {
      for (int k = 0; k < 3; ++k) r(i, k) = node.at("rotation").at(i).at(k).get<double>();
    }
    const auto& t = node.at("translation_m");
    return {r, Vector3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>())};
  } catch (const Json::exception& e) {
    throw ParseError(source, 0, std::string("malformed transform: ") + e.what());
  } catch (const InvariantError& e) {
    throw ParseError(source, 0, e.what());
  }
}

RigidTransform read_transform(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string(), 0, std::string("invalid JSON: ") + e.what());
  }
  return transform_from_json(j, path.string());
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

Json registration_to_json(const RegistrationResult& r) {
  Json j;
  j["transform"] = transform_to_json(r.transform);
  j["rotation_angle_rad"] = r.transform.angle();
  j["rmse_m"] = r.rmse;
  j["iterations"] = r.iterations;
  j["inlier_fraction"] = r.inlier_fraction;
  j["converged"] = r.converged;
  j["rank"] = r.rank;
  return j;
}

std::vector<PointPair> read_target_pairs(const std::filesystem::path& path) {
  const NumericCsv table = read_numeric_csv(path, "ref_x,ref_y,ref_z,qry_x,qry_y,qry_z");
  std::vector<PointPair> pairs;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    const auto& v = table.rows[k];
    for (double x : v) {
      if (!std::isfinite(x)) throw ParseError(path.string(), table.lines[k], "non-finite coordinate");
    }
    pairs.emplace_back(Point3(v[0], v[1], v[2]), Point3(v[3], v[4], v[5]));
  }
  return pairs;
}

WallFrame resolve_frame(const std::string& mode, const PointCloud& reference, const std::string& pit_direction) {
  if (mode == "identity") return WallFrame();
  if (mode == "fit") {
    const auto d = parse_vector(pit_direction, 3, "--pit-direction");
    return WallFrame::fit(reference, Vector3(d[0], d[1], d[2]));
  }
  throw InvalidArgumentError("--frame must be 'identity' or 'fit'");
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
}

}  // namespace tlsdeform::cli

#pragma once

#include <tlsdeform/cloud.hpp>
#include <tlsdeform/registration.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace tlsdeform::cli {

using Json = nlohmann::ordered_json;

/// "a,b,c" into exactly `n` numbers; throws InvalidArgumentError naming `what`.
std::vector<double> parse_vector(const std::string& text, std::size_t n, const std::string& what);

Json transform_to_json(const RigidTransform& t);
RigidTransform transform_from_json(const Json& j, const std::string& source);
RigidTransform read_transform(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

Json registration_to_json(const RegistrationResult& r);

/// Target pairs CSV `ref_x,ref_y,ref_z,qry_x,qry_y,qry_z`.
std::vector<PointPair> read_target_pairs(const std::filesystem::path& path);

/// Wall frame from "identity" or "fit" (fitted to `reference` with the pit direction hint).
WallFrame resolve_frame(const std::string& mode, const PointCloud& reference, const std::string& pit_direction);

/// Prepares an output directory, creating it when missing.
void ensure_dir(const std::filesystem::path& dir);

}  // namespace tlsdeform::cli

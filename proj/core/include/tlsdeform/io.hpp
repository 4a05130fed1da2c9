#pragma once

#include "tlsdeform/cloud.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tlsdeform {

enum class CloudFormat { XyzAscii, PlyAscii };

/// Format implied by the file extension (".xyz"/".txt" or ".ply").
CloudFormat format_from_path(const std::filesystem::path& path);

/// xyz-ascii: one point per line, three whitespace-separated decimals, `#` lines ignored.
PointCloud parse_xyz(std::istream& in, const std::string& source = "<stream>", Frame frame = Frame::Site);
/// ply-ascii: header with an `element vertex` carrying x, y, z scalar properties.
PointCloud parse_ply(std::istream& in, const std::string& source = "<stream>", Frame frame = Frame::Site);

PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format, Frame frame = Frame::Site);
PointCloud read_cloud(const std::filesystem::path& path, Frame frame = Frame::Site);

void format_xyz(std::ostream& out, const PointCloud& cloud);
void format_ply(std::ostream& out, const PointCloud& cloud);

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format);
void write_cloud(const PointCloud& cloud, const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
/// Fixed-point text with `decimals` digits after the point.
std::string format_fixed(double value, int decimals);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

/// Whole file as a string; throws tlsdeform::Error when unreadable.
std::string read_text(const std::filesystem::path& path);

/// Parses a decimal number; "nan" is accepted. Throws ParseError naming `source` and `line`.
double parse_number(std::string_view token, const std::string& source, std::size_t line);

/// Comma-separated numeric table with a fixed header line. `#` comments and blank lines skipped.
struct NumericCsv {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> lines;  // 1-based source line of each row
};
NumericCsv read_numeric_csv(const std::filesystem::path& path, std::string_view header);

}  // namespace tlsdeform

#include "tlsdeform/io.hpp"

#include "tlsdeform/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace tlsdeform {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

Point3 checked_point(const std::array<double, 3>& v, const std::string& source, std::size_t line,
                     std::size_t index) {
  for (double c : v) {
    if (!std::isfinite(c)) {
      throw ParseError(source, line, "non-finite coordinate in point " + std::to_string(index));
    }
  }
  return {v[0], v[1], v[2]};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

CloudFormat format_from_path(const std::filesystem::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".ply") return CloudFormat::PlyAscii;
  if (ext == ".xyz" || ext == ".txt" || ext == ".asc") return CloudFormat::XyzAscii;
  throw InvalidArgumentError("cannot infer point cloud format from '" + path.string() + "'");
}

PointCloud parse_xyz(std::istream& in, const std::string& source, Frame frame) {
  std::vector<Point3> points;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = split_ws(body);
    if (fields.size() != 3) {
      throw ParseError(source, line_no, "expected 3 fields, found " + std::to_string(fields.size()));
    }
    std::array<double, 3> v{};
    for (std::size_t k = 0; k < 3; ++k) v[k] = parse_number(fields[k], source, line_no);
    points.push_back(checked_point(v, source, line_no, points.size()));
  }
  return PointCloud(std::move(points), frame, source);
}

PointCloud parse_ply(std::istream& in, const std::string& source, Frame frame) {
  struct Element {
    std::string name;
    std::size_t count = 0;
    std::vector<std::string> properties;
  };

  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  if (!next_line() || trim(line) != "ply") throw ParseError(source, 1, "missing 'ply' magic");
  std::vector<Element> elements;
  bool ascii = false;
  bool header_done = false;
  while (next_line()) {
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") {
      header_done = true;
      break;
    }
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") throw ParseError(source, line_no, "only ascii PLY is supported");
      ascii = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError(source, line_no, "malformed element line");
      Element e;
      e.name = std::string(tok[1]);
      e.count = static_cast<std::size_t>(parse_number(tok[2], source, line_no));
      elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError(source, line_no, "property before any element");
      if (tok.size() >= 2 && tok[1] == "list") {
        if (elements.back().name == "vertex") throw ParseError(source, line_no, "list property on vertex");
        elements.back().properties.emplace_back("<list>");
      } else if (tok.size() == 3) {
        elements.back().properties.emplace_back(tok[2]);
      } else {
        throw ParseError(source, line_no, "malformed property line");
      }
    } else {
      throw ParseError(source, line_no, "unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!header_done) throw ParseError(source, line_no, "unterminated PLY header");
  if (!ascii) throw ParseError(source, line_no, "missing format line");

  std::vector<Point3> points;
  bool have_vertex = false;
  for (const auto& e : elements) {
    if (e.name != "vertex") {
      for (std::size_t i = 0; i < e.count; ++i) {
        if (!next_line()) throw ParseError(source, line_no, "truncated element '" + e.name + "'");
      }
      continue;
    }
    have_vertex = true;
    std::array<int, 3> col{-1, -1, -1};
    for (std::size_t k = 0; k < e.properties.size(); ++k) {
      if (e.properties[k] == "x") col[0] = static_cast<int>(k);
      if (e.properties[k] == "y") col[1] = static_cast<int>(k);
      if (e.properties[k] == "z") col[2] = static_cast<int>(k);
    }
    if (std::ranges::any_of(col, [](int c) { return c < 0; })) {
      throw ParseError(source, line_no, "vertex element lacks x, y, z properties");
    }
    points.reserve(e.count);
    for (std::size_t i = 0; i < e.count; ++i) {
      if (!next_line()) throw ParseError(source, line_no, "expected " + std::to_string(e.count) + " vertices");
      const auto fields = split_ws(line);
      if (fields.size() != e.properties.size()) {
        throw ParseError(source, line_no, "expected " + std::to_string(e.properties.size()) + " values");
      }
      std::array<double, 3> v{};
      for (std::size_t k = 0; k < 3; ++k) v[k] = parse_number(fields[static_cast<std::size_t>(col[k])], source, line_no);
      points.push_back(checked_point(v, source, line_no, points.size()));
    }
  }
  if (!have_vertex) throw ParseError(source, line_no, "no vertex element");
  return PointCloud(std::move(points), frame, source);
}

PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format, Frame frame) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return format == CloudFormat::PlyAscii ? parse_ply(in, path.string(), frame) : parse_xyz(in, path.string(), frame);
}

PointCloud read_cloud(const std::filesystem::path& path, Frame frame) {
  return read_cloud(path, format_from_path(path), frame);
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw Error("number formatting failed");
  return std::string(buf.data(), ptr);
}

std::string format_fixed(double value, int decimals) {
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
  std::array<char, 64> buf{};
  const auto [ptr, ec] =
      std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed, decimals);
  if (ec != std::errc{}) throw Error("number formatting failed");
  std::string s(buf.data(), ptr);
  // Normalise negative zero.
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

void format_xyz(std::ostream& out, const PointCloud& cloud) {
  for (const auto& p : cloud) {
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
  }
}

void format_ply(std::ostream& out, const PointCloud& cloud) {
  out << "ply\nformat ascii 1.0\n";
  if (!cloud.label().empty()) out << "comment " << cloud.label() << '\n';
  out << "element vertex " << cloud.size() << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  format_xyz(out, cloud);
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
  std::ostringstream out;
  if (format == CloudFormat::PlyAscii) {
    format_ply(out, cloud);
  } else {
    format_xyz(out, cloud);
  }
  write_text_atomic(path, out.str());
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  write_cloud(cloud, path, format_from_path(path));
}

void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot move output into place at '" + path.string() + "': " + ec.message());
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double parse_number(std::string_view token, const std::string& source, std::size_t line) {
  if (token == "nan" || token == "NaN") return std::numeric_limits<double>::quiet_NaN();
  // from_chars does not accept a leading '+'.
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ParseError(source, line, "invalid number '" + std::string(token) + "'");
  }
  return value;
}

NumericCsv read_numeric_csv(const std::filesystem::path& path, std::string_view header) {
  const std::string text = read_text(path);
  const std::string source = path.string();
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  std::size_t width = 1 + static_cast<std::size_t>(std::count(header.begin(), header.end(), ','));
  NumericCsv table;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!seen_header) {
      if (line != header) throw ParseError(source, line_no, "expected header '" + std::string(header) + "'");
      seen_header = true;
      continue;
    }
    std::vector<double> row;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      std::string_view field = rest.substr(0, comma);
      while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
      while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
      row.push_back(parse_number(field, source, line_no));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (row.size() != width) {
      throw ParseError(source, line_no, "expected " + std::to_string(width) + " fields, got " + std::to_string(row.size()));
    }
    table.rows.push_back(std::move(row));
    table.lines.push_back(line_no);
  }
  if (!seen_header) throw ParseError(source, 0, "missing header '" + std::string(header) + "'");
  return table;
}

}  // namespace tlsdeform

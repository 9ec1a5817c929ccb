#pragma once

// CSV and JSON helpers shared by the CLI and tests.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctrkit/error.hpp"
#include "ctrkit/kinematics.hpp"
#include "ctrkit/tube_shape.hpp"

namespace ctrkit::io {

using nlohmann::json;

/// Round-trip-exact decimal form of a double.
inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::Parse, where + ": not a number: '" + s + "'");
  }
}

inline bool is_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

/// Numeric table with a mandatory header row. Blank lines are skipped.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline Table read_csv(const std::filesystem::path& path, std::size_t min_columns) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = cells;
      if (t.header.size() < min_columns)
        throw Error(ErrorCode::Parse, path.string() + ": header needs " +
                                          std::to_string(min_columns) + " columns");
      if (std::all_of(t.header.begin(), t.header.end(), is_number))
        throw Error(ErrorCode::Parse, path.string() + ": header row required");
      continue;
    }
    if (cells.size() < min_columns)
      throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) +
                                        ": expected " + std::to_string(min_columns) + " columns");
    std::vector<double> row;
    for (std::size_t c = 0; c < min_columns; ++c)
      row.push_back(parse_double(cells[c], path.string() + ":" + std::to_string(lineno)));
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) throw Error(ErrorCode::Parse, path.string() + ": empty file");
  return t;
}

/// Two-column centerline CSV (x_mm, y_mm).
inline CenterlineSamples read_centerline_csv(const std::filesystem::path& path) {
  const Table t = read_csv(path, 2);
  std::vector<Point2> pts;
  for (const auto& r : t.rows) pts.push_back({r[0], r[1]});
  return CenterlineSamples(std::move(pts));
}

/// Three-column point CSV (x, y, z in mm).
inline std::vector<Vec3> read_points_csv(const std::filesystem::path& path) {
  const Table t = read_csv(path, 3);
  std::vector<Vec3> pts;
  for (const auto& r : t.rows) pts.emplace_back(r[0], r[1], r[2]);
  return pts;
}

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3)
    throw Error(ErrorCode::Parse, "expected a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json to_json(const Transform& t) {
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) row.push_back(t.matrix()(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Transform transform_from_json(const json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::Parse, "expected a 4x4 matrix");
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    if (!j[r].is_array() || j[r].size() != 4)
      throw Error(ErrorCode::Parse, "expected a 4x4 matrix");
    for (int c = 0; c < 4; ++c) m(r, c) = j[r][c].get<double>();
  }
  return Transform(m);
}

inline json to_json(const JointConfig& q) {
  return {{"d_mm", q.d}, {"s_mm", q.s}, {"theta_rad", q.theta}};
}

inline JointConfig joint_config_from_json(const json& j) {
  return {j.at("d_mm").get<double>(), j.at("s_mm").get<double>(),
          j.at("theta_rad").get<double>()};
}

inline json to_json(const PlanarShape& s) {
  return {{"coefficients", s.coefficients()},
          {"x_max_total", s.x_max_total()},
          {"arc_total", s.arc_total()}};
}

inline PlanarShape shape_from_json(const json& j) {
  try {
    return PlanarShape(j.at("coefficients").get<std::vector<double>>(),
                       j.at("x_max_total").get<double>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("shape JSON: ") + e.what());
  }
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

/// CSV writer with exact numeric formatting.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header) {
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }
  template <class... T>
  void row(const T&... cells) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(cells), first = false), ...);
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I v) { return std::to_string(v); }
  std::ostringstream os_;
};

}  // namespace ctrkit::io

#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "textspot/densemaps.hpp"
#include "textspot/eval.hpp"
#include "textspot/geometry.hpp"
#include "textspot/io_error.hpp"

namespace textspot {

// Per-image "x1,y1,x2,y2,x3,y3,x4,y4,transcription" lines, the exchange
// format public benchmark scorers consume. Non-quad polygons are exported
// through their enclosing box; "###" marks dont_care.
inline std::string icdar_lines(const std::vector<GtInstance>& instances) {
  std::string out;
  char buf[32];
  for (const GtInstance& inst : instances) {
    std::array<Point, 4> quad;
    if (const auto* poly = std::get_if<Polygon>(&inst.shape); poly && poly->size() == 4) {
      const auto& v = poly->vertices();
      quad = {v[0], v[1], v[2], v[3]};
    } else {
      quad = enclosing_box(inst.shape).corners();
    }
    for (const Point& p : quad) {
      std::snprintf(buf, sizeof(buf), "%ld,%ld,", std::lround(p.x), std::lround(p.y));
      out += buf;
    }
    out += inst.dont_care ? "###" : inst.transcript;
    out += '\n';
  }
  return out;
}

inline void write_icdar(const std::filesystem::path& path,
                        const std::vector<GtInstance>& instances) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::MissingFile, "cannot open for writing: " + path.string());
  out << icdar_lines(instances);
}

inline std::vector<GtInstance> parse_icdar(const std::string& text, const std::string& where) {
  std::vector<GtInstance> out;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> coords;
    size_t pos = 0;
    for (int i = 0; i < 8; ++i) {
      size_t comma = line.find(',', pos);
      if (comma == std::string::npos) {
        throw IoError(IoError::Kind::Schema,
                      where + ":" + std::to_string(lineno) + ": expected 8 coordinates");
      }
      try {
        coords.push_back(std::stod(line.substr(pos, comma - pos)));
      } catch (const std::exception&) {
        throw IoError(IoError::Kind::Schema,
                      where + ":" + std::to_string(lineno) + ": bad coordinate");
      }
      pos = comma + 1;
    }
    std::string transcript = line.substr(pos);
    GtInstance inst;
    inst.shape = Polygon({{coords[0], coords[1]},
                          {coords[2], coords[3]},
                          {coords[4], coords[5]},
                          {coords[6], coords[7]}});
    inst.dont_care = (transcript == "###");
    inst.transcript = transcript;
    out.push_back(std::move(inst));
  }
  return out;
}

inline std::vector<GtInstance> read_icdar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::MissingFile, "cannot open: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_icdar(ss.str(), path.string());
}

}  // namespace textspot

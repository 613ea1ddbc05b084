#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "textspot/charset.hpp"
#include "textspot/densemaps.hpp"
#include "textspot/geometry.hpp"
#include "textspot/postprocess.hpp"

namespace textspot {

// Overlay figure: word outlines in blue, character boxes in red with their
// labels. Pure geometry, no raster background.
inline std::string render_svg(int width, int height, const std::vector<ScoredBox>& words,
                              const std::vector<CharDetection>& chars, const Charset& charset) {
  std::string svg;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\">\n",
                width, height, width, height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  auto poly_points = [&](const RotatedBox& b) {
    std::string pts;
    for (const Point& p : b.corners()) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", p.x, p.y);
      pts += buf;
    }
    if (!pts.empty()) pts.pop_back();
    return pts;
  };
  for (const ScoredBox& w : words) {
    std::snprintf(buf, sizeof(buf),
                  "<polygon points=\"%s\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n",
                  poly_points(w.box).c_str());
    svg += buf;
  }
  for (const CharDetection& c : chars) {
    std::snprintf(buf, sizeof(buf),
                  "<polygon points=\"%s\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\"/>\n",
                  poly_points(c.box).c_str());
    svg += buf;
    char sym = charset.symbol_of(c.label);
    std::string escaped(1, sym);
    if (sym == '<') escaped = "&lt;";
    else if (sym == '>') escaped = "&gt;";
    else if (sym == '&') escaped = "&amp;";
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.2f\" y=\"%.2f\" font-size=\"%.1f\" fill=\"#d62728\" "
                  "text-anchor=\"middle\">%s</text>\n",
                  c.box.center.x, c.box.center.y + c.box.height * 0.2, c.box.height * 0.6,
                  escaped.c_str());
    svg += buf;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace textspot

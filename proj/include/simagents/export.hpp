#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

#include "simagents/report.hpp"
#include "simagents/rollout.hpp"

namespace simagents {

/// frame,cx,cy,heading,vx,vy
inline std::string track_to_csv(const AgentTrack& track) {
  std::string out = "frame,cx,cy,heading,vx,vy\n";
  for (std::size_t t = 0; t < track.frames.size(); ++t) {
    const auto& f = track.frames[t];
    out += std::to_string(t) + "," + format_double(f.cx) + "," + format_double(f.cy) + "," + format_double(f.heading) +
           "," + format_double(f.vx) + "," + format_double(f.vy) + "\n";
  }
  return out;
}

/// Keeps [A-Za-z0-9._-]; anything else becomes '_'.
inline std::string sanitize_filename(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')) c = '_';
  return out.empty() ? "_" : out;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct SvgOptions {
  double pixels_per_meter = 8.0;
  double margin_m = 5.0;
  std::size_t box_every = 20;  // draw boxes at frames 0, 20, 40, ... and the last frame
};

/// Static overlay of every agent's path with its oriented box at selected frames.
inline std::string rollout_to_svg(const Rollout& r, const SvgOptions& opt = {}) {
  static constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  double xmin = std::numeric_limits<double>::infinity(), ymin = xmin;
  double xmax = -xmin, ymax = -xmin;
  for (const auto& t : r.agents)
    for (const auto& f : t.frames) {
      const double reach = std::hypot(f.dx, f.dy) / 2.0;
      xmin = std::min(xmin, f.cx - reach);
      xmax = std::max(xmax, f.cx + reach);
      ymin = std::min(ymin, f.cy - reach);
      ymax = std::max(ymax, f.cy + reach);
    }
  if (!std::isfinite(xmin)) xmin = ymin = xmax = ymax = 0.0;
  xmin -= opt.margin_m;
  ymin -= opt.margin_m;
  xmax += opt.margin_m;
  ymax += opt.margin_m;
  const double s = opt.pixels_per_meter;
  auto px = [&](double x) { return format_double(std::round((x - xmin) * s * 100.0) / 100.0); };
  auto py = [&](double y) { return format_double(std::round((ymax - y) * s * 100.0) / 100.0); };

  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(xmax) + "\" height=\"" + py(ymin) + "\">\n";
  svg += "<title>" + xml_escape(r.scenario_id + " " + r.variant_id + " [" + join_path(r.branch_path, ',') + "]") +
         "</title>\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t a = 0; a < r.agents.size(); ++a) {
    const auto& track = r.agents[a];
    const std::string color = kPalette[a % std::size(kPalette)];
    svg += "<g id=\"agent-" + xml_escape(track.id) + "\">\n<polyline fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t t = 0; t < track.frames.size(); ++t) {
      if (t) svg += " ";
      svg += px(track.frames[t].cx) + "," + py(track.frames[t].cy);
    }
    svg += "\"/>\n";
    for (std::size_t t = 0; t < track.frames.size(); ++t) {
      if (t % opt.box_every != 0 && t + 1 != track.frames.size()) continue;
      const auto& f = track.frames[t];
      const double c = std::cos(f.heading), sn = std::sin(f.heading);
      const double hl = f.dx / 2.0, hw = f.dy / 2.0;
      svg += "<polygon fill=\"" + color + "\" fill-opacity=\"0.25\" stroke=\"" + color + "\" points=\"";
      const double corners[4][2] = {{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}};
      for (int k = 0; k < 4; ++k) {
        if (k) svg += " ";
        const double x = f.cx + corners[k][0] * c - corners[k][1] * sn;
        const double y = f.cy + corners[k][0] * sn + corners[k][1] * c;
        svg += px(x) + "," + py(y);
      }
      svg += "\"/>\n";
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace simagents

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "simagents/json_io.hpp"
#include "simagents/scenario.hpp"

namespace simagents {

namespace detail {

inline std::vector<AgentFrame> frames_from_json(const json& v, const std::string& ctx) {
  if (!v.is_array()) throw ParseError(ctx + ": expected an array of frames");
  std::vector<AgentFrame> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto row = number_row<10>(v[i], ctx + " frame " + std::to_string(i));
    if (row[9] != 0.0 && row[9] != 1.0)
      throw ParseError(ctx + " frame " + std::to_string(i) + ": valid must be 0 or 1");
    out.push_back(AgentFrame::from_row(row));
  }
  return out;
}

inline json frames_to_json(const std::vector<AgentFrame>& frames) {
  json arr = json::array();
  for (const auto& f : frames) {
    auto row = f.to_row();
    json r = json::array();
    for (std::size_t i = 0; i < 9; ++i) r.push_back(row[i]);
    r.push_back(f.valid ? 1 : 0);
    arr.push_back(std::move(r));
  }
  return arr;
}

inline MapPolyline polyline_from_json(const json& p, const std::string& ctx) {
  MapPolyline out;
  out.id = require_string(p, "id", ctx);
  auto kind = polyline_kind_from_string(require_string(p, "kind", ctx));
  if (!kind) throw ParseError(ctx + ": unknown polyline kind");
  out.kind = *kind;
  const json& pts = require(p, "points", ctx);
  if (!pts.is_array()) throw ParseError(ctx + ": points must be an array");
  for (const auto& pt : pts) out.points.push_back(number_row<3>(pt, ctx + " point"));
  return out;
}

}  // namespace detail

inline json polyline_to_json(const MapPolyline& p) {
  json pts = json::array();
  for (const auto& pt : p.points) pts.push_back({pt[0], pt[1], pt[2]});
  return {{"id", p.id}, {"kind", std::string(to_string(p.kind))}, {"points", std::move(pts)}};
}

inline std::vector<MapPolyline> map_from_json(const json& m) {
  if (!m.is_array()) throw ParseError("map: expected an array");
  std::vector<MapPolyline> out;
  for (std::size_t i = 0; i < m.size(); ++i)
    out.push_back(detail::polyline_from_json(m[i], "map[" + std::to_string(i) + "]"));
  return out;
}

inline json map_to_json(const std::vector<MapPolyline>& map) {
  json arr = json::array();
  for (const auto& p : map) arr.push_back(polyline_to_json(p));
  return arr;
}

/// Structural parse only; call validate_scenario for the invariants.
inline Scenario scenario_from_json(const json& doc) {
  Scenario s;
  s.scenario_id = detail::require_string(doc, "scenario_id", "scenario");
  const json& agents = detail::require(doc, "agents", "scenario");
  if (!agents.is_array()) throw ParseError("scenario: agents must be an array");
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string ctx = "agents[" + std::to_string(i) + "]";
    const json& a = agents[i];
    Agent agent;
    agent.id = detail::require_string(a, "id", ctx);
    auto kind = agent_kind_from_string(detail::require_string(a, "kind", ctx));
    if (!kind) throw ParseError(ctx + ": unknown agent kind");
    agent.kind = *kind;
    agent.history = detail::frames_from_json(detail::require(a, "history", ctx), ctx + " history");
    if (auto it = a.find("ground_truth_future"); it != a.end() && !it->is_null())
      agent.ground_truth_future = detail::frames_from_json(*it, ctx + " ground_truth_future");
    s.agents.push_back(std::move(agent));
  }
  s.map = map_from_json(detail::require(doc, "map", "scenario"));
  return s;
}

inline json scenario_to_json(const Scenario& s) {
  json agents = json::array();
  for (const auto& a : s.agents) {
    json j = {{"id", a.id},
              {"kind", std::string(to_string(a.kind))},
              {"history", detail::frames_to_json(a.history)}};
    if (a.ground_truth_future) j["ground_truth_future"] = detail::frames_to_json(*a.ground_truth_future);
    agents.push_back(std::move(j));
  }
  return {{"scenario_id", s.scenario_id}, {"agents", std::move(agents)}, {"map", map_to_json(s.map)}};
}

inline Scenario parse_scenario(const std::string& text, const ValidationOptions& opts = {}) {
  Scenario s = scenario_from_json(parse_json_text(text, "scenario"));
  validate_scenario(s, opts);
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path, const ValidationOptions& opts = {}) {
  return parse_scenario(read_text_file(path), opts);
}

inline void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  write_text_file_atomic(path, scenario_to_json(s).dump(1) + "\n");
}

}  // namespace simagents

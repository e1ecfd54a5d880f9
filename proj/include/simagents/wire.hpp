#pragma once

// Line-delimited bridge protocol between the harness and an external
// predictor process. Each message is one JSON object on one line.
//
//   request:  {"type":"predict","scenario_id":..,"step":..,"horizon_frames":..,
//              "agents":[{"id","kind","history":[[10 numbers] x 11]}],"map":[..]}
//   response: {"type":"prediction","agents":[{"id","modes":[
//              {"probability":p,"trajectory":[[cx,cy,vx,vy] x horizon]} x 6]}]}
//   error:    {"type":"error","message":".."}

#include <string>
#include <unordered_map>
#include <vector>

#include "simagents/errors.hpp"
#include "simagents/json_io.hpp"
#include "simagents/predictor.hpp"
#include "simagents/scenario_io.hpp"

namespace simagents::wire {

inline constexpr std::size_t kExcerptLength = 200;

inline std::string excerpt(const std::string& payload) {
  if (payload.size() <= kExcerptLength) return payload;
  return payload.substr(0, kExcerptLength) + "...";
}

inline std::string encode_request(const PredictionRequest& req) {
  json agents = json::array();
  for (const auto& a : req.agents)
    agents.push_back({{"id", a.id}, {"kind", std::string(to_string(a.kind))},
                      {"history", detail::frames_to_json(a.history)}});
  json map = json::array();
  for (const auto& p : req.map) map.push_back(polyline_to_json(p));
  json msg = {{"type", "predict"},
              {"scenario_id", req.scenario_id},
              {"step", req.step},
              {"horizon_frames", req.horizon_frames},
              {"agents", std::move(agents)},
              {"map", std::move(map)}};
  return msg.dump();
}

/// A decoded request that owns its map; `request.map` views `map`.
struct OwnedRequest {
  std::vector<MapPolyline> map;
  PredictionRequest request;
};

inline OwnedRequest decode_request(const std::string& line) {
  json msg = parse_json_text(line, "predict request");
  if (detail::require_string(msg, "type", "message") != "predict")
    throw ParseError("predict request: unexpected message type");
  OwnedRequest out;
  out.map = map_from_json(detail::require(msg, "map", "predict request"));
  auto& req = out.request;
  req.scenario_id = detail::require_string(msg, "scenario_id", "predict request");
  req.horizon_frames = detail::require(msg, "horizon_frames", "predict request").get<std::size_t>();
  if (auto it = msg.find("step"); it != msg.end()) req.step = it->get<std::size_t>();
  for (const auto& a : detail::require(msg, "agents", "predict request")) {
    AgentInput in;
    in.id = detail::require_string(a, "id", "agent");
    auto kind = agent_kind_from_string(detail::require_string(a, "kind", "agent"));
    if (!kind) throw ParseError("agent: unknown kind");
    in.kind = *kind;
    in.history = detail::frames_from_json(detail::require(a, "history", "agent"), "agent history");
    req.agents.push_back(std::move(in));
  }
  req.map = out.map;
  return out;
}

inline std::string encode_response(const PredictionRequest& req, const PredictionResponse& resp) {
  json agents = json::array();
  for (const auto& ms : resp.modes) {
    json modes = json::array();
    for (std::size_t k = 0; k < kModesPerAgent; ++k) {
      json traj = json::array();
      for (const auto& s : ms.trajectories[k]) traj.push_back({s.cx, s.cy, s.vx, s.vy});
      modes.push_back({{"probability", ms.probabilities[k]}, {"trajectory", std::move(traj)}});
    }
    agents.push_back({{"id", req.agents.at(ms.agent_index).id}, {"modes", std::move(modes)}});
  }
  return json{{"type", "prediction"}, {"agents", std::move(agents)}}.dump();
}

inline std::string encode_error(const std::string& message) {
  return json{{"type", "error"}, {"message", message}}.dump();
}

/// Parses a response line and maps it onto the request's agent order.
/// Structural problems and contract violations both surface as
/// BridgeError(protocol) carrying an excerpt of the offending payload.
inline PredictionResponse decode_response(const std::string& line, const PredictionRequest& req) {
  auto fail = [&](const std::string& why) {
    return BridgeError(BridgeFailure::protocol, why, excerpt(line), req.step);
  };
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::parse_error& e) {
    throw fail(std::string("malformed response: ") + e.what());
  }
  PredictionResponse resp;
  try {
    const std::string type = detail::require_string(msg, "type", "response");
    if (type == "error") {
      auto it = msg.find("message");
      throw fail("predictor reported error: " +
                 (it != msg.end() && it->is_string() ? it->get<std::string>() : std::string("<no message>")));
    }
    if (type != "prediction") throw fail("unexpected message type '" + type + "'");

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < req.agents.size(); ++i) index.emplace(req.agents[i].id, i);
    std::vector<std::optional<ModeSet>> slots(req.agents.size());

    const json& agents = detail::require(msg, "agents", "response");
    if (!agents.is_array()) throw fail("agents must be an array");
    for (const auto& a : agents) {
      const std::string id = detail::require_string(a, "id", "response agent");
      auto it = index.find(id);
      if (it == index.end()) throw fail("response names unknown agent '" + id + "'");
      if (slots[it->second]) throw fail("agent '" + id + "' appears twice");
      const json& modes = detail::require(a, "modes", "response agent");
      if (!modes.is_array() || modes.size() != kModesPerAgent)
        throw fail("agent '" + id + "' has " + std::to_string(modes.is_array() ? modes.size() : 0) +
                   " modes, expected 6");
      ModeSet ms;
      ms.agent_index = it->second;
      for (std::size_t k = 0; k < kModesPerAgent; ++k) {
        ms.probabilities[k] = detail::require_number(detail::require(modes[k], "probability", "mode"), "probability");
        const json& traj = detail::require(modes[k], "trajectory", "mode");
        if (!traj.is_array()) throw fail("trajectory must be an array");
        for (const auto& row : traj) {
          auto r = detail::number_row<4>(row, "trajectory sample");
          ms.trajectories[k].push_back({r[0], r[1], r[2], r[3]});
        }
      }
      slots[it->second] = std::move(ms);
    }
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (!slots[i]) throw fail("response is missing agent '" + req.agents[i].id + "'");
      resp.modes.push_back(std::move(*slots[i]));
    }
    validate_response(req, resp);
  } catch (const ParseError& e) {
    throw fail(e.what());
  } catch (const ContractViolation& e) {
    throw fail(e.what());
  } catch (const json::exception& e) {
    throw fail(e.what());
  }
  return resp;
}

}  // namespace simagents::wire

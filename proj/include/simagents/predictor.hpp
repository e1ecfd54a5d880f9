#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "simagents/collision.hpp"
#include "simagents/errors.hpp"
#include "simagents/scenario.hpp"

namespace simagents {

struct AgentInput {
  std::string id;
  AgentKind kind = AgentKind::vehicle;
  std::vector<AgentFrame> history;  // kHistoryFrames, oldest first
};

struct PredictionRequest {
  std::string scenario_id;
  std::size_t step = 0;            // simulation step index
  std::size_t elapsed_frames = 0;  // simulated frames preceding this step
  std::size_t horizon_frames = 20;
  std::vector<AgentInput> agents;
  std::span<const MapPolyline> map;  // must outlive the call
};

/// One ModeSet per requested agent, in request order.
struct PredictionResponse {
  std::vector<ModeSet> modes;
};

inline void validate_request(const PredictionRequest& req) {
  if (req.horizon_frames == 0) throw ValidationError("prediction request: horizon_frames must be >= 1");
  if (req.agents.empty()) throw ValidationError("prediction request: no agents");
  for (const auto& a : req.agents)
    if (a.history.size() != kHistoryFrames)
      throw ValidationError("prediction request: agent '" + a.id + "' history window has " +
                            std::to_string(a.history.size()) + " frames");
}

/// Throws ContractViolation unless every agent is covered by a valid ModeSet.
inline void validate_response(const PredictionRequest& req, const PredictionResponse& resp) {
  if (resp.modes.size() != req.agents.size())
    throw ContractViolation("prediction covers " + std::to_string(resp.modes.size()) + " of " +
                            std::to_string(req.agents.size()) + " agents");
  for (std::size_t i = 0; i < resp.modes.size(); ++i) {
    if (resp.modes[i].agent_index != i)
      throw ContractViolation("prediction for agent '" + req.agents[i].id + "' is missing or out of order");
    validate_mode_set(resp.modes[i], req.horizon_frames);
  }
}

/// Multimodal motion predictor. Implementations must be safe to call from
/// several threads unless documented otherwise.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual PredictionResponse predict(const PredictionRequest& request) = 0;
  virtual std::string name() const = 0;
};

using PredictorPtr = std::shared_ptr<Predictor>;

/// Deterministic stand-in: extrapolates the last velocity, with five fixed
/// perturbations of it as the minor modes.
class ConstantVelocityPredictor final : public Predictor {
 public:
  static constexpr std::array<double, kModesPerAgent> kProbabilities{0.5, 0.15, 0.15, 0.08, 0.08, 0.04};
  // Velocity rotation (degrees) and speed scale per mode.
  static constexpr std::array<double, kModesPerAgent> kRotationDeg{0.0, 5.0, -5.0, 15.0, -15.0, 0.0};
  static constexpr std::array<double, kModesPerAgent> kSpeedScale{1.0, 1.0, 1.0, 1.0, 1.0, 0.8};

  explicit ConstantVelocityPredictor(std::string name = "cv") : name_(std::move(name)) {}

  PredictionResponse predict(const PredictionRequest& req) override {
    validate_request(req);
    PredictionResponse resp;
    resp.modes.reserve(req.agents.size());
    for (std::size_t a = 0; a < req.agents.size(); ++a) {
      const AgentFrame& last = req.agents[a].history.back();
      if (!last.valid)
        throw PredictorError("constant-velocity predictor: last history frame of agent '" +
                             req.agents[a].id + "' is invalid", req.step);
      ModeSet ms;
      ms.agent_index = a;
      ms.probabilities = kProbabilities;
      for (std::size_t k = 0; k < kModesPerAgent; ++k)
        ms.trajectories[k] = extrapolate(last, kRotationDeg[k], kSpeedScale[k], req.horizon_frames);
      resp.modes.push_back(std::move(ms));
    }
    return resp;
  }

  std::string name() const override { return name_; }

  static Trajectory extrapolate(const AgentFrame& f, double rotation_deg, double speed_scale,
                                std::size_t horizon) {
    double vx = f.vx, vy = f.vy;
    if (rotation_deg != 0.0) {
      const double r = rotation_deg * kPi / 180.0;
      const double c = std::cos(r), s = std::sin(r);
      const double rx = vx * c - vy * s;
      vy = vx * s + vy * c;
      vx = rx;
    }
    vx *= speed_scale;
    vy *= speed_scale;
    const double step_x = vx * kFramePeriod, step_y = vy * kFramePeriod;
    Trajectory t(horizon);
    for (std::size_t i = 0; i < horizon; ++i) {
      const double k = static_cast<double>(i + 1);
      t[i] = {f.cx + step_x * k, f.cy + step_y * k, vx, vy};
    }
    return t;
  }

 private:
  std::string name_;
};

/// Plays back the logged future. Mode 0 is the ground-truth slice for the
/// step; the minor modes duplicate it with negligible probability.
class ReplayPredictor final : public Predictor {
 public:
  static constexpr std::array<double, kModesPerAgent> kProbabilities{0.95, 0.01, 0.01, 0.01, 0.01, 0.01};

  explicit ReplayPredictor(std::shared_ptr<const Scenario> scenario, std::string name = "replay")
      : scenario_(std::move(scenario)), name_(std::move(name)) {
    for (const auto& a : scenario_->agents) by_id_.emplace(a.id, &a);
  }

  PredictionResponse predict(const PredictionRequest& req) override {
    validate_request(req);
    const std::size_t end = req.elapsed_frames + req.horizon_frames;
    PredictionResponse resp;
    for (std::size_t a = 0; a < req.agents.size(); ++a) {
      auto it = by_id_.find(req.agents[a].id);
      if (it == by_id_.end() || !it->second->ground_truth_future)
        throw PredictorError("replay predictor: no ground truth for agent '" + req.agents[a].id + "'", req.step);
      const auto& gt = *it->second->ground_truth_future;
      if (end > gt.size())
        throw PredictorError("replay predictor: frames [" + std::to_string(req.elapsed_frames) + ", " +
                             std::to_string(end) + ") exceed the " + std::to_string(gt.size()) +
                             " ground-truth frames", req.step);
      Trajectory slice;
      slice.reserve(req.horizon_frames);
      for (std::size_t f = req.elapsed_frames; f < end; ++f) slice.push_back({gt[f].cx, gt[f].cy, gt[f].vx, gt[f].vy});
      ModeSet ms;
      ms.agent_index = a;
      ms.probabilities = kProbabilities;
      ms.trajectories.fill(slice);
      resp.modes.push_back(std::move(ms));
    }
    return resp;
  }

  std::string name() const override { return name_; }

 private:
  std::shared_ptr<const Scenario> scenario_;
  std::string name_;
  std::unordered_map<std::string, const Agent*> by_id_;
};

}  // namespace simagents

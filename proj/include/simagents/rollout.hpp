#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simagents/collision.hpp"
#include "simagents/errors.hpp"
#include "simagents/heading.hpp"
#include "simagents/joint_ranking.hpp"
#include "simagents/parallel.hpp"
#include "simagents/predictor.hpp"
#include "simagents/scenario.hpp"

namespace simagents {

namespace detail {

inline bool near_integer(double v, double tol = 1e-9) { return std::abs(v - std::round(v)) <= tol; }

}  // namespace detail

/// Closed-loop schedule. Each step predicts `horizon_frames` frames, executes
/// the whole plan, and re-feeds its trailing 11 frames as the next history.
struct RolloutConfig {
  double update_period = 2.0;   // s between replanning (0.5 Hz)
  double total_duration = 8.0;  // s
  std::size_t horizon_frames = 20;
  bool collision_policy_enabled = true;
  SelectionOptions selection;
  // Alternatives expanded at each step; missing trailing entries mean 1.
  std::vector<std::size_t> branching{1, 1, 1, 1};
  std::size_t rollouts_required = 32;
  // Rank alternative branches collision-free first (off: pure joint probability).
  bool filter_branches_by_collision = false;
  HeadingConfig heading;

  std::size_t total_frames() const {
    return static_cast<std::size_t>(std::llround(total_duration / kFramePeriod));
  }
  std::size_t step_count() const { return total_frames() / horizon_frames; }

  /// Below 0.5 Hz replanning is supported but known to degrade rollouts.
  bool is_high_frequency() const { return update_period < 2.0 - 1e-9; }

  std::vector<std::size_t> effective_branching() const {
    std::vector<std::size_t> b = branching;
    b.resize(std::max(b.size(), step_count()), 1);
    return b;
  }

  std::size_t branch_count() const {
    const auto b = effective_branching();
    return std::accumulate(b.begin(), b.end(), std::size_t{1}, std::multiplies<>());
  }

  void validate() const {
    if (!(update_period > 0.0) || !(total_duration > 0.0))
      throw ValidationError("rollout config: update period and duration must be positive");
    if (horizon_frames == 0) throw ValidationError("rollout config: horizon_frames must be >= 1");
    if (!detail::near_integer(total_duration / kFramePeriod))
      throw ValidationError("rollout config: duration is not a whole number of 0.1 s frames");
    if (!detail::near_integer(total_duration / update_period))
      throw ValidationError("rollout config: duration / update period must be integral");
    if (total_frames() % horizon_frames != 0)
      throw ValidationError("rollout config: " + std::to_string(total_frames()) +
                            " frames is not a multiple of horizon_frames " + std::to_string(horizon_frames));
    const double plan = static_cast<double>(horizon_frames) * kFramePeriod;
    if (plan < update_period - 1e-9)
      throw ValidationError("rollout config: a " + std::to_string(plan) + " s plan leaves a gap before the next update");
    if (plan > 2.0 * update_period + 1e-9)
      throw ValidationError("rollout config: a " + std::to_string(plan) + " s plan outlives the " +
                            std::to_string(update_period) + " s update period; shorten horizon_frames");
    if (branching.empty() || branching.size() > step_count())
      throw ValidationError("rollout config: branching needs 1.." + std::to_string(step_count()) + " entries");
    for (auto m : branching)
      if (m == 0 || m > kMaxJointCombinations) throw ValidationError("rollout config: branching entries must be in [1, 64]");
    if (rollouts_required == 0) throw ValidationError("rollout config: rollouts_required must be >= 1");
    if (!(selection.density_threshold > 0.0 && selection.density_threshold <= 1.0))
      throw ValidationError("rollout config: density threshold must be in (0, 1]");
    heading.defaults.validate();
    for (const auto& p : heading.per_kind)
      if (p) p->validate();
  }

  /// variants x prod(branching) must equal rollouts_required.
  void validate_arity(std::size_t n_variants) const {
    if (n_variants == 0) throw ValidationError("no predictor variants");
    if (n_variants * branch_count() != rollouts_required)
      throw ValidationError(std::to_string(n_variants) + " variant(s) x " + std::to_string(branch_count()) +
                            " branches != " + std::to_string(rollouts_required) + " rollouts required");
  }
};

enum class SelectionOutcome {
  top1,            // policy disabled
  clique_top1,     // policy on, all-most-likely already collision-free
  heuristic,       // policy on, dense subgraph search succeeded
  fallback_top1,   // policy on, search failed
  branch,          // alternative combination for branch rank > 0
};

inline std::string_view to_string(SelectionOutcome o) {
  switch (o) {
    case SelectionOutcome::top1: return "top-1";
    case SelectionOutcome::clique_top1: return "clique-top-1";
    case SelectionOutcome::heuristic: return "heuristic";
    case SelectionOutcome::fallback_top1: return "fallback-top-1";
    case SelectionOutcome::branch: return "branch";
  }
  return "unknown";
}

/// Provenance of one executed step.
struct StepRecord {
  std::size_t step = 0;
  std::size_t branch_rank = 0;
  Selection selection;
  SelectionOutcome outcome = SelectionOutcome::top1;
  std::size_t search_calls = 0;
  std::size_t predicted_collisions = 0;  // missing edges among the selection
};

struct AgentTrack {
  std::string id;
  std::vector<AgentFrame> frames;
};

struct Rollout {
  std::string scenario_id;
  std::string variant_id;
  std::vector<std::size_t> branch_path;
  std::vector<AgentTrack> agents;
  std::vector<StepRecord> steps;
};

using Window = std::vector<AgentFrame>;

/// Prediction plus the collision analysis shared by every branch of a step.
struct StepPlan {
  std::size_t step = 0;
  PredictionResponse response;
  CollisionGraph graph;
  std::optional<Selection> policy_selection;
  SelectionSearchStats search;
};

inline PredictionRequest make_request(const Scenario& scenario, std::span<const Window> windows, std::size_t step,
                                      std::size_t elapsed_frames, std::size_t horizon_frames) {
  PredictionRequest req;
  req.scenario_id = scenario.scenario_id;
  req.step = step;
  req.elapsed_frames = elapsed_frames;
  req.horizon_frames = horizon_frames;
  req.map = scenario.map;
  req.agents.reserve(windows.size());
  for (std::size_t a = 0; a < windows.size(); ++a)
    req.agents.push_back({scenario.agents[a].id, scenario.agents[a].kind, windows[a]});
  return req;
}

/// Calls the predictor once and runs the collision policy on its output.
inline StepPlan plan_step(const Scenario& scenario, std::span<const Window> windows, Predictor& predictor,
                          const RolloutConfig& config, std::size_t step) {
  const auto req = make_request(scenario, windows, step, step * config.horizon_frames, config.horizon_frames);
  StepPlan plan;
  plan.step = step;
  try {
    plan.response = predictor.predict(req);
    validate_response(req, plan.response);
  } catch (const PredictorError& e) {
    if (e.step()) throw;
    throw PredictorError("step " + std::to_string(step) + ": " + e.what(), step);
  } catch (const std::exception& e) {
    throw PredictorError("step " + std::to_string(step) + ": " + e.what(), step);
  }

  std::vector<double> widths(windows.size());
  for (std::size_t a = 0; a < windows.size(); ++a) widths[a] = windows[a].back().dy;
  plan.graph = build_collision_graph(build_distance_matrix(plan.response.modes), widths);
  if (config.collision_policy_enabled)
    plan.policy_selection = find_selection(plan.graph, config.selection, &plan.search);
  return plan;
}

/// Selection for `branch_rank`. Rank 0 is the policy (or top-1) choice. Rank
/// r > 0 walks the joint-probability ranking from its second entry, skipping
/// the rank-0 selection, and takes the r-th combination it meets.
inline StepRecord choose_selection(const StepPlan& plan, const RolloutConfig& config, std::size_t branch_rank) {
  const std::size_t n = plan.response.modes.size();
  StepRecord rec;
  rec.step = plan.step;
  rec.branch_rank = branch_rank;
  rec.search_calls = plan.search.recursive_calls;

  Selection base = Selection::all_top1(n);
  if (!config.collision_policy_enabled) {
    rec.outcome = SelectionOutcome::top1;
  } else if (plan.policy_selection) {
    base = *plan.policy_selection;
    rec.outcome = plan.search.fast_path ? SelectionOutcome::clique_top1 : SelectionOutcome::heuristic;
  } else {
    rec.outcome = SelectionOutcome::fallback_top1;
  }

  if (branch_rank == 0) {
    rec.selection = std::move(base);
  } else {
    const std::size_t combos = combination_count(n, kMaxJointCombinations);
    const std::size_t fetch = config.filter_branches_by_collision ? combos : std::min(branch_rank + 2, combos);
    auto ranked = top_k_joint_combinations(plan.response.modes, fetch);
    ranked.erase(ranked.begin());
    std::erase_if(ranked, [&](const RankedSelection& r) { return r.selection == base; });
    if (config.filter_branches_by_collision)
      std::stable_partition(ranked.begin(), ranked.end(), [&](const RankedSelection& r) {
        return count_collisions(plan.graph, r.selection) == 0;
      });
    if (branch_rank > ranked.size())
      throw ValidationError("step " + std::to_string(plan.step) + ": branch rank " + std::to_string(branch_rank) +
                            " exceeds the " + std::to_string(ranked.size()) + " alternative combinations");
    rec.selection = ranked[branch_rank - 1].selection;
    rec.outcome = SelectionOutcome::branch;
  }
  rec.predicted_collisions = count_collisions(plan.graph, rec.selection);
  return rec;
}

struct StepResult {
  std::vector<std::vector<AgentFrame>> new_frames;  // per agent, horizon_frames
  std::vector<Window> next_windows;
  StepRecord record;
};

/// Turns the selected plans into executed frames: headings from the path,
/// velocities from the samples, cz/dx/dy/dz carried over from the window.
inline StepResult execute_selection(const Scenario& scenario, std::span<const Window> windows, const StepPlan& plan,
                                    StepRecord record, const RolloutConfig& config) {
  StepResult out;
  out.new_frames.resize(windows.size());
  out.next_windows.resize(windows.size());
  for (std::size_t a = 0; a < windows.size(); ++a) {
    const AgentFrame& last = windows[a].back();
    const Trajectory& traj = plan.response.modes[a].trajectories[record.selection.mode(a)];
    std::vector<Point2> xy(traj.size());
    for (std::size_t t = 0; t < traj.size(); ++t) xy[t] = {traj[t].cx, traj[t].cy};
    const auto headings = headings_from_xy(xy, last.heading, config.heading.for_kind(scenario.agents[a].kind));

    auto& frames = out.new_frames[a];
    frames.reserve(traj.size());
    for (std::size_t t = 0; t < traj.size(); ++t) {
      AgentFrame f;
      f.cx = traj[t].cx;
      f.cy = traj[t].cy;
      f.cz = last.cz;
      f.dx = last.dx;
      f.dy = last.dy;
      f.dz = last.dz;
      f.heading = headings[t];
      f.vx = traj[t].vx;
      f.vy = traj[t].vy;
      f.valid = true;
      frames.push_back(f);
    }
    Window joined = windows[a];
    joined.insert(joined.end(), frames.begin(), frames.end());
    out.next_windows[a] = trailing_history(joined, kHistoryFrames);
  }
  out.record = std::move(record);
  return out;
}

/// One closed-loop step: predict, select, post-process headings, execute.
inline StepResult run_step(const Scenario& scenario, std::span<const Window> windows, Predictor& predictor,
                           const RolloutConfig& config, std::size_t step, std::size_t branch_rank = 0) {
  const StepPlan plan = plan_step(scenario, windows, predictor, config, step);
  return execute_selection(scenario, windows, plan, choose_selection(plan, config, branch_rank), config);
}

/// The simulation start state must be a valid frame for every agent.
inline std::vector<Window> initial_windows(const Scenario& scenario) {
  std::vector<Window> windows;
  windows.reserve(scenario.agents.size());
  for (const auto& a : scenario.agents) {
    if (a.history.size() != kHistoryFrames)
      throw ValidationError("agent '" + a.id + "': history length " + std::to_string(a.history.size()));
    if (!a.history.back().valid)
      throw ValidationError("agent '" + a.id + "': the final history frame (simulation start) is invalid");
    windows.push_back(a.history);
  }
  return windows;
}

namespace detail {

// Depth-first walk of the branch tree. Every node makes one predictor call
// shared by its children, so a branching vector [m1..mS] costs
// sum_s prod_{t<s} m_t calls.
class BranchTreeRunner {
 public:
  BranchTreeRunner(const Scenario& scenario, Predictor& predictor, const RolloutConfig& config,
                   std::string variant_id, std::vector<std::size_t> branching,
                   std::optional<std::vector<std::size_t>> only_path)
      : scenario_(scenario),
        predictor_(predictor),
        config_(config),
        variant_id_(std::move(variant_id)),
        branching_(std::move(branching)),
        only_path_(std::move(only_path)) {}

  std::vector<Rollout> run() {
    std::vector<AgentTrack> tracks;
    for (const auto& a : scenario_.agents) tracks.push_back({a.id, {}});
    expand(0, initial_windows(scenario_), std::move(tracks), {}, {});
    return std::move(out_);
  }

 private:
  void expand(std::size_t step, std::vector<Window> windows, std::vector<AgentTrack> tracks,
              std::vector<std::size_t> path, std::vector<StepRecord> records) {
    if (step == branching_.size()) {
      out_.push_back({scenario_.scenario_id, variant_id_, std::move(path), std::move(tracks), std::move(records)});
      return;
    }
    const StepPlan plan = plan_step(scenario_, windows, predictor_, config_, step);
    std::size_t first = 0, last = branching_[step];
    if (only_path_) {
      first = (*only_path_)[step];
      last = first + 1;
    }
    for (std::size_t rank = first; rank < last; ++rank) {
      StepResult res = execute_selection(scenario_, windows, plan, choose_selection(plan, config_, rank), config_);
      auto child_tracks = tracks;
      for (std::size_t a = 0; a < child_tracks.size(); ++a)
        child_tracks[a].frames.insert(child_tracks[a].frames.end(), res.new_frames[a].begin(), res.new_frames[a].end());
      auto child_path = path;
      child_path.push_back(rank);
      auto child_records = records;
      child_records.push_back(std::move(res.record));
      expand(step + 1, std::move(res.next_windows), std::move(child_tracks), std::move(child_path),
             std::move(child_records));
    }
  }

  const Scenario& scenario_;
  Predictor& predictor_;
  const RolloutConfig& config_;
  std::string variant_id_;
  std::vector<std::size_t> branching_;
  std::optional<std::vector<std::size_t>> only_path_;
  std::vector<Rollout> out_;
};

}  // namespace detail

/// Single rollout following `branch_path` (one rank per step; missing
/// trailing entries are 0).
inline Rollout run_rollout(const Scenario& scenario, Predictor& predictor, const RolloutConfig& config,
                           std::vector<std::size_t> branch_path = {}, std::string variant_id = {}) {
  config.validate();
  const auto branching = config.effective_branching();
  if (branch_path.size() > branching.size())
    throw ValidationError("branch path longer than the " + std::to_string(branching.size()) + " steps");
  branch_path.resize(branching.size(), 0);
  for (std::size_t s = 0; s < branching.size(); ++s)
    if (branch_path[s] >= branching[s])
      throw ValidationError("branch path entry " + std::to_string(s) + " = " + std::to_string(branch_path[s]) +
                            " outside branching " + std::to_string(branching[s]));
  if (variant_id.empty()) variant_id = predictor.name();
  auto out = detail::BranchTreeRunner(scenario, predictor, config, std::move(variant_id), branching,
                                      std::move(branch_path))
                 .run();
  return std::move(out.front());
}

/// All rollouts of one variant, in mixed-radix branch-path order.
inline std::vector<Rollout> run_branch_tree(const Scenario& scenario, Predictor& predictor, const RolloutConfig& config,
                                            std::string variant_id = {}) {
  config.validate();
  if (variant_id.empty()) variant_id = predictor.name();
  return detail::BranchTreeRunner(scenario, predictor, config, std::move(variant_id), config.effective_branching(),
                                  std::nullopt)
      .run();
}

/// variants x branch tree. Output is ordered by variant, then branch path,
/// independent of `jobs`.
inline std::vector<Rollout> run_ensemble(const Scenario& scenario, std::span<const PredictorPtr> variants,
                                         const RolloutConfig& config, std::size_t jobs = 1) {
  config.validate();
  config.validate_arity(variants.size());
  std::vector<std::vector<Rollout>> per_variant(variants.size());
  parallel_for(variants.size(), jobs, [&](std::size_t v) {
    per_variant[v] = run_branch_tree(scenario, *variants[v], config, variants[v]->name());
  });
  std::vector<Rollout> all;
  all.reserve(config.rollouts_required);
  for (auto& rs : per_variant)
    for (auto& r : rs) all.push_back(std::move(r));
  return all;
}

}  // namespace simagents

#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "simagents/collision.hpp"

namespace simagents {

inline constexpr std::size_t kMaxJointCombinations = 64;

struct RankedSelection {
  Selection selection;
  double joint_probability = 0.0;
};

/// Product of the chosen modes' probabilities, multiplied in agent order.
inline double joint_probability(std::span<const ModeSet> modes, const Selection& s) {
  double p = 1.0;
  for (std::size_t m = 0; m < modes.size(); ++m) p *= modes[m].probabilities[s.mode(m)];
  return p;
}

/// Descending joint probability, then ascending lexicographic vertex order.
inline bool ranks_before(const RankedSelection& a, const RankedSelection& b) {
  if (a.joint_probability != b.joint_probability) return a.joint_probability > b.joint_probability;
  return a.selection < b.selection;
}

/// Number of selections for N agents, saturated at `cap`.
inline std::size_t combination_count(std::size_t n_agents, std::size_t cap) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < n_agents; ++i) {
    total *= kModesPerAgent;
    if (total >= cap) return cap;
  }
  return total;
}

/// The k most probable joint selections, best-first over the product space.
///
/// Modes are sorted by descending probability, so bumping any agent to its
/// next mode never raises the joint probability and always moves later in
/// lexicographic order. Every selection therefore ranks after the selections
/// it was derived from, and expanding the frontier in rank order yields the
/// exact sorted prefix without enumerating 6^N combinations.
inline std::vector<RankedSelection> top_k_joint_combinations(std::span<const ModeSet> modes, std::size_t k) {
  const std::size_t n = modes.size();
  if (n == 0) throw std::invalid_argument("top_k_joint_combinations: no agents");
  if (k == 0 || k > kMaxJointCombinations || k > combination_count(n, kMaxJointCombinations + 1))
    throw std::out_of_range("top_k_joint_combinations: k=" + std::to_string(k) + " out of range");

  auto cmp = [](const RankedSelection& a, const RankedSelection& b) { return ranks_before(a, b); };
  std::set<RankedSelection, decltype(cmp)> frontier(cmp);
  std::set<Selection> seen;

  auto push = [&](Selection s) {
    if (!seen.insert(s).second) return;
    const double p = joint_probability(modes, s);
    frontier.insert({std::move(s), p});
  };

  push(Selection::all_top1(n));
  std::vector<RankedSelection> out;
  out.reserve(k);
  while (out.size() < k && !frontier.empty()) {
    RankedSelection best = *frontier.begin();
    frontier.erase(frontier.begin());
    for (std::size_t m = 0; m < n; ++m) {
      if (best.selection.mode(m) + 1 >= kModesPerAgent) continue;
      Selection next = best.selection;
      ++next.vertices[m];
      push(std::move(next));
    }
    out.push_back(std::move(best));
  }
  return out;
}

}  // namespace simagents

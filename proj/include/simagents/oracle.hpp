#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "simagents/collision.hpp"

namespace simagents {

inline constexpr std::size_t kMaxBruteForceAgents = 7;

struct BruteForceResult {
  Selection selection;
  std::size_t collisions = 0;
};

/// Exhaustive search over all 6^N selections for the fewest colliding pairs.
/// Enumeration runs in lexicographic vertex order and keeps the first minimum.
inline BruteForceResult brute_force_selection(const CollisionGraph& g) {
  const std::size_t n = g.n_agents();
  if (n == 0) throw std::invalid_argument("brute_force_selection: empty graph");
  if (n > kMaxBruteForceAgents)
    throw std::invalid_argument("brute_force_selection: N > 7 is not enumerable");

  BruteForceResult best{Selection::all_top1(n), std::numeric_limits<std::size_t>::max()};
  std::vector<std::size_t> cur(n);
  // partial[l] = colliding pairs among cur[0..l-1]
  std::vector<std::size_t> partial(n + 1, 0);

  auto recurse = [&](auto&& self, std::size_t l) -> void {
    if (l == n) {
      if (partial[n] < best.collisions) {
        best.collisions = partial[n];
        best.selection.vertices = cur;
      }
      return;
    }
    for (std::size_t i = 0; i < kModesPerAgent; ++i) {
      const std::size_t v = vertex_of(l, i);
      std::size_t add = 0;
      for (std::size_t k = 0; k < l; ++k) add += g.edge(v, cur[k]) ? 0 : 1;
      cur[l] = v;
      partial[l + 1] = partial[l] + add;
      self(self, l + 1);
    }
  };
  recurse(recurse, 0);
  return best;
}

/// Deterministic uniform double in [0, 1) from a 64-bit engine; independent
/// of the standard library's distribution implementations.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Random collision graph: each cross-block edge present with probability p.
inline CollisionGraph random_collision_graph(std::size_t n_agents, double edge_probability,
                                             std::mt19937_64& rng) {
  CollisionGraph g = CollisionGraph::empty(n_agents);
  const std::size_t nv = g.n_vertices();
  for (std::size_t u = 0; u < nv; ++u)
    for (std::size_t v = u + 1; v < nv; ++v) {
      if (agent_of(u) == agent_of(v)) continue;
      g.set_edge(u, v, unit_uniform(rng) < edge_probability);
    }
  return g;
}

}  // namespace simagents

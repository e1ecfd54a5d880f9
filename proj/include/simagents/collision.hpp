#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "simagents/errors.hpp"
#include "simagents/matrix.hpp"
#include "simagents/scenario.hpp"

namespace simagents {

/// Every predictor emits exactly this many modes per agent. The (agent, mode)
/// vertex layout of the collision graph depends on it.
inline constexpr std::size_t kModesPerAgent = 6;

inline constexpr double kProbabilitySumTolerance = 1e-6;
inline constexpr double kDefaultDensityThreshold = 0.95;

/// One agent's candidate futures from a single predictor call, most likely first.
struct ModeSet {
  std::size_t agent_index = 0;
  std::array<Trajectory, kModesPerAgent> trajectories;
  std::array<double, kModesPerAgent> probabilities{};

  std::size_t horizon() const { return trajectories[0].size(); }
};

/// Throws ContractViolation on the first broken ModeSet invariant.
inline void validate_mode_set(const ModeSet& m, std::optional<std::size_t> horizon = std::nullopt) {
  const std::string who = "agent " + std::to_string(m.agent_index);
  double sum = 0.0;
  for (std::size_t i = 0; i < kModesPerAgent; ++i) {
    const double p = m.probabilities[i];
    if (!std::isfinite(p) || p < 0.0)
      throw ContractViolation(who + ": mode " + std::to_string(i) + " probability is negative or non-finite");
    if (i > 0 && p > m.probabilities[i - 1])
      throw ContractViolation(who + ": modes not sorted by descending probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilitySumTolerance)
    throw ContractViolation(who + ": probabilities sum to " + std::to_string(sum) + ", expected 1");
  const std::size_t h = horizon.value_or(m.trajectories[0].size());
  if (h == 0) throw ContractViolation(who + ": empty trajectory");
  for (std::size_t i = 0; i < kModesPerAgent; ++i) {
    if (m.trajectories[i].size() != h)
      throw ContractViolation(who + ": mode " + std::to_string(i) + " has " +
                              std::to_string(m.trajectories[i].size()) + " samples, expected " +
                              std::to_string(h));
    for (const auto& s : m.trajectories[i])
      if (!std::isfinite(s.cx) || !std::isfinite(s.cy) || !std::isfinite(s.vx) || !std::isfinite(s.vy))
        throw ContractViolation(who + ": non-finite trajectory sample");
  }
}

/// Vertex index of mode `mode` (0-based) of agent `agent`.
constexpr std::size_t vertex_of(std::size_t agent, std::size_t mode) {
  return kModesPerAgent * agent + mode;
}
constexpr std::size_t agent_of(std::size_t vertex) { return vertex / kModesPerAgent; }
constexpr std::size_t mode_of(std::size_t vertex) { return vertex % kModesPerAgent; }

/// One chosen vertex per agent block; vertices[m] lies in [6m, 6m+5].
struct Selection {
  std::vector<std::size_t> vertices;

  std::size_t mode(std::size_t agent) const { return mode_of(vertices.at(agent)); }

  static Selection all_top1(std::size_t n_agents) {
    Selection s;
    s.vertices.resize(n_agents);
    for (std::size_t m = 0; m < n_agents; ++m) s.vertices[m] = vertex_of(m, 0);
    return s;
  }

  bool is_well_formed(std::size_t n_agents) const {
    if (vertices.size() != n_agents) return false;
    for (std::size_t m = 0; m < n_agents; ++m)
      if (agent_of(vertices[m]) != m) return false;
    return true;
  }

  friend bool operator==(const Selection&, const Selection&) = default;
  friend auto operator<=>(const Selection&, const Selection&) = default;
};

struct DistanceMatrix {
  std::size_t n_agents = 0;
  SquareMatrix<double> entries;  // 6N x 6N, metres
};

/// 0-1 adjacency over (agent, mode) vertices; 1 means "these two plans do not collide".
class CollisionGraph {
 public:
  CollisionGraph() = default;

  /// Validates symmetry, 0/1 entries and the zero diagonal blocks.
  CollisionGraph(std::size_t n_agents, SquareMatrix<std::uint8_t> adjacency)
      : n_agents_(n_agents), adj_(std::move(adjacency)) {
    if (adj_.size() != kModesPerAgent * n_agents_)
      throw ValidationError("CollisionGraph: adjacency must be 6N x 6N");
    for (std::size_t r = 0; r < adj_.size(); ++r)
      for (std::size_t c = 0; c < adj_.size(); ++c) {
        const auto v = adj_(r, c);
        if (v > 1) throw ValidationError("CollisionGraph: entries must be 0 or 1");
        if (v != adj_(c, r)) throw ValidationError("CollisionGraph: adjacency not symmetric");
        if (v != 0 && agent_of(r) == agent_of(c))
          throw ValidationError("CollisionGraph: diagonal 6x6 blocks must be zero");
      }
  }

  /// Empty graph (every pair collides) on N agents.
  static CollisionGraph empty(std::size_t n_agents) {
    return CollisionGraph(n_agents, SquareMatrix<std::uint8_t>(kModesPerAgent * n_agents, 0));
  }

  std::size_t n_agents() const noexcept { return n_agents_; }
  std::size_t n_vertices() const noexcept { return adj_.size(); }
  const SquareMatrix<std::uint8_t>& adjacency() const noexcept { return adj_; }

  bool edge(std::size_t u, std::size_t v) const { return adj_(u, v) != 0; }

  /// Sets an undirected cross-block edge.
  void set_edge(std::size_t u, std::size_t v, bool present) {
    if (agent_of(u) == agent_of(v))
      throw ValidationError("CollisionGraph: cannot add an edge inside an agent block");
    adj_(u, v) = adj_(v, u) = present ? 1 : 0;
  }

 private:
  std::size_t n_agents_ = 0;
  SquareMatrix<std::uint8_t> adj_;
};

/// Minimum same-frame centre distance between two plans.
inline double min_pairwise_distance(std::span<const TrajectorySample> a,
                                    std::span<const TrajectorySample> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("min_pairwise_distance: empty trajectory");
  if (a.size() != b.size()) throw std::invalid_argument("min_pairwise_distance: length mismatch");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < a.size(); ++t)
    best = std::min(best, std::hypot(a[t].cx - b[t].cx, a[t].cy - b[t].cy));
  return best;
}

/// Entry (6m+i, 6n+j) is the minimum distance between mode i of agent m and
/// mode j of agent n. Same-agent blocks are 0: those plans share a start point.
inline DistanceMatrix build_distance_matrix(std::span<const ModeSet> modes) {
  const std::size_t n = modes.size();
  if (n == 0) throw std::invalid_argument("build_distance_matrix: no agents");
  const std::size_t h = modes[0].horizon();
  for (const auto& m : modes)
    for (const auto& t : m.trajectories)
      if (t.size() != h) throw std::invalid_argument("build_distance_matrix: inconsistent horizons");

  DistanceMatrix d{n, SquareMatrix<double>(kModesPerAgent * n, 0.0)};
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t k = m + 1; k < n; ++k)
      for (std::size_t i = 0; i < kModesPerAgent; ++i)
        for (std::size_t j = 0; j < kModesPerAgent; ++j) {
          const double v = min_pairwise_distance(modes[m].trajectories[i], modes[k].trajectories[j]);
          d.entries(vertex_of(m, i), vertex_of(k, j)) = v;
          d.entries(vertex_of(k, j), vertex_of(m, i)) = v;
        }
  return d;
}

/// Disc test: plans collide when their distance is within the mean width.
inline CollisionGraph build_collision_graph(const DistanceMatrix& d, std::span<const double> widths) {
  if (widths.size() != d.n_agents)
    throw std::invalid_argument("build_collision_graph: one width per agent required");
  for (double w : widths)
    if (!(w > 0.0)) throw std::invalid_argument("build_collision_graph: widths must be positive");
  const std::size_t nv = kModesPerAgent * d.n_agents;
  SquareMatrix<std::uint8_t> adj(nv, 0);
  for (std::size_t u = 0; u < nv; ++u)
    for (std::size_t v = 0; v < nv; ++v) {
      const std::size_t m = agent_of(u), k = agent_of(v);
      if (m == k) continue;
      adj(u, v) = d.entries(u, v) <= (widths[m] + widths[k]) / 2.0 ? 0 : 1;
    }
  return CollisionGraph(d.n_agents, std::move(adj));
}

/// Sum of the induced submatrix over l(l-1); 1.0 for l <= 1.
inline double subgraph_density(const CollisionGraph& g, std::span<const std::size_t> vertices) {
  const std::size_t l = vertices.size();
  if (l <= 1) return 1.0;
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = a + 1; b < l; ++b)
      if (vertices[a] == vertices[b]) throw std::invalid_argument("subgraph_density: repeated vertex");
  std::size_t sum = 0;
  for (std::size_t a = 0; a < l; ++a)
    for (std::size_t b = 0; b < l; ++b) sum += g.adjacency()(vertices[a], vertices[b]);
  return static_cast<double>(sum) / static_cast<double>(l * (l - 1));
}

inline std::vector<std::size_t> degrees(const CollisionGraph& g) {
  std::vector<std::size_t> deg(g.n_vertices(), 0);
  for (std::size_t u = 0; u < g.n_vertices(); ++u)
    for (std::size_t v = 0; v < g.n_vertices(); ++v) deg[u] += g.adjacency()(u, v);
  return deg;
}

/// Unordered agent pairs whose selected plans collide (missing edges).
inline std::size_t count_collisions(const CollisionGraph& g, const Selection& s) {
  std::size_t missing = 0;
  for (std::size_t a = 0; a < s.vertices.size(); ++a)
    for (std::size_t b = a + 1; b < s.vertices.size(); ++b)
      if (!g.edge(s.vertices[a], s.vertices[b])) ++missing;
  return missing;
}

/// Largest number of colliding pairs a size-N selection can have while still
/// counting as dense at 0.95: floor(0.05 * N(N-1)/2), in integer arithmetic.
constexpr std::size_t dense_collision_bound(std::size_t n_agents) {
  return (5 * (n_agents * (n_agents - 1) / 2)) / 100;
}

struct SelectionOptions {
  double density_threshold = kDefaultDensityThreshold;
  // Cap on FindClique/FindDSG invocations; the dense-subgraph fallback
  // backtracks and is exponential in N in the worst case.
  std::size_t max_recursive_calls = 2'000'000;
};

struct SelectionSearchStats {
  std::size_t recursive_calls = 0;
  bool fast_path = false;         // all-top-1 already a clique
  bool budget_exhausted = false;
};

namespace detail {

// Greedy clique growth with a dense-subgraph fallback, one agent block per
// level. c[l] is the vertex chosen for agent l.
class DenseSubgraphSearch {
 public:
  DenseSubgraphSearch(const CollisionGraph& g, const SelectionOptions& opts, SelectionSearchStats& stats)
      : g_(g), opts_(opts), stats_(stats), s_(g.n_agents()), c_(Selection::all_top1(g.n_agents()).vertices) {}

  std::optional<Selection> run() {
    if (is_clique(c_)) {
      stats_.fast_path = true;
      return Selection{c_};
    }
    deg_ = degrees(g_);
    try {
      if (find_clique(0, 0, 0)) return Selection{c_};
    } catch (const BudgetExhausted&) {
      stats_.budget_exhausted = true;
    }
    return std::nullopt;
  }

 private:
  struct BudgetExhausted {};

  bool is_clique(std::span<const std::size_t> v) const {
    for (std::size_t a = 0; a < v.size(); ++a)
      for (std::size_t b = a + 1; b < v.size(); ++b)
        if (!g_.edge(v[a], v[b])) return false;
    return true;
  }

  void count_call() {
    if (++stats_.recursive_calls > opts_.max_recursive_calls) throw BudgetExhausted{};
  }

  // Edges between candidate j and c[0..l-1].
  std::size_t edges_to_prefix(std::size_t j, std::size_t l) const {
    std::size_t e = 0;
    for (std::size_t k = 0; k < l; ++k) e += g_.edge(j, c_[k]) ? 1 : 0;
    return e;
  }

  bool is_dense(std::size_t undirected_edges, std::size_t size) const {
    if (size <= 1) return true;
    const double density =
        static_cast<double>(2 * undirected_edges) / static_cast<double>(size * (size - 1));
    return density >= opts_.density_threshold;
  }

  static constexpr std::size_t pairs(std::size_t size) { return size * (size - 1) / 2; }

  bool find_clique(std::size_t i, std::size_t l, std::size_t prefix_edges) {
    count_call();
    std::optional<std::size_t> chosen;
    std::size_t chosen_edges = 0;
    for (std::size_t j = i; j < i + kModesPerAgent; ++j) {
      c_[l] = j;
      const std::size_t e = edges_to_prefix(j, l);
      if (prefix_edges + e == pairs(l + 1)) {
        chosen = j;
        chosen_edges = e;
        break;
      }
    }
    if (!chosen) return find_dsg(i, l, prefix_edges);
    c_[l] = *chosen;
    if (l + 1 < s_) return find_clique(kModesPerAgent * (l + 1), l + 1, prefix_edges + chosen_edges);
    return true;
  }

  bool find_dsg(std::size_t i, std::size_t l, std::size_t prefix_edges) {
    count_call();
    for (std::size_t j = i; j < i + kModesPerAgent; ++j) {
      if (deg_[j] + 1 < s_) continue;  // deg[j] >= s - 1
      c_[l] = j;
      const std::size_t total = prefix_edges + edges_to_prefix(j, l);
      if (!is_dense(total, l + 1)) continue;
      if (l + 1 < s_) {
        if (find_dsg(kModesPerAgent * (l + 1), l + 1, total)) return true;
      } else {
        return true;
      }
    }
    return false;
  }

  const CollisionGraph& g_;
  const SelectionOptions& opts_;
  SelectionSearchStats& stats_;
  std::size_t s_;
  std::vector<std::size_t> c_;
  std::vector<std::size_t> deg_;
};

}  // namespace detail

/// Clique / dense-subgraph heuristic over the collision graph.
///
/// Starts from the all-most-likely selection and returns it untouched when it
/// is already collision-free. Otherwise grows a clique one agent at a time,
/// taking the first mode of each agent that keeps the prefix a clique; when an
/// agent has no such mode the search switches to a backtracking pass that
/// only admits vertices of degree >= N-1 keeping the prefix density at or
/// above the threshold. The degree array is computed once, up front.
///
/// Returns std::nullopt when no selection is found (or the call budget runs
/// out); callers fall back to Selection::all_top1.
inline std::optional<Selection> find_selection(const CollisionGraph& g, const SelectionOptions& opts = {},
                                               SelectionSearchStats* stats = nullptr) {
  if (g.n_agents() == 0) throw std::invalid_argument("find_selection: empty graph");
  SelectionSearchStats local;
  SelectionSearchStats& st = stats ? *stats : local;
  st = {};
  return detail::DenseSubgraphSearch(g, opts, st).run();
}

inline std::optional<Selection> find_selection(const CollisionGraph& g, double density_threshold,
                                               SelectionSearchStats* stats = nullptr) {
  SelectionOptions opts;
  opts.density_threshold = density_threshold;
  return find_selection(g, opts, stats);
}

}  // namespace simagents

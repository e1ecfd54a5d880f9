#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"

using namespace simagents;
using simagents::testing::mode_set_with;

namespace {

// Line-by-line transcription of the published pseudocode: density recomputed
// from scratch, global output flag, no call budget.
class ReferenceSearch {
 public:
  ReferenceSearch(const CollisionGraph& g, double threshold) : g_(g), threshold_(threshold) {}

  std::optional<std::vector<std::size_t>> run() {
    const std::size_t n = g_.n_agents();
    c_.assign(n, 0);
    for (std::size_t m = 0; m < n; ++m) c_[m] = 6 * m;
    if (subgraph_density(g_, c_) == 1.0) return c_;
    deg_ = degrees(g_);
    find_clique(0, 0, n);
    return out_;
  }

 private:
  bool done() const { return out_.has_value(); }

  double prefix_density(std::size_t l) const {
    return subgraph_density(g_, std::span<const std::size_t>(c_.data(), l + 1));
  }

  void find_dsg(std::size_t i, std::size_t l, std::size_t s) {
    for (std::size_t j = i; j <= i + 5 && !done(); ++j) {
      if (deg_[j] >= s - 1) {
        c_[l] = j;
        if (prefix_density(l) >= threshold_) {
          if (l < s - 1)
            find_dsg(6 * (l + 1), l + 1, s);
          else
            out_ = c_;
        }
      }
    }
  }

  void find_clique(std::size_t i, std::size_t l, std::size_t s) {
    long j_tmp = -1;
    for (std::size_t j = i; j <= i + 5; ++j) {
      c_[l] = j;
      if (prefix_density(l) == 1.0) {
        j_tmp = static_cast<long>(j);
        break;
      }
    }
    if (j_tmp != -1) {
      c_[l] = static_cast<std::size_t>(j_tmp);
      if (l < s - 1)
        find_clique(6 * (l + 1), l + 1, s);
      else
        out_ = c_;
    } else {
      find_dsg(i, l, s);
    }
  }

  const CollisionGraph& g_;
  double threshold_;
  std::vector<std::size_t> c_;
  std::vector<std::size_t> deg_;
  std::optional<std::vector<std::size_t>> out_;
};

CollisionGraph complete_graph(std::size_t n) {
  CollisionGraph g = CollisionGraph::empty(n);
  for (std::size_t u = 0; u < g.n_vertices(); ++u)
    for (std::size_t v = u + 1; v < g.n_vertices(); ++v)
      if (agent_of(u) != agent_of(v)) g.set_edge(u, v, true);
  return g;
}

Trajectory line(double x0, double y0, double vx, double vy, std::size_t n) {
  Trajectory t;
  for (std::size_t k = 0; k < n; ++k) t.push_back({x0 + vx * k, y0 + vy * k, vx, vy});
  return t;
}

// Applies an agent relabeling: new agent perm[m] gets old agent m's block.
CollisionGraph permute_agents(const CollisionGraph& g, const std::vector<std::size_t>& perm) {
  CollisionGraph out = CollisionGraph::empty(g.n_agents());
  for (std::size_t u = 0; u < g.n_vertices(); ++u)
    for (std::size_t v = 0; v < g.n_vertices(); ++v) {
      if (agent_of(u) == agent_of(v) || !g.edge(u, v)) continue;
      out.set_edge(vertex_of(perm[agent_of(u)], mode_of(u)), vertex_of(perm[agent_of(v)], mode_of(v)), true);
    }
  return out;
}

}  // namespace

TEST(MinPairwiseDistance, Basics) {
  const auto a = line(0, 0, 1, 0, 10);
  EXPECT_EQ(min_pairwise_distance(a, a), 0.0);
  EXPECT_DOUBLE_EQ(min_pairwise_distance(a, line(0, 3, 1, 0, 10)), 3.0);
  EXPECT_THROW(min_pairwise_distance(a, line(0, 0, 1, 0, 9)), std::invalid_argument);
  EXPECT_THROW(min_pairwise_distance(Trajectory{}, Trajectory{}), std::invalid_argument);
}

// Both paths pass through (5, 0), at frames 5 and 2.
TEST(MinPairwiseDistance, CrossingAtDifferentFramesIsSynchronized) {
  const auto a = line(0, 0, 1, 0, 10);
  const auto b = line(5, -2, 0, 1, 10);
  double brute = INFINITY;
  for (std::size_t t = 0; t < a.size(); ++t) brute = std::min(brute, std::hypot(a[t].cx - b[t].cx, a[t].cy - b[t].cy));
  const double d = min_pairwise_distance(a, b);
  EXPECT_GT(d, 0.0);
  EXPECT_EQ(d, brute);
}

TEST(DistanceMatrix, SingleAgentIsZeroBlock) {
  const ModeSet m = mode_set_with(0, {0.5, 0.1, 0.1, 0.1, 0.1, 0.1}, 5);
  const auto d = build_distance_matrix(std::span(&m, 1));
  ASSERT_EQ(d.entries.size(), 6u);
  for (std::size_t r = 0; r < 6; ++r)
    for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(d.entries(r, c), 0.0);
}

TEST(DistanceMatrix, FarApartAndSymmetric) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  std::vector<ModeSet> modes(2);
  for (std::size_t a = 0; a < 2; ++a) {
    modes[a] = mode_set_with(a, {0.5, 0.1, 0.1, 0.1, 0.1, 0.1});
    for (std::size_t k = 0; k < 6; ++k)
      modes[a].trajectories[k] = line(a * 20.0 + jitter(rng), jitter(rng), jitter(rng) * 0.1, jitter(rng) * 0.1, 8);
  }
  const auto d = build_distance_matrix(modes);
  EXPECT_TRUE(d.entries.is_symmetric());
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_GE(d.entries(i, 6 + j), 10.0);
      EXPECT_EQ(d.entries(i, 6 + j), min_pairwise_distance(modes[0].trajectories[i], modes[1].trajectories[j]));
    }
}

TEST(DistanceMatrix, InconsistentHorizonsThrow) {
  std::vector<ModeSet> modes{mode_set_with(0, {1, 0, 0, 0, 0, 0}, 3), mode_set_with(1, {1, 0, 0, 0, 0, 0}, 4)};
  EXPECT_THROW(build_distance_matrix(modes), std::invalid_argument);
}

TEST(CollisionGraphBuild, WidthThreshold) {
  DistanceMatrix d{2, SquareMatrix<double>(12, 0.0)};
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) d.entries(i, 6 + j) = d.entries(6 + j, i) = 5.0;
  d.entries(0, 6) = d.entries(6, 0) = 1.9;
  d.entries(1, 7) = d.entries(7, 1) = 2.1;
  d.entries(2, 8) = d.entries(8, 2) = 2.0;
  const std::vector<double> widths{2.0, 2.0};
  const auto g = build_collision_graph(d, widths);
  EXPECT_FALSE(g.edge(0, 6));
  EXPECT_TRUE(g.edge(1, 7));
  EXPECT_FALSE(g.edge(2, 8));  // equality collides
  EXPECT_TRUE(g.adjacency().is_symmetric());
  for (std::size_t u = 0; u < 12; ++u)
    for (std::size_t v = 0; v < 12; ++v)
      if (agent_of(u) == agent_of(v)) { EXPECT_FALSE(g.edge(u, v)); }
  EXPECT_THROW(build_collision_graph(d, std::vector<double>{2.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(build_collision_graph(d, std::vector<double>{2.0}), std::invalid_argument);
}

TEST(CollisionGraphBuild, ConstructorValidates) {
  SquareMatrix<std::uint8_t> m(12, 0);
  m(0, 6) = 1;
  EXPECT_THROW(CollisionGraph(2, m), ValidationError);  // asymmetric
  m(6, 0) = 1;
  EXPECT_NO_THROW(CollisionGraph(2, m));
  m(0, 1) = m(1, 0) = 1;
  EXPECT_THROW(CollisionGraph(2, m), ValidationError);  // inside a block
  EXPECT_THROW(CollisionGraph(3, SquareMatrix<std::uint8_t>(12, 0)), ValidationError);
}

TEST(SubgraphDensity, Examples) {
  CollisionGraph g = CollisionGraph::empty(4);
  const std::vector<std::size_t> two{0, 6};
  EXPECT_EQ(subgraph_density(g, two), 0.0);
  g.set_edge(0, 6, true);
  EXPECT_EQ(subgraph_density(g, two), 1.0);

  const std::vector<std::size_t> four{0, 6, 12, 18};
  g.set_edge(0, 12, true);
  g.set_edge(0, 18, true);
  g.set_edge(6, 12, true);
  g.set_edge(6, 18, true);
  std::size_t ones = 0;
  for (auto a : four)
    for (auto b : four) ones += g.adjacency()(a, b);
  EXPECT_EQ(ones, 10u);
  EXPECT_DOUBLE_EQ(subgraph_density(g, four), 10.0 / 12.0);
  EXPECT_EQ(subgraph_density(g, std::vector<std::size_t>{3}), 1.0);
  EXPECT_THROW(subgraph_density(g, std::vector<std::size_t>{0, 0}), std::invalid_argument);
}

TEST(Degrees, Examples) {
  for (auto d : degrees(CollisionGraph::empty(1))) EXPECT_EQ(d, 0u);
  for (auto d : degrees(complete_graph(2))) EXPECT_EQ(d, 6u);
  std::mt19937_64 rng(9);
  const auto g = random_collision_graph(4, 0.5, rng);
  const auto deg = degrees(g);
  std::size_t edges = 0;
  for (std::size_t u = 0; u < g.n_vertices(); ++u)
    for (std::size_t v = u + 1; v < g.n_vertices(); ++v) edges += g.edge(u, v);
  EXPECT_EQ(std::accumulate(deg.begin(), deg.end(), std::size_t{0}), 2 * edges);
}

TEST(FindSelection, CompleteGraphTakesFastPath) {
  for (std::size_t n = 1; n <= 6; ++n) {
    SelectionSearchStats stats;
    const auto s = find_selection(complete_graph(n), {}, &stats);
    ASSERT_TRUE(s);
    EXPECT_EQ(*s, Selection::all_top1(n));
    EXPECT_TRUE(stats.fast_path);
    EXPECT_EQ(stats.recursive_calls, 0u);
  }
}

TEST(FindSelection, SwitchesSecondAgentMode) {
  CollisionGraph g = complete_graph(2);
  g.set_edge(0, 6, false);
  const auto s = find_selection(g);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->vertices, (std::vector<std::size_t>{0, 7}));
  EXPECT_EQ(ReferenceSearch(g, 0.95).run(), (std::vector<std::size_t>{0, 7}));
}

TEST(FindSelection, EmptyCrossEdgesFail) {
  SelectionSearchStats stats;
  EXPECT_FALSE(find_selection(CollisionGraph::empty(2), {}, &stats));
  EXPECT_GT(stats.recursive_calls, 0u);
  EXPECT_FALSE(stats.budget_exhausted);
  EXPECT_FALSE(ReferenceSearch(CollisionGraph::empty(2), 0.95).run());
}

TEST(FindSelection, BudgetExhaustionIsFailure) {
  SelectionOptions opts;
  opts.max_recursive_calls = 1;
  SelectionSearchStats stats;
  EXPECT_FALSE(find_selection(CollisionGraph::empty(3), opts, &stats));
  EXPECT_TRUE(stats.budget_exhausted);
}

TEST(FindSelection, LowerThresholdAdmitsDenseSubgraph) {
  // Three agents; agent 2 collides with agent 0 in every mode. No clique
  // exists, but 2 of 3 pairs (density 4/6) clears a 0.6 threshold.
  CollisionGraph g = complete_graph(3);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) g.set_edge(vertex_of(0, i), vertex_of(2, j), false);
  EXPECT_FALSE(find_selection(g, 0.95));
  const auto s = find_selection(g, 0.6);
  ASSERT_TRUE(s);
  EXPECT_NEAR(subgraph_density(g, s->vertices), 4.0 / 6.0, 1e-15);
  EXPECT_EQ(s->vertices, ReferenceSearch(g, 0.6).run());
}

TEST(FindSelection, MatchesReferenceTranscription) {
  std::mt19937_64 rng(77);
  const double probs[] = {0.3, 0.5, 0.7, 0.85, 0.9, 0.95, 1.0};
  const double thresholds[] = {0.95, 0.8, 0.6};
  int compared = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t n = 1 + rng() % 6;
    const double p = probs[rng() % std::size(probs)];
    const double th = thresholds[rng() % std::size(thresholds)];
    const auto g = random_collision_graph(n, p, rng);
    const auto got = find_selection(g, th);
    const auto want = ReferenceSearch(g, th).run();
    ASSERT_EQ(got.has_value(), want.has_value()) << "trial " << trial;
    if (got) { ASSERT_EQ(got->vertices, *want) << "trial " << trial; }
    ++compared;
  }
  EXPECT_EQ(compared, 3000);
}

TEST(FindSelection, SoundOnRandomGraphs) {
  std::mt19937_64 rng(123);
  const double probs[] = {0.3, 0.5, 0.7, 0.9, 1.0};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 5;
    const auto g = random_collision_graph(n, probs[rng() % 5], rng);
    const auto s = find_selection(g);
    if (!s) continue;
    ASSERT_TRUE(s->is_well_formed(n));
    const double density = subgraph_density(g, s->vertices);
    EXPECT_GE(density, 0.95);
    EXPECT_LE(count_collisions(g, *s), dense_collision_bound(n));
    if (density == 1.0) { EXPECT_EQ(count_collisions(g, *s), 0u); }
  }
}

TEST(DenseCollisionBound, MatchesFloor) {
  for (std::size_t n = 1; n <= 30; ++n)
    EXPECT_EQ(dense_collision_bound(n), static_cast<std::size_t>(std::floor(0.05 * n * (n - 1) / 2 + 1e-9))) << n;
  EXPECT_EQ(dense_collision_bound(6), 0u);
  EXPECT_EQ(dense_collision_bound(7), 1u);
}

// Relabeling agents keeps each block's internal mode order, so the fast-path
// decision and its output commute with the permutation. Past the fast path the
// greedy scan visits blocks in a different order and results may differ.
TEST(FindSelection, AgentPermutationEquivariance) {
  std::mt19937_64 rng(31);
  int fast = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 5;
    const auto g = random_collision_graph(n, trial % 2 ? 0.97 : 0.8, rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto pg = permute_agents(g, perm);
    SelectionSearchStats sa, sb;
    const auto a = find_selection(g, {}, &sa);
    const auto b = find_selection(pg, {}, &sb);
    ASSERT_EQ(sa.fast_path, sb.fast_path) << "trial " << trial;
    if (a) {
      Selection moved;
      moved.vertices.resize(n);
      for (std::size_t m = 0; m < n; ++m) moved.vertices[perm[m]] = vertex_of(perm[m], a->mode(m));
      EXPECT_EQ(subgraph_density(pg, moved.vertices), subgraph_density(g, a->vertices));
      if (sa.fast_path) {
        ++fast;
        EXPECT_EQ(b, moved) << "trial " << trial;
      }
    }
  }
  EXPECT_GT(fast, 0);
}

TEST(BruteForce, Extremes) {
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto all = brute_force_selection(complete_graph(n));
    EXPECT_EQ(all.collisions, 0u);
    EXPECT_EQ(all.selection, Selection::all_top1(n));
    const auto none = brute_force_selection(CollisionGraph::empty(n));
    EXPECT_EQ(none.collisions, n * (n - 1) / 2);
  }
  EXPECT_THROW(brute_force_selection(CollisionGraph::empty(8)), std::invalid_argument);
}

TEST(BruteForce, CountMatchesDensityRecount) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_collision_graph(4, 0.5, rng);
    const auto r = brute_force_selection(g);
    ASSERT_TRUE(r.selection.is_well_formed(4));
    const double density = subgraph_density(g, r.selection.vertices);
    const double missing = 6.0 - density * 12.0 / 2.0;
    EXPECT_NEAR(missing, static_cast<double>(r.collisions), 1e-12);
  }
}

// Oracle check of the oracle: a naive odometer over all 6^N selections.
TEST(BruteForce, MatchesOdometerEnumeration) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 4;
    const auto g = random_collision_graph(n, 0.6, rng);
    std::vector<std::size_t> digits(n, 0);
    std::size_t best = SIZE_MAX;
    std::vector<std::size_t> best_sel;
    while (true) {
      Selection s;
      for (std::size_t m = 0; m < n; ++m) s.vertices.push_back(vertex_of(m, digits[m]));
      const std::size_t c = count_collisions(g, s);
      if (c < best) {
        best = c;
        best_sel = s.vertices;
      }
      std::size_t pos = n;
      while (pos > 0 && ++digits[pos - 1] == 6) digits[--pos] = 0;
      if (pos == 0) break;
    }
    const auto r = brute_force_selection(g);
    EXPECT_EQ(r.collisions, best);
    EXPECT_EQ(r.selection.vertices, best_sel);
  }
}

TEST(FindSelection, CliqueResultsAgreeWithOracleAndSuccessRateIsReported) {
  std::mt19937_64 rng(500);
  int eligible = 0, found = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 4;
    const double p = 0.3 + 0.65 * unit_uniform(rng);
    const auto g = random_collision_graph(n, p, rng);
    const auto oracle = brute_force_selection(g);
    const auto s = find_selection(g);
    if (s && subgraph_density(g, s->vertices) == 1.0) { EXPECT_EQ(count_collisions(g, *s), 0u); }
    if (s) { EXPECT_GE(count_collisions(g, *s), oracle.collisions); }
    if (oracle.collisions != 0) continue;
    const auto deg = degrees(g);
    const bool degree_ok = std::all_of(oracle.selection.vertices.begin(), oracle.selection.vertices.end(),
                                       [&](std::size_t v) { return deg[v] + 1 >= n; });
    if (!degree_ok) continue;
    ++eligible;
    if (s && count_collisions(g, *s) == 0) ++found;
  }
  ASSERT_GT(eligible, 0);
  std::printf("heuristic found a collision-free selection on %d of %d eligible graphs (%.1f%%)\n", found, eligible,
              100.0 * found / eligible);
  RecordProperty("eligible", eligible);
  RecordProperty("found", found);
}

TEST(Selection, Layout) {
  EXPECT_EQ(vertex_of(2, 3), 15u);
  EXPECT_EQ(agent_of(15), 2u);
  EXPECT_EQ(mode_of(15), 3u);
  Selection s{{0, 7, 17}};
  EXPECT_TRUE(s.is_well_formed(3));
  EXPECT_EQ(s.mode(2), 5u);
  EXPECT_FALSE((Selection{{0, 5}}).is_well_formed(2));
}

TEST(ModeSetValidation, Contract) {
  EXPECT_NO_THROW(validate_mode_set(mode_set_with(0, {0.5, 0.15, 0.15, 0.08, 0.08, 0.04})));
  EXPECT_THROW(validate_mode_set(mode_set_with(0, {0.4, 0.1, 0.1, 0.1, 0.05, 0.05})), ContractViolation);
  EXPECT_THROW(validate_mode_set(mode_set_with(0, {0.1, 0.5, 0.1, 0.1, 0.1, 0.1})), ContractViolation);
  EXPECT_THROW(validate_mode_set(mode_set_with(0, {1.2, 0.0, 0.0, 0.0, 0.0, -0.2})), ContractViolation);
  auto m = mode_set_with(0, {1, 0, 0, 0, 0, 0}, 4);
  m.trajectories[3].pop_back();
  EXPECT_THROW(validate_mode_set(m), ContractViolation);
  EXPECT_THROW(validate_mode_set(mode_set_with(0, {1, 0, 0, 0, 0, 0}, 4), 5), ContractViolation);
}

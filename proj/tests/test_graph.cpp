#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "graphbandit/graph.hpp"
#include "graphbandit/rng.hpp"

using namespace graphbandit;

namespace {

bool bit(std::uint64_t mask, Vertex v) { return (mask >> v) & 1; }

std::vector<Vertex> members(std::uint64_t mask, std::size_t n) {
  std::vector<Vertex> out;
  for (Vertex v = 0; v < n; ++v)
    if (bit(mask, v)) out.push_back(v);
  return out;
}

bool brute_independent(const FeedbackGraph& g, std::uint64_t mask) {
  const auto m = members(mask, g.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = i + 1; j < m.size(); ++j)
      if (g.adjacent(m[i], m[j])) return false;
  return true;
}

std::size_t brute_gamma(const FeedbackGraph& g) {
  std::size_t best = g.size();
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << g.size()); ++mask) {
    const auto s = members(mask, g.size());
    if (s.size() < best && dominates(g, s)) best = s.size();
  }
  return best;
}

std::size_t brute_alpha(const FeedbackGraph& g) {
  std::size_t best = 0;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << g.size()); ++mask)
    if (brute_independent(g, mask)) best = std::max<std::size_t>(best, members(mask, g.size()).size());
  return best;
}

bool dominates_set(const FeedbackGraph& g, std::uint64_t s, std::uint64_t target) {
  for (Vertex v = 0; v < g.size(); ++v) {
    if (!bit(target, v)) continue;
    bool hit = false;
    for (Vertex u : g.neighbors(v)) hit = hit || bit(s, u);
    if (!hit) return false;
  }
  return true;
}

// phi by definition: for every maximal independent set I, enumerate all
// inclusion-minimal sets S dominating I, take the largest number of
// I-neighbors of any member of any such S, divide by |I|, minimize over I.
Ratio brute_phi(const FeedbackGraph& g) {
  const std::size_t n = g.size();
  const std::uint64_t all = std::uint64_t{1} << n;
  bool first = true;
  Ratio best{1, 1};
  for (std::uint64_t i_mask = 1; i_mask < all; ++i_mask) {
    if (!brute_independent(g, i_mask)) continue;
    bool maximal = true;
    for (Vertex v = 0; v < n && maximal; ++v)
      if (!bit(i_mask, v) && brute_independent(g, i_mask | (std::uint64_t{1} << v))) maximal = false;
    if (!maximal) continue;
    std::size_t delta = 0;
    for (std::uint64_t s = 1; s < all; ++s) {
      if (!dominates_set(g, s, i_mask)) continue;
      bool minimal = true;
      for (Vertex v = 0; v < n && minimal; ++v)
        if (bit(s, v) && dominates_set(g, s & ~(std::uint64_t{1} << v), i_mask)) minimal = false;
      if (!minimal) continue;
      for (Vertex v : members(s, n)) {
        std::size_t hits = 0;
        for (Vertex u : g.neighbors(v)) hits += bit(i_mask, u);
        delta = std::max(delta, hits);
      }
    }
    const Ratio r = Ratio::make(delta, members(i_mask, n).size());
    if (first || r < best) best = r;
    first = false;
  }
  return best;
}

}  // namespace

TEST(FeedbackGraph, AddsSelfLoopsAndSymmetricAdjacency) {
  const auto g = FeedbackGraph::build(3, {{0, 2}, {1, 2}});
  EXPECT_EQ(g.size(), 3u);
  const auto n2 = g.neighbors(2);
  EXPECT_EQ(std::vector<Vertex>(n2.begin(), n2.end()), (std::vector<Vertex>{0, 1, 2}));
  for (Vertex v = 0; v < 3; ++v) EXPECT_TRUE(g.adjacent(v, v));
  EXPECT_TRUE(g.adjacent(2, 0));
  EXPECT_TRUE(g.adjacent(0, 2));
  EXPECT_FALSE(g.adjacent(0, 1));
}

TEST(FeedbackGraph, SingleVertex) {
  const auto g = FeedbackGraph::build(1, std::span<const Edge>{});
  EXPECT_EQ(g.degree(0), 1u);
  EXPECT_TRUE(g.is_complete());
}

TEST(FeedbackGraph, DuplicateEdgesCollapse) {
  const auto g = FeedbackGraph::build(4, {{0, 1}, {1, 0}, {0, 1}});
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1}}));
  EXPECT_EQ(g.degree(0), 2u);
  EXPECT_EQ(g.degree(3), 1u);
}

TEST(FeedbackGraph, RejectsOutOfRangeEdgeNamingIt) {
  try {
    (void)FeedbackGraph::build(3, {{0, 3}});
    FAIL() << "expected GraphError";
  } catch (const GraphError& e) {
    EXPECT_NE(std::string(e.what()).find("(0,3)"), std::string::npos);
  }
  EXPECT_THROW((void)FeedbackGraph::build(0, std::span<const Edge>{}), GraphError);
}

TEST(Generators, Star) {
  const auto g = generate::star(8);
  EXPECT_EQ(g.size(), 9u);
  EXPECT_EQ(g.degree(0), 9u);
  for (Vertex v = 1; v < 9; ++v) EXPECT_EQ(g.degree(v), 2u);
}

TEST(Generators, BanditHasSelfLoopsOnly) {
  const auto g = generate::bandit(5);
  EXPECT_EQ(g.size(), 5u);
  EXPECT_TRUE(g.edges().empty());
  EXPECT_EQ(g.max_degree(), 1u);
}

TEST(Generators, Complete) {
  const auto g = generate::complete(6);
  EXPECT_TRUE(g.is_complete());
  EXPECT_EQ(g.edges().size(), 15u);
}

TEST(Generators, UnionOfStarsLayout) {
  const auto g = generate::union_of_stars({4, 1, 1, 1});
  EXPECT_EQ(g.size(), 11u);
  EXPECT_EQ(g.edges(), (std::vector<Edge>{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {5, 6}, {7, 8}, {9, 10}}));
}

TEST(Generators, ErdosRenyiDeterministicAndExtremes) {
  EXPECT_EQ(generate::erdos_renyi(12, 0.3, 9), generate::erdos_renyi(12, 0.3, 9));
  EXPECT_TRUE(generate::erdos_renyi(7, 1.0, 1).is_complete());
  EXPECT_TRUE(generate::erdos_renyi(7, 0.0, 1).edges().empty());
  EXPECT_THROW((void)generate::erdos_renyi(5, 1.5, 1), GraphError);
}

TEST(Generators, ErdosRenyiUsesOneUniformPerPair) {
  Rng rng(17);
  std::vector<Edge> expected;
  for (Vertex u = 0; u < 6; ++u)
    for (Vertex v = u + 1; v < 6; ++v)
      if (rng.uniform() < 0.4) expected.emplace_back(u, v);
  EXPECT_EQ(generate::erdos_renyi(6, 0.4, 17).edges(), expected);
}

TEST(Greedy, StarCenterOwnsEverything) {
  const auto d = greedy_dominating_set(generate::star(8));
  EXPECT_EQ(d.revealing, (std::vector<Vertex>{0}));
  for (Vertex v = 0; v < 9; ++v) EXPECT_EQ(d.owner[v], 0u);
}

TEST(Greedy, BanditEveryVertexRevealsItself) {
  const auto d = greedy_dominating_set(generate::bandit(5));
  EXPECT_EQ(d.revealing, (std::vector<Vertex>{0, 1, 2, 3, 4}));
  for (Vertex v = 0; v < 5; ++v) EXPECT_EQ(d.owner[v], v);
}

TEST(Greedy, UnionOfStarsHasFourStars) {
  const auto g = generate::union_of_stars({4, 1, 1, 1});
  const auto d = greedy_dominating_set(g);
  EXPECT_EQ(d.revealing, (std::vector<Vertex>{0, 5, 7, 9}));
  EXPECT_EQ(d.star_of(0), (std::vector<Vertex>{0, 1, 2, 3, 4}));
  EXPECT_EQ(exact_stats(g).gamma, 4u);
}

TEST(Greedy, TiesGoToLowestIndex) {
  // Path 0-1-2-3: vertices 1 and 2 tie at three and 1 wins; only 3 is left.
  const auto d = greedy_dominating_set(FeedbackGraph::build(4, {{0, 1}, {1, 2}, {2, 3}}));
  EXPECT_EQ(d.revealing, (std::vector<Vertex>{1, 3}));
  EXPECT_EQ(d.owner, (std::vector<Vertex>{1, 1, 1, 3}));
}

TEST(Greedy, ResidualDegreeCountsOnlyUncoveredNeighbors) {
  // After the hub 0 takes {0..4}, vertex 5 still has the largest full degree
  // but 6 and 7 cover more of the residual graph.
  const auto g = FeedbackGraph::build(
      9, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {5, 1}, {5, 2}, {5, 3}, {5, 6}, {6, 7}, {7, 8}});
  const auto d = greedy_dominating_set(g);
  EXPECT_EQ(d.revealing, (std::vector<Vertex>{0, 6, 8}));
  EXPECT_EQ(d.owner, (std::vector<Vertex>{0, 0, 0, 0, 0, 6, 6, 6, 8}));
  EXPECT_EQ(validate_decomposition(g, d), "");
}

TEST(Greedy, DecompositionPropertiesOnRandomGraphs) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t n = 1 + seed % 14;
    const double p = (seed % 3 + 1) * 0.2;
    const auto g = generate::erdos_renyi(n, p, seed);
    const auto d = greedy_dominating_set(g);
    ASSERT_EQ(validate_decomposition(g, d), "") << "seed " << seed;
    ASSERT_TRUE(dominates(g, d.revealing));
    std::vector<std::size_t> count(n, 0);
    for (Vertex v = 0; v < n; ++v) ++count[d.owner[v]];
    std::size_t total = 0;
    for (Vertex r : d.revealing) total += count[r];
    EXPECT_EQ(total, n);
    EXPECT_EQ(greedy_dominating_set(g), d);
    const auto s = exact_stats(g);
    EXPECT_LE(static_cast<double>(d.revealing.size()),
              (2.0 + std::log(static_cast<double>(g.max_degree()))) * static_cast<double>(s.gamma));
  }
}

TEST(Greedy, ValidatorCatchesBrokenDecompositions) {
  const auto g = generate::star(3);
  auto d = greedy_dominating_set(g);
  d.owner[2] = 1;
  EXPECT_NE(validate_decomposition(g, d), "");
  d = greedy_dominating_set(FeedbackGraph::build(4, {{0, 1}, {2, 3}}));
  d.owner[3] = 0;
  EXPECT_NE(validate_decomposition(FeedbackGraph::build(4, {{0, 1}, {2, 3}}), d), "");
}

TEST(ExactStats, Star) {
  const auto s = exact_stats(generate::star(8));
  EXPECT_EQ(s.gamma, 1u);
  EXPECT_EQ(s.alpha, 8u);
  EXPECT_EQ(s.phi, (Ratio{1, 1}));
  EXPECT_EQ(s.max_degree, 9u);
}

TEST(ExactStats, Complete) {
  const auto s = exact_stats(generate::complete(6));
  EXPECT_EQ(s.gamma, 1u);
  EXPECT_EQ(s.alpha, 1u);
  EXPECT_EQ(s.phi, (Ratio{1, 1}));
}

TEST(ExactStats, Bandit) {
  const auto s = exact_stats(generate::bandit(7));
  EXPECT_EQ(s.gamma, 7u);
  EXPECT_EQ(s.alpha, 7u);
  EXPECT_EQ(s.phi, (Ratio{1, 7}));
}

TEST(ExactStats, RefusesLargeGraphs) {
  EXPECT_THROW((void)exact_stats(generate::bandit(kExactStatsMaxVertices + 1)), GraphError);
}

TEST(ExactStats, MatchesBruteForceOracles) {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    const std::size_t n = 1 + seed % 10;
    const auto g = generate::erdos_renyi(n, 0.15 + 0.1 * static_cast<double>(seed % 5), 1000 + seed);
    const auto s = exact_stats(g);
    ASSERT_EQ(s.gamma, brute_gamma(g)) << "seed " << seed;
    ASSERT_EQ(s.alpha, brute_alpha(g)) << "seed " << seed;
    ASSERT_EQ(s.phi, brute_phi(g)) << "seed " << seed;
    EXPECT_LE(s.gamma, s.alpha);
    EXPECT_GT(s.phi.num, 0u);
    EXPECT_LE(s.phi.value(), 1.0);
  }
}

TEST(ExactStats, HubGraphPhiApproachesOne) {
  // A hub joined to k leaves plus a pendant path keeps phi close to 1 while gamma > 1.
  const auto g = FeedbackGraph::build(8, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {4, 5}, {5, 6}, {6, 7}});
  const auto s = exact_stats(g);
  EXPECT_EQ(s.phi, brute_phi(g));
  EXPECT_GT(s.gamma, 1u);
}

TEST(Ratio, ReducesAndOrders) {
  EXPECT_EQ(Ratio::make(4, 6), (Ratio{2, 3}));
  EXPECT_TRUE(Ratio::make(1, 3) < Ratio::make(1, 2));
  EXPECT_THROW((void)Ratio::make(1, 0), std::invalid_argument);
}

TEST(EdgeList, RoundTrip) {
  const auto g = generate::union_of_stars({4, 1, 1, 1});
  std::stringstream ss;
  write_edge_list(ss, g);
  EXPECT_EQ(read_edge_list(ss), g);
}

TEST(EdgeList, CommentsAndSelfLoops) {
  std::istringstream in("# switching-cost graph\n3\n\n0 2\n1 2\n2 2\n");
  EXPECT_EQ(read_edge_list(in), FeedbackGraph::build(3, {{0, 2}, {1, 2}}));
}

TEST(EdgeList, ErrorsNameTheLine) {
  auto message = [](const std::string& text) {
    std::istringstream in(text);
    try {
      (void)read_edge_list(in);
    } catch (const GraphError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message("3\n0 1\n0 5\n").find("line 3"), std::string::npos);
  EXPECT_NE(message("3\n0 x\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("abc\n").find("line 1"), std::string::npos);
  EXPECT_NE(message("3\n0 1 2\n").find("line 2"), std::string::npos);
  EXPECT_NE(message("# nothing\n").find("empty"), std::string::npos);
}

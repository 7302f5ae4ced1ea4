#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "graphbandit/rng.hpp"

namespace graphbandit {

using Vertex = std::size_t;
using Edge = std::pair<Vertex, Vertex>;

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Undirected feedback graph. Every vertex carries a self-loop, so playing a
/// vertex always reveals at least its own loss. Immutable once built.
class FeedbackGraph {
 public:
  /// Builds the graph from an edge list. Self-loops are added, duplicates and
  /// reversed duplicates collapse to one undirected edge.
  static FeedbackGraph build(std::size_t n, std::span<const Edge> edges) {
    if (n == 0) throw GraphError("feedback graph needs at least one vertex");
    std::vector<std::vector<Vertex>> adj(n);
    for (Vertex v = 0; v < n; ++v) adj[v].push_back(v);
    for (const auto& [u, v] : edges) {
      if (u >= n || v >= n) {
        throw GraphError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                         ") out of range for n=" + std::to_string(n));
      }
      adj[u].push_back(v);
      adj[v].push_back(u);
    }
    for (auto& nb : adj) {
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
    return FeedbackGraph(std::move(adj));
  }

  static FeedbackGraph build(std::size_t n, std::initializer_list<Edge> edges) {
    return build(n, std::span<const Edge>(edges.begin(), edges.size()));
  }

  std::size_t size() const noexcept { return adj_.size(); }

  /// Closed neighborhood N(v), sorted, including v itself.
  std::span<const Vertex> neighbors(Vertex v) const { return adj_.at(v); }

  bool adjacent(Vertex u, Vertex v) const {
    const auto& nb = adj_.at(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }

  /// |N(v)|, self-loop included.
  std::size_t degree(Vertex v) const { return adj_.at(v).size(); }

  std::size_t max_degree() const {
    std::size_t d = 0;
    for (const auto& nb : adj_) d = std::max(d, nb.size());
    return d;
  }

  bool is_complete() const { return max_degree() == size() && min_degree() == size(); }

  std::size_t min_degree() const {
    std::size_t d = size();
    for (const auto& nb : adj_) d = std::min(d, nb.size());
    return d;
  }

  /// Undirected edges u < v, lexicographic.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (Vertex u = 0; u < size(); ++u)
      for (Vertex v : adj_[u])
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  /// Closed neighborhood as a bitmask. Only valid for n <= 64.
  std::uint64_t neighbor_mask(Vertex v) const {
    std::uint64_t m = 0;
    for (Vertex u : adj_.at(v)) m |= std::uint64_t{1} << u;
    return m;
  }

  friend bool operator==(const FeedbackGraph&, const FeedbackGraph&) = default;

 private:
  explicit FeedbackGraph(std::vector<std::vector<Vertex>> adj) : adj_(std::move(adj)) {}

  std::vector<std::vector<Vertex>> adj_;
};

// -- Generators ---------------------------------------------------------------

namespace generate {

/// Vertex 0 is the revealing center, vertices 1..leaves are leaves.
inline FeedbackGraph star(std::size_t leaves) {
  std::vector<Edge> e;
  for (Vertex v = 1; v <= leaves; ++v) e.emplace_back(0, v);
  return FeedbackGraph::build(leaves + 1, e);
}

inline FeedbackGraph complete(std::size_t n) {
  std::vector<Edge> e;
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v) e.emplace_back(u, v);
  return FeedbackGraph::build(n, e);
}

/// Self-loops only: plain bandit feedback.
inline FeedbackGraph bandit(std::size_t n) { return FeedbackGraph::build(n, std::span<const Edge>{}); }

/// Disjoint stars laid out in consecutive blocks, each block's center first.
inline FeedbackGraph union_of_stars(std::span<const std::size_t> leaf_counts) {
  if (leaf_counts.empty()) throw GraphError("union_of_stars: no stars given");
  std::vector<Edge> e;
  Vertex next = 0;
  for (std::size_t leaves : leaf_counts) {
    const Vertex center = next++;
    for (std::size_t k = 0; k < leaves; ++k) e.emplace_back(center, next++);
  }
  return FeedbackGraph::build(next, e);
}

inline FeedbackGraph union_of_stars(std::initializer_list<std::size_t> leaf_counts) {
  return union_of_stars(std::span<const std::size_t>(leaf_counts.begin(), leaf_counts.size()));
}

/// G(n, p): one uniform per unordered pair, visited in lexicographic order.
inline FeedbackGraph erdos_renyi(std::size_t n, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw GraphError("erdos_renyi: p must lie in [0,1]");
  Rng rng(seed);
  std::vector<Edge> e;
  for (Vertex u = 0; u < n; ++u)
    for (Vertex v = u + 1; v < n; ++v)
      if (rng.uniform() < p) e.emplace_back(u, v);
  return FeedbackGraph::build(n, e);
}

}  // namespace generate

// -- Star decomposition -------------------------------------------------------

/// Dominating set R together with the revealing vertex that owns each vertex.
/// The owner classes partition V into stars centered at the members of R.
struct StarDecomposition {
  std::vector<Vertex> revealing;  // in selection order
  std::vector<Vertex> owner;      // owner[v] in revealing, adjacent to v

  bool is_revealing(Vertex v) const { return owner.at(v) == v; }

  /// Members of the star centered at r, r first.
  std::vector<Vertex> star_of(Vertex r) const {
    std::vector<Vertex> out{r};
    for (Vertex v = 0; v < owner.size(); ++v)
      if (owner[v] == r && v != r) out.push_back(v);
    return out;
  }

  friend bool operator==(const StarDecomposition&, const StarDecomposition&) = default;
};

/// Greedy dominating set. Repeatedly picks the residual vertex whose closed
/// neighborhood covers the most uncovered vertices (lowest index on ties),
/// assigns it and its uncovered neighbors to it, and drops them from the
/// residual graph.
inline StarDecomposition greedy_dominating_set(const FeedbackGraph& g) {
  const std::size_t n = g.size();
  std::vector<bool> covered(n, false);
  std::vector<std::size_t> residual_degree(n);
  for (Vertex v = 0; v < n; ++v) residual_degree[v] = g.degree(v);

  StarDecomposition d;
  d.owner.assign(n, n);
  std::size_t remaining = n;
  while (remaining > 0) {
    Vertex best = n;
    for (Vertex v = 0; v < n; ++v) {
      if (covered[v]) continue;
      if (best == n || residual_degree[v] > residual_degree[best]) best = v;
    }
    d.revealing.push_back(best);
    for (Vertex u : g.neighbors(best)) {
      if (covered[u]) continue;
      covered[u] = true;
      d.owner[u] = best;
      --remaining;
      for (Vertex w : g.neighbors(u)) --residual_degree[w];
    }
  }
  return d;
}

/// Checks the partition/domination invariants of a decomposition against g.
/// Returns an empty string when valid, otherwise a description of the first
/// violation found.
inline std::string validate_decomposition(const FeedbackGraph& g, const StarDecomposition& d) {
  const std::size_t n = g.size();
  if (d.owner.size() != n) return "owner map has wrong size";
  std::vector<bool> in_r(n, false);
  for (Vertex r : d.revealing) {
    if (r >= n) return "revealing vertex out of range";
    if (in_r[r]) return "revealing vertex listed twice";
    in_r[r] = true;
  }
  for (Vertex v = 0; v < n; ++v) {
    const Vertex o = d.owner[v];
    if (o >= n || !in_r[o]) return "vertex " + std::to_string(v) + " owned by a non-revealing vertex";
    if (!g.adjacent(v, o)) return "vertex " + std::to_string(v) + " not adjacent to its owner";
  }
  for (Vertex r : d.revealing)
    if (d.owner[r] != r) return "revealing vertex " + std::to_string(r) + " does not own itself";
  return {};
}

/// True when every vertex of V is in the closed neighborhood of some member of s.
inline bool dominates(const FeedbackGraph& g, std::span<const Vertex> s) {
  std::vector<bool> hit(g.size(), false);
  for (Vertex r : s)
    for (Vertex u : g.neighbors(r)) hit[u] = true;
  return std::all_of(hit.begin(), hit.end(), [](bool b) { return b; });
}

// -- Exact statistics ---------------------------------------------------------

/// Non-negative rational, kept reduced.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static Ratio make(std::uint64_t num, std::uint64_t den) {
    if (den == 0) throw std::invalid_argument("Ratio: zero denominator");
    const auto g = std::gcd(num, den);
    return g == 0 ? Ratio{0, 1} : Ratio{num / g, den / g};
  }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Ratio&, const Ratio&) = default;
  friend bool operator<(const Ratio& a, const Ratio& b) { return a.num * b.den < b.num * a.den; }
};

struct GraphStats {
  std::size_t gamma = 0;       // domination number
  std::size_t alpha = 0;       // independence number (self-loops ignored)
  Ratio phi;                   // min over maximal independent sets I of delta(S_I)/|I|
  std::size_t max_degree = 0;  // closed-neighborhood size
};

inline constexpr std::size_t kExactStatsMaxVertices = 20;

namespace detail {

inline std::vector<std::uint64_t> neighbor_masks(const FeedbackGraph& g) {
  std::vector<std::uint64_t> m(g.size());
  for (Vertex v = 0; v < g.size(); ++v) m[v] = g.neighbor_mask(v);
  return m;
}

/// Open neighborhoods: independence ignores self-loops.
inline std::vector<std::uint64_t> open_masks(const FeedbackGraph& g) {
  auto m = neighbor_masks(g);
  for (Vertex v = 0; v < g.size(); ++v) m[v] &= ~(std::uint64_t{1} << v);
  return m;
}

inline bool independent(std::uint64_t set, std::span<const std::uint64_t> open) {
  for (std::uint64_t rest = set; rest; rest &= rest - 1) {
    const auto v = static_cast<std::size_t>(std::countr_zero(rest));
    if (open[v] & set) return false;
  }
  return true;
}

}  // namespace detail

/// Exact gamma, alpha and phi by exhaustive enumeration over vertex subsets.
/// Refuses graphs with more than kExactStatsMaxVertices vertices.
///
/// For phi, the inner maximum over inclusion-minimal dominating sets of I is
/// taken vertex-wise: a vertex v with at least one neighbor in I belongs to the
/// inclusion-minimal dominator {v} + (I \ N(v)) of I, and a vertex with no
/// neighbor in I belongs to none. So delta(S_I) maxed over all minimal S_I is
/// the largest |N(v) & I| over V. Tests check this against direct enumeration.
inline GraphStats exact_stats(const FeedbackGraph& g) {
  const std::size_t n = g.size();
  if (n > kExactStatsMaxVertices) {
    throw GraphError("exact_stats: n=" + std::to_string(n) + " exceeds the exhaustive limit of " +
                     std::to_string(kExactStatsMaxVertices));
  }
  const auto closed = detail::neighbor_masks(g);
  const auto open = detail::open_masks(g);
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  const std::uint64_t subsets = std::uint64_t{1} << n;

  GraphStats s;
  s.max_degree = g.max_degree();
  s.gamma = n;
  s.phi = Ratio{1, 1};

  // dominated[mask] built incrementally from mask without its lowest bit.
  std::vector<std::uint32_t> dominated(subsets, 0);
  std::vector<std::uint8_t> indep(subsets, 0);
  indep[0] = 1;
  for (std::uint64_t mask = 1; mask < subsets; ++mask) {
    const auto low = static_cast<std::size_t>(std::countr_zero(mask));
    const std::uint64_t rest = mask & (mask - 1);
    dominated[mask] = dominated[rest] | static_cast<std::uint32_t>(closed[low]);
    indep[mask] = indep[rest] && !(open[low] & rest);
    const auto size = static_cast<std::size_t>(std::popcount(mask));
    if (dominated[mask] == full && size < s.gamma) s.gamma = size;
    if (indep[mask]) s.alpha = std::max(s.alpha, size);
  }

  bool first = true;
  for (std::uint64_t mask = 1; mask < subsets; ++mask) {
    if (!indep[mask]) continue;
    // Maximal: every outside vertex has an open neighbor inside.
    bool maximal = true;
    for (Vertex v = 0; v < n && maximal; ++v) {
      if (mask >> v & 1) continue;
      if (!(open[v] & mask)) maximal = false;
    }
    if (!maximal) continue;
    std::size_t delta = 0;
    for (Vertex v = 0; v < n; ++v)
      delta = std::max<std::size_t>(delta, static_cast<std::size_t>(std::popcount(closed[v] & mask)));
    const Ratio r = Ratio::make(delta, static_cast<std::uint64_t>(std::popcount(mask)));
    if (first || r < s.phi) s.phi = r;
    first = false;
  }
  return s;
}

// -- Edge-list text format ----------------------------------------------------

/// Reads `n` on the first non-empty line, then one `u v` pair per line.
/// Lines starting with '#' are comments. Errors name the offending line.
inline FeedbackGraph read_edge_list(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> n;
  std::vector<Edge> edges;
  auto fail = [&](const std::string& what) {
    throw GraphError("edge list line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    if (!n) {
      long long value = 0;
      if (!(ls >> value) || value <= 0) fail("expected a positive vertex count");
      std::string extra;
      if (ls >> extra) fail("unexpected token '" + extra + "' after vertex count");
      n = static_cast<std::size_t>(value);
      continue;
    }
    long long u = 0, v = 0;
    if (!(ls >> u >> v)) fail("expected two vertex indices");
    std::string extra;
    if (ls >> extra) fail("unexpected token '" + extra + "'");
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= *n || static_cast<std::size_t>(v) >= *n)
      fail("edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range for n=" + std::to_string(*n));
    edges.emplace_back(static_cast<Vertex>(u), static_cast<Vertex>(v));
  }
  if (!n) throw GraphError("edge list is empty");
  return FeedbackGraph::build(*n, edges);
}

inline void write_edge_list(std::ostream& out, const FeedbackGraph& g) {
  out << g.size() << '\n';
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

}  // namespace graphbandit

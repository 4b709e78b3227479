#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "numeric.hpp"

namespace elicit {

// Undirected simple graph; each edge stores a fixed orientation (lo, hi).
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<std::pair<int, int>>> adj;  // vertex -> (neighbor, edge id)

  static Graph make(int n, std::vector<std::pair<int, int>> raw_edges) {
    Graph g;
    g.n = n;
    std::set<std::pair<int, int>> seen;
    for (auto [a, b] : raw_edges) {
      if (a == b || a < 0 || b < 0 || a >= n || b >= n)
        throw std::invalid_argument("bad edge");
      auto e = std::minmax(a, b);
      if (seen.insert({e.first, e.second}).second) g.edges.push_back({e.first, e.second});
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.adj.assign(n, {});
    for (int i = 0; i < static_cast<int>(g.edges.size()); ++i) {
      auto [a, b] = g.edges[i];
      g.adj[a].push_back({b, i});
      g.adj[b].push_back({a, i});
    }
    return g;
  }

  int n_edges() const { return static_cast<int>(edges.size()); }

  int edge_id(int a, int b) const {
    auto e = std::minmax(a, b);
    auto it = std::lower_bound(edges.begin(), edges.end(), std::make_pair(e.first, e.second));
    if (it == edges.end() || *it != std::make_pair(e.first, e.second)) return -1;
    return static_cast<int>(it - edges.begin());
  }
};

inline Graph complete_graph(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.push_back({i, j});
  return Graph::make(n, std::move(e));
}

inline Graph path_graph(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
  return Graph::make(n, std::move(e));
}

// Cartesian product; vertex (i, j) -> i * g2.n + j (matching product_task's
// flat action indexing with the first factor slowest).
inline Graph cartesian_product(const Graph& g1, const Graph& g2) {
  std::vector<std::pair<int, int>> e;
  for (auto [a, b] : g1.edges)
    for (int j = 0; j < g2.n; ++j) e.push_back({a * g2.n + j, b * g2.n + j});
  for (auto [a, b] : g2.edges)
    for (int i = 0; i < g1.n; ++i) e.push_back({i * g2.n + a, i * g2.n + b});
  return Graph::make(g1.n * g2.n, std::move(e));
}

// component id per vertex, ids dense from 0
inline std::vector<int> connected_components(const Graph& g) {
  std::vector<int> comp(g.n, -1);
  int c = 0;
  for (int s = 0; s < g.n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{s};
    comp[s] = c;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (auto [w, e] : g.adj[v])
        if (comp[w] < 0) {
          comp[w] = c;
          stack.push_back(w);
        }
    }
    ++c;
  }
  return comp;
}

inline int n_components(const Graph& g) {
  auto comp = connected_components(g);
  return comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
}

// vertex-edge incidence with -1 at the edge's lo endpoint and +1 at hi
template <class S>
Mat<S> incidence_matrix(const Graph& g) {
  Mat<S> a = Mat<S>::Zero(g.n, g.n_edges());
  for (int e = 0; e < g.n_edges(); ++e) {
    a(g.edges[e].first, e) = S(-1);
    a(g.edges[e].second, e) = S(1);
  }
  return a;
}

// ---- blocks / cut vertices -----------------------------------------------------

struct BlockDecomposition {
  std::vector<std::vector<int>> blocks;  // edge ids, disjoint
  std::vector<int> cut_vertices;
  std::vector<int> block_of_edge;

  // vertices incident to the block's edges
  std::vector<int> block_vertices(const Graph& g, int z) const {
    std::set<int> vs;
    for (int e : blocks[z]) {
      vs.insert(g.edges[e].first);
      vs.insert(g.edges[e].second);
    }
    return {vs.begin(), vs.end()};
  }
};

// Iterative Tarjan lowpoint algorithm.
inline BlockDecomposition biconnected_components(const Graph& g) {
  BlockDecomposition out;
  out.block_of_edge.assign(g.n_edges(), -1);
  std::vector<int> disc(g.n, -1), low(g.n, 0), parent_edge(g.n, -1);
  std::vector<bool> is_cut(g.n, false);
  std::vector<int> edge_stack;
  int timer = 0;

  struct Frame {
    int v;
    size_t it;
    int children;
  };

  for (int root = 0; root < g.n; ++root) {
    if (disc[root] >= 0) continue;
    std::vector<Frame> stack{{root, 0, 0}};
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.it < g.adj[f.v].size()) {
        auto [w, e] = g.adj[f.v][f.it++];
        if (e == parent_edge[f.v]) continue;
        if (disc[w] < 0) {
          edge_stack.push_back(e);
          parent_edge[w] = e;
          disc[w] = low[w] = timer++;
          ++f.children;
          stack.push_back({w, 0, 0});
        } else if (disc[w] < disc[f.v]) {
          edge_stack.push_back(e);
          low[f.v] = std::min(low[f.v], disc[w]);
        }
      } else {
        int v = f.v;
        int children = f.children;
        stack.pop_back();
        if (stack.empty()) {
          if (children >= 2) is_cut[v] = true;
          continue;
        }
        int p = stack.back().v;
        low[p] = std::min(low[p], low[v]);
        if (low[v] >= disc[p]) {
          if (stack.size() > 1) is_cut[p] = true;  // root handled by child count
          std::vector<int> block;
          while (!edge_stack.empty()) {
            int e = edge_stack.back();
            edge_stack.pop_back();
            block.push_back(e);
            if (e == parent_edge[v]) break;
          }
          std::sort(block.begin(), block.end());
          for (int e : block) out.block_of_edge[e] = static_cast<int>(out.blocks.size());
          out.blocks.push_back(std::move(block));
        }
      }
    }
  }
  for (int v = 0; v < g.n; ++v)
    if (is_cut[v]) out.cut_vertices.push_back(v);
  // canonical block order: by smallest edge id
  std::vector<int> order(out.blocks.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return out.blocks[a] < out.blocks[b]; });
  std::vector<std::vector<int>> blocks;
  for (int idx : order) blocks.push_back(std::move(out.blocks[idx]));
  out.blocks = std::move(blocks);
  for (size_t z = 0; z < out.blocks.size(); ++z)
    for (int e : out.blocks[z]) out.block_of_edge[e] = static_cast<int>(z);
  return out;
}

// ---- cycles and minimum cycle basis ---------------------------------------------

// A simple cycle stored both as an edge set and as a closed vertex walk
// v0, v1, ..., vk = v0 (walk direction fixes the orientation of products).
struct Cycle {
  std::vector<int> edge_ids;  // sorted
  std::vector<int> vertices;  // closed walk, size = length + 1

  int length() const { return static_cast<int>(edge_ids.size()); }
};

namespace detail {

using Bits = std::vector<std::uint64_t>;

inline Bits make_bits(int n_edges) { return Bits((n_edges + 63) / 64, 0); }
inline void set_bit(Bits& b, int i) { b[i >> 6] |= (std::uint64_t(1) << (i & 63)); }
inline bool get_bit(const Bits& b, int i) {
  return (b[i >> 6] >> (i & 63)) & 1;
}
inline void xor_bits(Bits& a, const Bits& b) {
  for (size_t i = 0; i < a.size(); ++i) a[i] ^= b[i];
}
inline bool any_bits(const Bits& b) {
  for (auto w : b)
    if (w) return true;
  return false;
}
inline int lowest_bit(const Bits& b) {
  for (size_t i = 0; i < b.size(); ++i)
    if (b[i]) return static_cast<int>(i * 64 + std::countr_zero(b[i]));
  return -1;
}

// Reconstructs the closed walk when the edge set forms a single simple cycle.
inline std::optional<Cycle> cycle_from_edge_set(const Graph& g, const std::vector<int>& edge_ids) {
  if (edge_ids.size() < 3) return std::nullopt;
  std::map<int, std::vector<std::pair<int, int>>> inc;  // vertex -> (other, edge)
  for (int e : edge_ids) {
    auto [a, b] = g.edges[e];
    inc[a].push_back({b, e});
    inc[b].push_back({a, e});
  }
  for (const auto& [v, nb] : inc)
    if (nb.size() != 2) return std::nullopt;
  Cycle c;
  c.edge_ids = edge_ids;
  std::sort(c.edge_ids.begin(), c.edge_ids.end());
  int start = inc.begin()->first;
  int prev_edge = -1, v = start;
  c.vertices.push_back(start);
  for (size_t step = 0; step < edge_ids.size(); ++step) {
    auto& nb = inc[v];
    auto next = (nb[0].second != prev_edge) ? nb[0] : nb[1];
    v = next.first;
    prev_edge = next.second;
    c.vertices.push_back(v);
  }
  if (v != start) return std::nullopt;
  if (c.vertices.size() != edge_ids.size() + 1) return std::nullopt;
  return c;
}

struct Candidate {
  Bits bits;
  std::vector<int> edge_ids;
};

inline void add_candidate(const Graph& g, std::map<std::vector<int>, Candidate>& pool,
                          std::vector<int> edge_ids) {
  std::sort(edge_ids.begin(), edge_ids.end());
  edge_ids.erase(std::unique(edge_ids.begin(), edge_ids.end()), edge_ids.end());
  if (pool.count(edge_ids)) return;
  Candidate c;
  c.bits = make_bits(g.n_edges());
  for (int e : edge_ids) set_bit(c.bits, e);
  c.edge_ids = edge_ids;
  pool.emplace(std::move(edge_ids), std::move(c));
}

}  // namespace detail

// BFS tree from every source with smallest-index tie-breaking; used both for
// Horton candidates and fundamental cycles.
inline std::vector<int> bfs_parent_edges(const Graph& g, int src) {
  std::vector<int> parent(g.n, -1), order{src};
  std::vector<bool> seen(g.n, false);
  seen[src] = true;
  for (size_t qi = 0; qi < order.size(); ++qi) {
    int v = order[qi];
    for (auto [w, e] : g.adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        parent[w] = e;
        order.push_back(w);
      }
    }
  }
  return parent;
}

inline std::vector<int> tree_path_edges(const Graph& g, const std::vector<int>& parent, int v) {
  std::vector<int> path;
  while (parent[v] >= 0) {
    int e = parent[v];
    path.push_back(e);
    v = (g.edges[e].first == v) ? g.edges[e].second : g.edges[e].first;
  }
  return path;
}

// Minimum cycle basis: greedy GF(2) sieve over a candidate pool of all 3- and
// 4-cycles, Horton cycles, and fundamental cycles (the last guarantee a basis
// exists in the pool). Candidates are taken in order of increasing length.
inline std::vector<Cycle> minimum_cycle_basis(const Graph& g) {
  int dim = g.n_edges() - g.n + n_components(g);
  if (dim <= 0) return {};

  std::map<std::vector<int>, detail::Candidate> pool;

  // all triangles
  for (int e = 0; e < g.n_edges(); ++e) {
    auto [a, b] = g.edges[e];
    for (auto [w, e2] : g.adj[a]) {
      if (w == b) continue;
      int e3 = g.edge_id(w, b);
      if (e3 >= 0) detail::add_candidate(g, pool, {e, e2, e3});
    }
  }
  // all quadrilaterals: pairs of common neighbors of (u, w)
  for (int u = 0; u < g.n; ++u) {
    for (int w = u + 1; w < g.n; ++w) {
      std::vector<int> common;
      for (auto [x, ex] : g.adj[u])
        if (x != w && g.edge_id(x, w) >= 0) common.push_back(x);
      for (size_t i = 0; i < common.size(); ++i)
        for (size_t j = i + 1; j < common.size(); ++j) {
          int x = common[i], y = common[j];
          detail::add_candidate(
              g, pool, {g.edge_id(u, x), g.edge_id(x, w), g.edge_id(w, y), g.edge_id(y, u)});
        }
    }
  }
  // Horton cycles and fundamental cycles
  for (int v = 0; v < g.n; ++v) {
    auto parent = bfs_parent_edges(g, v);
    for (int e = 0; e < g.n_edges(); ++e) {
      auto [x, y] = g.edges[e];
      if (parent[x] == e || parent[y] == e) continue;
      if (x != v && parent[x] < 0) continue;  // different component
      if (y != v && parent[y] < 0) continue;
      auto px = tree_path_edges(g, parent, x);
      auto py = tree_path_edges(g, parent, y);
      detail::Bits bits = detail::make_bits(g.n_edges());
      for (int pe : px) detail::set_bit(bits, pe);
      for (int pe : py) {
        if (detail::get_bit(bits, pe))
          bits[pe >> 6] ^= (std::uint64_t(1) << (pe & 63));
        else
          detail::set_bit(bits, pe);
      }
      detail::set_bit(bits, e);
      std::vector<int> ids;
      for (int i = 0; i < g.n_edges(); ++i)
        if (detail::get_bit(bits, i)) ids.push_back(i);
      detail::add_candidate(g, pool, std::move(ids));
    }
  }

  std::vector<detail::Candidate> cands;
  cands.reserve(pool.size());
  for (auto& [k, c] : pool) cands.push_back(std::move(c));
  std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
    if (a.edge_ids.size() != b.edge_ids.size()) return a.edge_ids.size() < b.edge_ids.size();
    return a.edge_ids < b.edge_ids;
  });

  // greedy independence sieve (Gaussian elimination over GF(2))
  std::vector<std::pair<int, detail::Bits>> pivots;  // (pivot edge, reduced vector)
  std::vector<Cycle> basis;
  for (const auto& cand : cands) {
    if (static_cast<int>(basis.size()) == dim) break;
    detail::Bits reduced = cand.bits;
    for (const auto& [pe, pb] : pivots)
      if (detail::get_bit(reduced, pe)) detail::xor_bits(reduced, pb);
    if (!detail::any_bits(reduced)) continue;
    auto cyc = detail::cycle_from_edge_set(g, cand.edge_ids);
    if (!cyc) continue;  // not a simple cycle; a shorter simple one will cover it
    pivots.push_back({detail::lowest_bit(reduced), reduced});
    basis.push_back(std::move(*cyc));
  }
  if (static_cast<int>(basis.size()) != dim)
    throw std::runtime_error("cycle basis sieve failed to reach the kernel dimension");
  return basis;
}

inline int total_length(const std::vector<Cycle>& cycles) {
  int t = 0;
  for (const auto& c : cycles) t += c.length();
  return t;
}

// GF(2)-independence + spanning check: do `cycles` form a cycle basis of g?
inline bool is_cycle_basis(const Graph& g, const std::vector<Cycle>& cycles) {
  int dim = g.n_edges() - g.n + n_components(g);
  if (static_cast<int>(cycles.size()) != dim) return false;
  std::vector<std::pair<int, detail::Bits>> pivots;
  for (const auto& c : cycles) {
    detail::Bits bits = detail::make_bits(g.n_edges());
    for (int e : c.edge_ids) detail::set_bit(bits, e);
    for (const auto& [pe, pb] : pivots)
      if (detail::get_bit(bits, pe)) detail::xor_bits(bits, pb);
    if (!detail::any_bits(bits)) return false;
    pivots.push_back({detail::lowest_bit(bits), bits});
  }
  return true;
}

}  // namespace elicit

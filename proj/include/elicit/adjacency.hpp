#pragma once

#include "graph.hpp"
#include "lp.hpp"
#include "model.hpp"

namespace elicit {

// A belief at which exactly {a, b} are optimal, with the minimum strict
// margin over every excluded action.
template <class S>
struct AdjacencyWitness {
  Belief<S> p;
  S gap;
};

// Linear program: maximize eps subject to p in the simplex,
// p.(u(a)-u(b)) = 0 and p.(u(a)-u(c)) >= eps for all other c, eps <= 1.
// Adjacent iff the optimum is strictly positive (exact under Rational).
template <class S>
std::optional<AdjacencyWitness<S>> is_adjacent(const Task<S>& task, int a, int b) {
  if (a == b) throw std::invalid_argument("adjacency needs two distinct actions");
  if (a < 0 || b < 0 || a >= task.n_actions() || b >= task.n_actions())
    throw std::invalid_argument("unknown action");
  const int ns = task.n_states();
  const int na = task.n_actions();
  std::vector<int> others;
  for (int c = 0; c < na; ++c)
    if (c != a && c != b) others.push_back(c);

  // variables: p_0..p_{ns-1}, eps, slack per other, cap slack
  const int n_oth = static_cast<int>(others.size());
  const int nv = ns + 1 + n_oth + 1;
  const int nr = 2 + n_oth + 1;
  Mat<S> A = Mat<S>::Zero(nr, nv);
  Vec<S> bb = Vec<S>::Zero(nr);
  Vec<S> c = Vec<S>::Zero(nv);
  c(ns) = S(1);  // maximize eps

  for (int t = 0; t < ns; ++t) A(0, t) = S(1);
  bb(0) = S(1);
  for (int t = 0; t < ns; ++t) A(1, t) = task.u(a, t) - task.u(b, t);
  for (int i = 0; i < n_oth; ++i) {
    for (int t = 0; t < ns; ++t) A(2 + i, t) = task.u(a, t) - task.u(others[i], t);
    A(2 + i, ns) = S(-1);
    A(2 + i, ns + 1 + i) = S(-1);
  }
  A(nr - 1, ns) = S(1);
  A(nr - 1, nv - 1) = S(1);
  bb(nr - 1) = S(1);

  auto res = lp_maximize<S>(A, bb, c);
  if (res.status != LpResult<S>::Status::Optimal) return std::nullopt;
  S eps_floor = scalar_traits<S>::exact ? S(0) : S(1e-9);
  if (!(res.objective > eps_floor)) return std::nullopt;

  Vec<S> p = res.x.head(ns);
  Belief<S> belief(p);
  // actual margin at the witness, uncapped
  S gap(0);
  bool first = true;
  S va = expected_value<S>(belief, RowVec<S>(task.u.row(a)));
  for (int cc : others) {
    S margin = va - expected_value<S>(belief, RowVec<S>(task.u.row(cc)));
    if (first || margin < gap) gap = margin;
    first = false;
  }
  if (first) gap = res.objective;  // two-action task: no excluded action
  return AdjacencyWitness<S>{std::move(belief), gap};
}

template <class S>
std::optional<AdjacencyWitness<S>> is_adjacent(const Task<S>& task, const std::string& a,
                                               const std::string& b) {
  return is_adjacent(task, task.action_index(a), task.action_index(b));
}

// The task's adjacency graph plus its block decomposition and a minimum cycle
// basis; matrix edge lengths and the potential attach in edge_flow.hpp.
template <class S>
struct AdjacencyGraph {
  Graph topo;
  std::vector<std::map<int, AdjacencyWitness<S>>> witness;  // [lo][hi]
  BlockDecomposition blocks;
  std::vector<Cycle> mcb;
  std::vector<int> component;  // per vertex

  const AdjacencyWitness<S>& witness_for(int a, int b) const {
    auto [lo, hi] = std::minmax(a, b);
    return witness.at(lo).at(hi);
  }
};

template <class S>
AdjacencyGraph<S> build_graph(const Task<S>& task) {
  task.validate();
  const int na = task.n_actions();
  AdjacencyGraph<S> g;
  g.witness.resize(na);
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < na; ++a)
    for (int b = a + 1; b < na; ++b) {
      // product tasks: actions differing in 2+ factors are never adjacent
      if (task.product) {
        int diffs = 0;
        for (size_t i = 0; i < task.product->factors.size(); ++i)
          if (task.product->factor_action_index(a, static_cast<int>(i)) !=
              task.product->factor_action_index(b, static_cast<int>(i)))
            ++diffs;
        if (diffs > 1) continue;
      }
      if (auto w = is_adjacent(task, a, b)) {
        edges.push_back({a, b});
        g.witness[a].emplace(b, std::move(*w));
      }
    }
  g.topo = Graph::make(na, std::move(edges));
  g.blocks = biconnected_components(g.topo);
  g.mcb = minimum_cycle_basis(g.topo);
  g.component = connected_components(g.topo);
  return g;
}

// Factor in which the endpoints of a product-graph edge differ (-1 if none).
template <class S>
int edge_factor(const Task<S>& task, const Graph& topo, int edge_id) {
  if (!task.product) return -1;
  auto [a, b] = topo.edges[edge_id];
  for (size_t i = 0; i < task.product->factors.size(); ++i)
    if (task.product->factor_action_index(a, static_cast<int>(i)) !=
        task.product->factor_action_index(b, static_cast<int>(i)))
      return static_cast<int>(i);
  return -1;
}

// Structured MCB for product tasks: fiber copies of the factor bases plus
// cross squares, sieved greedily by length and validated against the kernel
// dimension.
template <class S>
std::vector<Cycle> structured_mcb(const Task<S>& task, const AdjacencyGraph<S>& g) {
  if (!task.product) throw std::invalid_argument("structured_mcb needs a product task");
  const auto& ps = *task.product;
  const int nf = static_cast<int>(ps.factors.size());
  const Graph& topo = g.topo;

  int dim = topo.n_edges() - topo.n + n_components(topo);
  if (dim <= 0) return {};

  std::map<std::vector<int>, detail::Candidate> pool;

  // fiber copies of each factor graph's MCB
  for (int i = 0; i < nf; ++i) {
    auto gi = build_graph(ps.factors[i]);
    int nai = ps.factors[i].n_actions();
    // enumerate assignments of the other coordinates
    int n_other = 1;
    for (int k = 0; k < nf; ++k)
      if (k != i) n_other *= ps.factors[k].n_actions();
    for (int rest = 0; rest < n_other; ++rest) {
      // decode `rest` into the other coordinates
      std::vector<int> coord(nf, 0);
      int r = rest;
      for (int k = nf - 1; k >= 0; --k) {
        if (k == i) continue;
        int sz = ps.factors[k].n_actions();
        coord[k] = r % sz;
        r /= sz;
      }
      auto flat_of = [&](int vi) {
        coord[i] = vi;
        int flat = 0;
        for (int k = 0; k < nf; ++k) flat += coord[k] * ps.action_stride[k];
        return flat;
      };
      for (const auto& cyc : gi.mcb) {
        std::vector<int> ids;
        bool ok = true;
        for (size_t s = 0; s + 1 < cyc.vertices.size(); ++s) {
          int e = topo.edge_id(flat_of(cyc.vertices[s]), flat_of(cyc.vertices[s + 1]));
          if (e < 0) {
            ok = false;
            break;
          }
          ids.push_back(e);
        }
        if (ok) detail::add_candidate(topo, pool, std::move(ids));
      }
      (void)nai;
    }
  }
  // cross squares: an edge in one factor direction plus an incident edge in
  // another, closed off by the two translated copies
  for (int e = 0; e < topo.n_edges(); ++e) {
    int fi = edge_factor(task, topo, e);
    if (fi < 0) continue;
    auto [a1, b1] = topo.edges[e];
    for (auto [w, e2] : topo.adj[a1]) {
      int fj = edge_factor(task, topo, e2);
      if (fj < 0 || fj == fi) continue;
      int dj = ps.factor_action_index(w, fj) - ps.factor_action_index(a1, fj);
      int b1j = b1 + dj * ps.action_stride[fj];
      int e3 = topo.edge_id(b1, b1j), e4 = topo.edge_id(b1j, w);
      if (e3 >= 0 && e4 >= 0) detail::add_candidate(topo, pool, {e, e2, e3, e4});
    }
  }

  std::vector<detail::Candidate> cands;
  for (auto& [k, c] : pool) cands.push_back(std::move(c));
  std::stable_sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
    if (a.edge_ids.size() != b.edge_ids.size()) return a.edge_ids.size() < b.edge_ids.size();
    return a.edge_ids < b.edge_ids;
  });

  std::vector<std::pair<int, detail::Bits>> pivots;
  std::vector<Cycle> basis;
  for (const auto& cand : cands) {
    if (static_cast<int>(basis.size()) == dim) break;
    detail::Bits reduced = cand.bits;
    for (const auto& [pe, pb] : pivots)
      if (detail::get_bit(reduced, pe)) detail::xor_bits(reduced, pb);
    if (!detail::any_bits(reduced)) continue;
    auto cyc = detail::cycle_from_edge_set(topo, cand.edge_ids);
    if (!cyc) continue;
    pivots.push_back({detail::lowest_bit(reduced), reduced});
    basis.push_back(std::move(*cyc));
  }
  if (static_cast<int>(basis.size()) != dim)
    throw std::runtime_error("structured basis does not span the cycle space");
  return basis;
}

}  // namespace elicit

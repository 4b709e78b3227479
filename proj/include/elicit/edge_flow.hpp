#pragma once

#include "adjacency.hpp"
#include "linalg.hpp"

namespace elicit {

// Projection of each (already centered) row onto the orthogonal complement of
// span(delta) inside the zero-sum hyperplane.
template <class S>
Mat<S> project_rows_perp(const Mat<S>& centered_rows, const RowVec<S>& delta_row) {
  S nn = delta_row.squaredNorm();
  if (nn == S(0)) return centered_rows;
  Mat<S> out = centered_rows;
  for (Eigen::Index j = 0; j < out.rows(); ++j) {
    S coef = (RowVec<S>(out.row(j)) * delta_row.transpose())(0, 0) / nn;
    out.row(j) -= coef * delta_row;
  }
  return out;
}

template <class S>
struct EdgeLengthResult {
  std::optional<Mat<S>> w;  // maps projected rows of X(a) to those of X(b)
  S residual = S(0);        // nonzero when no exact w exists
  bool rank_deficient = false;
};

// Matrix edge length for an adjacent pair (a, b): the unique w with
// projected bar X(b) = w . projected bar X(a) when the projection of bar X(a)
// has full row rank m.
template <class S>
EdgeLengthResult<S> edge_length(const Task<S>& task, const QuestionProfile<S>& x, int a,
                                int b) {
  RowVec<S> d = delta(task, a, b);
  Mat<S> xa = project_rows_perp<S>(project_bar_rows<S>(x.X[a]), d);
  Mat<S> xb = project_rows_perp<S>(project_bar_rows<S>(x.X[b]), d);
  if (matrix_rank<S>(xa) < x.m) return {std::nullopt, S(0), true};
  auto sol = solve_row_map<S>(xa, xb);
  if (!sol.full_row_rank) return {std::nullopt, S(0), true};
  return {std::move(sol.w), sol.residual, false};
}

// Per-edge lengths in the stored (lo -> hi) orientation; w(hi, lo) is the
// inverse.
template <class S>
struct EdgeFlow {
  std::vector<EdgeLengthResult<S>> lengths;  // per edge id
  bool all_defined = false;
  S max_residual = S(0);

  // oriented length from `from` to `to` along edge id e
  std::optional<Mat<S>> oriented(const Graph& g, int e, int from, int to) const {
    if (!lengths[e].w) return std::nullopt;
    if (g.edges[e] == std::make_pair(std::min(from, to), std::max(from, to))) {
      if (from < to) return lengths[e].w;
      return try_invert(*lengths[e].w);
    }
    return std::nullopt;
  }
};

template <class S>
EdgeFlow<S> compute_edge_lengths(const Task<S>& task, const QuestionProfile<S>& x,
                                 const AdjacencyGraph<S>& g) {
  EdgeFlow<S> flow;
  flow.lengths.resize(g.topo.n_edges());
  flow.all_defined = true;
  for (int e = 0; e < g.topo.n_edges(); ++e) {
    auto [a, b] = g.topo.edges[e];
    flow.lengths[e] = edge_length(task, x, a, b);
    if (!flow.lengths[e].w)
      flow.all_defined = false;
    else if (flow.lengths[e].residual > flow.max_residual)
      flow.max_residual = flow.lengths[e].residual;
  }
  return flow;
}

// Ordered product along a closed walk v0, v1, ..., vn = v0:
// w(v_{n-1}, v_n) ... w(v0, v1). Reversing the walk inverts the product.
template <class S>
Mat<S> cycle_product(const EdgeFlow<S>& flow, const Graph& g, const Cycle& cycle) {
  int m = -1;
  for (const auto& l : flow.lengths)
    if (l.w) {
      m = static_cast<int>(l.w->rows());
      break;
    }
  if (m < 0) throw std::invalid_argument("no defined edge lengths");
  Mat<S> prod = Mat<S>::Identity(m, m);
  for (size_t i = 0; i + 1 < cycle.vertices.size(); ++i) {
    int from = cycle.vertices[i], to = cycle.vertices[i + 1];
    int e = g.edge_id(from, to);
    if (e < 0) throw std::invalid_argument("cycle uses a non-edge");
    auto w = flow.oriented(g, e, from, to);
    if (!w) throw std::invalid_argument("cycle crosses an undefined or singular edge length");
    prod = (*w) * prod;
  }
  return prod;
}

// ---- potential ----------------------------------------------------------------

template <class S>
struct PotentialResult {
  bool ok = false;
  std::vector<Mat<S>> gamma;   // per vertex, identity at each component reference
  std::vector<int> reference;  // per component id
  std::optional<Cycle> obstruction_cycle;
  Mat<S> obstruction_product;
  std::string error;
};

// Kirchhoff construction: spanning-tree propagation from each component's
// reference plus a consistency check on every non-tree edge. Fails with the
// offending fundamental cycle and its product when the flow is not
// integrable, or with an error when a length is undefined/singular.
template <class S>
PotentialResult<S> build_potential(const Graph& g, const EdgeFlow<S>& flow, int m,
                                   const std::vector<int>& component,
                                   std::vector<int> reference = {}) {
  PotentialResult<S> out;
  int n_comp = component.empty() ? 0 : *std::max_element(component.begin(), component.end()) + 1;
  if (reference.empty()) {
    reference.assign(n_comp, -1);
    for (int v = 0; v < g.n; ++v)
      if (reference[component[v]] < 0) reference[component[v]] = v;
  }
  out.reference = reference;
  out.gamma.assign(g.n, Mat<S>());
  std::vector<int> parent_edge(g.n, -1), parent(g.n, -1);
  S tol = scalar_traits<S>::exact ? S(0) : scalar_traits<S>::potential_tol();

  for (int c = 0; c < n_comp; ++c) {
    int root = reference[c];
    out.gamma[root] = Mat<S>::Identity(m, m);
    std::vector<int> order{root};
    std::vector<bool> seen(g.n, false);
    seen[root] = true;
    for (size_t qi = 0; qi < order.size(); ++qi) {
      int v = order[qi];
      for (auto [w, e] : g.adj[v]) {
        if (seen[w]) continue;
        auto len = flow.oriented(g, e, v, w);
        if (!len) {
          out.error = "undefined or singular edge length on edge (" + std::to_string(v) +
                      "," + std::to_string(w) + ")";
          return out;
        }
        out.gamma[w] = (*len) * out.gamma[v];
        if (!is_invertible(out.gamma[w])) {
          out.error = "potential became singular at vertex " + std::to_string(w);
          return out;
        }
        seen[w] = true;
        parent_edge[w] = e;
        parent[w] = v;
        order.push_back(w);
      }
    }
  }

  // non-tree edges must satisfy w(a,b) = Gamma(b) Gamma(a)^-1
  for (int e = 0; e < g.n_edges(); ++e) {
    auto [a, b] = g.edges[e];
    if (parent_edge[a] == e || parent_edge[b] == e) continue;
    auto len = flow.oriented(g, e, a, b);
    if (!len) {
      out.error = "undefined or singular edge length on edge (" + std::to_string(a) + "," +
                  std::to_string(b) + ")";
      return out;
    }
    Mat<S> expected = out.gamma[b] * (*try_invert(out.gamma[a]));
    if (max_abs(Mat<S>((*len) - expected)) > tol) {
      // fundamental cycle: tree path a -> b closed by edge (b, a)
      std::vector<int> pa{a}, pb{b};
      for (int v = a; parent[v] >= 0; v = parent[v]) pa.push_back(parent[v]);
      for (int v = b; parent[v] >= 0; v = parent[v]) pb.push_back(parent[v]);
      while (pa.size() > 1 && pb.size() > 1 && pa[pa.size() - 2] == pb[pb.size() - 2]) {
        pa.pop_back();
        pb.pop_back();
      }
      Cycle cyc;
      cyc.vertices = pa;  // a ... lca
      for (auto it = pb.rbegin() + 1; it != pb.rend(); ++it) cyc.vertices.push_back(*it);
      cyc.vertices.push_back(a);  // close over edge (b, a)
      for (size_t i = 0; i + 1 < cyc.vertices.size(); ++i)
        cyc.edge_ids.push_back(g.edge_id(cyc.vertices[i], cyc.vertices[i + 1]));
      std::sort(cyc.edge_ids.begin(), cyc.edge_ids.end());
      out.obstruction_product = cycle_product(flow, g, cyc);
      out.obstruction_cycle = std::move(cyc);
      out.error = "cycle product differs from identity";
      return out;
    }
  }
  out.ok = true;
  return out;
}

// ---- assumption checks -----------------------------------------------------------

// Elementary cycle length strictly below |states| - (m - 1).
inline std::vector<bool> check_assumption_cycle_length(const std::vector<Cycle>& mcb,
                                                       int n_states, int m) {
  std::vector<bool> ok;
  ok.reserve(mcb.size());
  for (const auto& c : mcb) ok.push_back(c.length() < n_states - (m - 1));
  return ok;
}

// Rank of the payoff-difference family along each cycle equals |C| - 1.
template <class S>
std::vector<bool> check_assumption_independence(const Task<S>& task,
                                                const std::vector<Cycle>& mcb) {
  std::vector<bool> ok;
  for (const auto& c : mcb) {
    Mat<S> deltas(c.length(), task.n_states());
    for (int i = 0; i < c.length(); ++i)
      deltas.row(i) = delta(task, c.vertices[i], c.vertices[i + 1]);
    ok.push_back(matrix_rank<S>(deltas) == c.length() - 1);
  }
  return ok;
}

// Product variant: cross-task 4-cycles need rank 2, within-task cycles
// rank |C| - 1.
template <class S>
std::vector<bool> check_assumption_product(const Task<S>& task, const AdjacencyGraph<S>& g,
                                           const std::vector<Cycle>& mcb) {
  if (!task.product) throw std::invalid_argument("product assumption needs a product task");
  std::vector<bool> ok;
  for (const auto& c : mcb) {
    std::set<int> factors;
    for (int e : c.edge_ids) factors.insert(edge_factor(task, g.topo, e));
    Mat<S> deltas(c.length(), task.n_states());
    for (int i = 0; i < c.length(); ++i)
      deltas.row(i) = delta(task, c.vertices[i], c.vertices[i + 1]);
    int want = factors.size() >= 2 ? 2 : c.length() - 1;
    ok.push_back(matrix_rank<S>(deltas) == want);
  }
  return ok;
}

// ---- perturbation calibration ------------------------------------------------------

template <class S>
struct PerturbationResult {
  bool ok = false;
  EdgeFlow<S> flow;
  Mat<S> t;  // the direction used
  std::vector<int> undefined_edges;
  std::string error;
};

namespace detail {

// centered row lies outside span of the cycle's deltas, for every MCB cycle
template <class S>
bool t_row_admissible(const Task<S>& task, const std::vector<Cycle>& mcb,
                      const RowVec<S>& row) {
  RowVec<S> centered = project_bar<S>(row);
  for (const auto& c : mcb) {
    Mat<S> span(c.length() + 1, task.n_states());
    for (int i = 0; i < c.length(); ++i)
      span.row(i) = delta(task, c.vertices[i], c.vertices[i + 1]);
    span.row(c.length()) = centered;
    Mat<S> base = span.topRows(c.length());
    if (matrix_rank<S>(span) == matrix_rank<S>(base)) return false;
  }
  return true;
}

}  // namespace detail

// Chooses t with independent rows, each centered row outside every elementary
// cycle's delta span: random rational draws, then a deterministic Vandermonde
// ladder.
template <class S>
Mat<S> choose_perturbation_direction(const Task<S>& task, const std::vector<Cycle>& mcb,
                                     int m, std::uint64_t seed = 12345) {
  const int ns = task.n_states();
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 64; ++attempt) {
    Mat<S> t = random_matrix<S>(rng, m, ns, 9, 4);
    bool ok = matrix_rank<S>(t) == m;
    for (int j = 0; ok && j < m; ++j)
      ok = detail::t_row_admissible(task, mcb, RowVec<S>(t.row(j)));
    if (ok) return t;
  }
  for (int base = 2; base < 64; ++base) {
    Mat<S> t(m, ns);
    for (int j = 0; j < m; ++j) {
      S x = S(base + j);
      S pw(1);
      for (int k = 0; k < ns; ++k) {
        t(j, k) = pw;
        pw *= x;
      }
    }
    bool ok = matrix_rank<S>(t) == m;
    for (int j = 0; ok && j < m; ++j)
      ok = detail::t_row_admissible(task, mcb, RowVec<S>(t.row(j)));
    if (ok) return t;
  }
  throw std::runtime_error("no admissible perturbation direction found");
}

// Calibrates rank-deficient edge lengths as the limit of lengths of
// X + mu eps t along eps in {1e-2, 1e-3, 1e-4}; pairwise Richardson
// extrapolations must agree within 1e-6 or the edge is left undefined.
template <class S>
PerturbationResult<S> perturb_edge_lengths(const Task<S>& task, const QuestionProfile<S>& x,
                                           const std::vector<Mat<S>>& mu,
                                           const AdjacencyGraph<S>& g,
                                           const EdgeFlow<S>& base_flow,
                                           std::uint64_t seed = 12345) {
  PerturbationResult<S> out;
  auto a1 = check_assumption_cycle_length(g.mcb, task.n_states(), x.m);
  for (bool ok : a1)
    if (!ok) {
      out.error =
          "cycle-length assumption fails: an elementary cycle is not shorter than "
          "|states| - (m - 1); perturbation calibration refused";
      return out;
    }
  for (const auto& m_a : mu)
    if (!is_invertible(m_a)) {
      out.error = "perturbation matrix mu(a) is singular";
      return out;
    }

  out.t = choose_perturbation_direction<S>(task, g.mcb, x.m, seed);
  const std::array<S, 3> ladder = {S(1) / S(100), S(1) / S(1000), S(1) / S(10000)};

  out.flow = base_flow;
  for (int e = 0; e < g.topo.n_edges(); ++e) {
    if (base_flow.lengths[e].w) continue;  // exact value stands
    auto [a, b] = g.topo.edges[e];
    std::array<Mat<S>, 3> w_eps;
    bool defined = true;
    for (int k = 0; k < 3 && defined; ++k) {
      QuestionProfile<S> xe = x;
      for (int act = 0; act < task.n_actions(); ++act)
        xe.X[act] += mu[act] * (ladder[k] * out.t);
      auto len = edge_length(task, xe, a, b);
      if (!len.w || len.residual != S(0)) {
        // inexact perturbed solves only block the limit when large
        if (!len.w || to_double(len.residual) > 1e-9) defined = false;
      }
      if (len.w) w_eps[k] = *len.w;
    }
    if (defined) {
      // Richardson tableau: first-order extrapolant from the two finest
      // rungs, then the second-order one; successive orders must agree.
      auto richardson = [&](int i, int j) {
        return Mat<S>((ladder[i] * w_eps[j] - ladder[j] * w_eps[i]) / (ladder[i] - ladder[j]));
      };
      Mat<S> e23 = richardson(1, 2);
      Mat<S> value = Mat<S>::Zero(x.m, x.m);  // quadratic extrapolation to eps = 0
      for (int i = 0; i < 3; ++i) {
        S num(1), den(1);
        for (int j = 0; j < 3; ++j) {
          if (i == j) continue;
          num *= -ladder[j];
          den *= ladder[i] - ladder[j];
        }
        value += (num / den) * w_eps[i];
      }
      if (to_double(max_abs(Mat<S>(value - e23))) <= 1e-6) {
        out.flow.lengths[e] = {value, S(0), false};
        continue;
      }
    }
    out.undefined_edges.push_back(e);
  }
  out.ok = out.undefined_edges.empty();
  out.flow.all_defined = out.ok;
  if (!out.ok) out.error = "perturbed edge lengths did not converge on every edge";
  return out;
}

}  // namespace elicit

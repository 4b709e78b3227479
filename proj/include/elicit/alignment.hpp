#pragma once

#include <variant>

#include "certificate.hpp"
#include "edge_flow.hpp"

namespace elicit {

// ---- group structure per alignment kind ------------------------------------------

struct GroupSpec {
  int task_index = -1;       // -1: multiplies the full task payoff
  std::vector<int> members;  // action ids covered
  std::vector<int> edges;    // adjacency edges pinning this group's lambda
};

template <class S>
std::vector<GroupSpec> build_group_specs(const Task<S>& task, const AdjacencyGraph<S>& g,
                                         CertKind kind) {
  std::vector<GroupSpec> out;
  switch (kind) {
    case CertKind::Joint:
    case CertKind::Individual: {
      int nc = g.component.empty() ? 0
                                   : *std::max_element(g.component.begin(), g.component.end()) + 1;
      out.resize(nc);
      for (int v = 0; v < g.topo.n; ++v) out[g.component[v]].members.push_back(v);
      for (int e = 0; e < g.topo.n_edges(); ++e)
        out[g.component[g.topo.edges[e].first]].edges.push_back(e);
      break;
    }
    case CertKind::Blockwise: {
      for (size_t z = 0; z < g.blocks.blocks.size(); ++z) {
        GroupSpec spec;
        spec.edges = g.blocks.blocks[z];
        spec.members = g.blocks.block_vertices(g.topo, static_cast<int>(z));
        out.push_back(std::move(spec));
      }
      // vertices incident to no block (isolated actions) get their own group
      std::vector<bool> covered(g.topo.n, false);
      for (const auto& spec : out)
        for (int v : spec.members) covered[v] = true;
      for (int v = 0; v < g.topo.n; ++v)
        if (!covered[v]) out.push_back(GroupSpec{-1, {v}, {}});
      break;
    }
    case CertKind::Taskwise: {
      if (!task.product)
        throw std::invalid_argument("taskwise alignment needs a product task");
      int nf = static_cast<int>(task.product->factors.size());
      out.resize(nf);
      for (int i = 0; i < nf; ++i) {
        out[i].task_index = i;
        for (int v = 0; v < g.topo.n; ++v) out[i].members.push_back(v);
      }
      for (int e = 0; e < g.topo.n_edges(); ++e) {
        int f = edge_factor(task, g.topo, e);
        if (f >= 0) out[f].edges.push_back(e);
      }
      break;
    }
    case CertKind::TaskBlockwise: {
      if (!task.product)
        throw std::invalid_argument("task-block-wise alignment needs a product task");
      const auto& ps = *task.product;
      int nf = static_cast<int>(ps.factors.size());
      for (int i = 0; i < nf; ++i) {
        auto gi = build_graph(ps.factors[i]);
        std::vector<std::vector<int>> vertex_groups;  // factor-vertex sets
        for (size_t z = 0; z < gi.blocks.blocks.size(); ++z)
          vertex_groups.push_back(gi.blocks.block_vertices(gi.topo, static_cast<int>(z)));
        std::vector<bool> covered(gi.topo.n, false);
        for (const auto& vg : vertex_groups)
          for (int v : vg) covered[v] = true;
        for (int v = 0; v < gi.topo.n; ++v)
          if (!covered[v]) vertex_groups.push_back({v});

        for (const auto& vg : vertex_groups) {
          GroupSpec spec;
          spec.task_index = i;
          for (int a = 0; a < task.n_actions(); ++a)
            if (std::find(vg.begin(), vg.end(), ps.factor_action_index(a, i)) != vg.end())
              spec.members.push_back(a);
          for (int e = 0; e < g.topo.n_edges(); ++e) {
            if (edge_factor(task, g.topo, e) != i) continue;
            auto [s, t] = g.topo.edges[e];
            int si = ps.factor_action_index(s, i), ti = ps.factor_action_index(t, i);
            if (std::find(vg.begin(), vg.end(), si) != vg.end() &&
                std::find(vg.begin(), vg.end(), ti) != vg.end() &&
                gi.topo.edge_id(si, ti) >= 0)
              spec.edges.push_back(e);
          }
          out.push_back(std::move(spec));
        }
      }
      break;
    }
  }
  return out;
}

// Result of an alignment decision.
template <class S>
struct NotAligned {
  enum class Reason {
    CycleObstruction,
    EdgeResidual,
    LambdaInconsistent,
    SystemInfeasible,
    NoInvertibleGamma
  };
  Reason reason;
  std::optional<Cycle> cycle;
  std::optional<Mat<S>> cycle_prod;
  std::pair<int, int> witness_pair{-1, -1};
  double residual = 0.0;
  std::string detail;
};

template <class S>
struct AlignOutcome {
  std::optional<AlignmentCertificate<S>> cert;
  std::optional<NotAligned<S>> failure;
  std::string route;  // "potential" or "direct"

  bool aligned() const { return cert.has_value(); }
};

namespace detail {

// Assignments of group indices per action under the given specs/kind (mirrors
// cert_assignments but driven by GroupSpec).
inline std::vector<std::vector<int>> spec_assignments(const std::vector<GroupSpec>& groups,
                                                      CertKind kind, int a) {
  switch (kind) {
    case CertKind::Joint:
    case CertKind::Individual:
    case CertKind::Blockwise: {
      std::vector<std::vector<int>> out;
      for (size_t g = 0; g < groups.size(); ++g)
        if (std::find(groups[g].members.begin(), groups[g].members.end(), a) !=
            groups[g].members.end())
          out.push_back({static_cast<int>(g)});
      return out;
    }
    case CertKind::Taskwise: {
      std::vector<int> all(groups.size());
      std::iota(all.begin(), all.end(), 0);
      return {all};
    }
    case CertKind::TaskBlockwise: {
      std::map<int, std::vector<int>> per_task;
      for (size_t g = 0; g < groups.size(); ++g)
        if (std::find(groups[g].members.begin(), groups[g].members.end(), a) !=
            groups[g].members.end())
          per_task[groups[g].task_index].push_back(static_cast<int>(g));
      std::vector<std::vector<int>> out{{}};
      for (const auto& [task_i, choices] : per_task) {
        std::vector<std::vector<int>> next;
        for (const auto& partial : out)
          for (int g : choices) {
            auto ext = partial;
            ext.push_back(g);
            next.push_back(std::move(ext));
          }
        out = std::move(next);
      }
      return out;
    }
  }
  return {};
}

template <class S>
RowVec<S> spec_u_row(const Task<S>& task, const GroupSpec& group, int a) {
  if (group.task_index < 0) return RowVec<S>(task.u.row(a));
  return lifted_factor_row(task, group.task_index, a);
}

// Linear system for the uncentered identity
//   M(a) X(a) = sum_{g in assignment} (lambda_g u_g(a) + d_g) + psi(a) 1,
// with kappa(a) = Gamma(a) psi(a) recovered afterwards. M is either fixed
// (potential route) or an unknown per action with M(ref) = I (direct route).
template <class S>
struct AlignmentSystem {
  const Task<S>& task;
  const QuestionProfile<S>& x;
  const std::vector<GroupSpec>& groups;
  CertKind kind;

  std::vector<int> m_off;  // per action, -1 when M(a) fixed
  std::vector<int> lambda_off, d_off, psi_off;
  int n_vars = 0;
  Mat<S> A;
  Vec<S> b;
  std::vector<std::pair<int, int>> row_block;  // row -> (action, assignment idx)

  AlignmentSystem(const Task<S>& t, const QuestionProfile<S>& q,
                  const std::vector<GroupSpec>& g, CertKind k)
      : task(t), x(q), groups(g), kind(k) {}

  void build(const std::vector<Mat<S>>* fixed_m, const std::vector<int>& gauge_refs) {
    const int m = x.m, ns = task.n_states(), na = task.n_actions();
    m_off.assign(na, -1);
    if (!fixed_m) {
      for (int a = 0; a < na; ++a) {
        if (std::find(gauge_refs.begin(), gauge_refs.end(), a) == gauge_refs.end()) {
          m_off[a] = n_vars;
          n_vars += m * m;
        }
      }
    }
    lambda_off.resize(groups.size());
    d_off.resize(groups.size());
    for (size_t g = 0; g < groups.size(); ++g) {
      lambda_off[g] = n_vars;
      n_vars += m;
      d_off[g] = n_vars;
      n_vars += m * ns;
    }
    psi_off.assign(na, 0);
    for (int a = 0; a < na; ++a) {
      psi_off[a] = n_vars;
      n_vars += m;
    }

    int n_rows = 0;
    std::vector<std::vector<std::vector<int>>> asg(na);
    for (int a = 0; a < na; ++a) {
      asg[a] = spec_assignments(groups, kind, a);
      if (asg[a].empty())
        throw std::invalid_argument("no group covers action " + task.actions[a].text);
      n_rows += static_cast<int>(asg[a].size()) * m * ns;
    }
    A = Mat<S>::Zero(n_rows, n_vars);
    b = Vec<S>::Zero(n_rows);
    row_block.reserve(n_rows);

    int row = 0;
    for (int a = 0; a < na; ++a) {
      for (size_t ai = 0; ai < asg[a].size(); ++ai) {
        for (int j = 0; j < m; ++j) {
          for (int t = 0; t < ns; ++t, ++row) {
            row_block.push_back({a, static_cast<int>(ai)});
            // M(a) X(a) term
            if (m_off[a] >= 0) {
              for (int k = 0; k < m; ++k) A(row, m_off[a] + j * m + k) = x.X[a](k, t);
            } else {
              S known = fixed_m ? ((*fixed_m)[a].row(j) * x.X[a].col(t))(0, 0)
                                : x.X[a](j, t);  // gauge: M = I
              b(row) -= known;
            }
            // minus the group terms
            for (int g : asg[a][ai]) {
              RowVec<S> urow = spec_u_row(task, groups[g], a);
              A(row, lambda_off[g] + j) -= urow(t);
              A(row, d_off[g] + j * ns + t) -= S(1);
            }
            A(row, psi_off[a] + j) -= S(1);
          }
        }
      }
    }
  }
};

}  // namespace detail

// ---- certificate assembly from a solution vector -----------------------------------

namespace detail {

template <class S>
AlignmentCertificate<S> assemble_certificate(const Task<S>& task, const QuestionProfile<S>& x,
                                             const std::vector<GroupSpec>& groups,
                                             CertKind kind, const std::vector<Mat<S>>& gamma,
                                             const AlignmentSystem<S>& sys, const Vec<S>& v) {
  const int m = x.m, ns = task.n_states();
  AlignmentCertificate<S> cert;
  cert.kind = kind;
  cert.m = m;
  cert.gamma = gamma;
  cert.kappa.resize(task.n_actions());
  for (int a = 0; a < task.n_actions(); ++a) {
    Vec<S> psi(m);
    for (int j = 0; j < m; ++j) psi(j) = v(sys.psi_off[a] + j);
    cert.kappa[a] = gamma[a] * psi;
  }
  for (size_t g = 0; g < groups.size(); ++g) {
    CertGroup<S> cg;
    cg.task_index = groups[g].task_index;
    cg.members = groups[g].members;
    cg.lambda = Vec<S>(m);
    for (int j = 0; j < m; ++j) cg.lambda(j) = v(sys.lambda_off[g] + j);
    cg.d = Mat<S>(m, ns);
    for (int j = 0; j < m; ++j)
      for (int t = 0; t < ns; ++t) cg.d(j, t) = v(sys.d_off[g] + j * ns + t);
    cert.groups.push_back(std::move(cg));
  }
  return cert;
}

}  // namespace detail

// ---- solvers -------------------------------------------------------------------------

namespace detail {

// Reference action per component: lexicographically smallest action label.
template <class S>
std::vector<int> component_references(const Task<S>& task, const AdjacencyGraph<S>& g) {
  int nc =
      g.component.empty() ? 0 : *std::max_element(g.component.begin(), g.component.end()) + 1;
  std::vector<int> refs(nc, -1);
  for (int v = 0; v < g.topo.n; ++v) {
    int c = g.component[v];
    if (refs[c] < 0 || task.actions[v].text < task.actions[refs[c]].text) refs[c] = v;
  }
  return refs;
}

// Potential route: diagnostics on the edge flow, then a linear solve with the
// potential's Gamma fixed. Sound rejections when `exact_lengths`.
template <class S>
std::optional<AlignOutcome<S>> try_potential_route(const Task<S>& task,
                                                   const QuestionProfile<S>& x,
                                                   const AdjacencyGraph<S>& g,
                                                   const std::vector<GroupSpec>& groups,
                                                   CertKind kind, const EdgeFlow<S>& flow,
                                                   bool exact_lengths) {
  S tol = scalar_traits<S>::exact ? S(0) : scalar_traits<S>::residual_tol();
  AlignOutcome<S> out;
  out.route = "potential";

  // an exact full-rank edge whose defining equation has no solution already
  // witnesses misalignment
  for (int e = 0; e < g.topo.n_edges(); ++e) {
    if (flow.lengths[e].w && flow.lengths[e].residual > tol) {
      if (!exact_lengths) return std::nullopt;
      out.failure = NotAligned<S>{NotAligned<S>::Reason::EdgeResidual, std::nullopt,
                                  std::nullopt, g.topo.edges[e],
                                  to_double(flow.lengths[e].residual),
                                  "projected questions are not related by any edge length"};
      return out;
    }
  }

  auto refs = component_references(task, g);
  auto pot = build_potential<S>(g.topo, flow, x.m, g.component, refs);
  if (!pot.ok) {
    if (pot.obstruction_cycle && exact_lengths) {
      const auto& cyc = *pot.obstruction_cycle;
      out.failure =
          NotAligned<S>{NotAligned<S>::Reason::CycleObstruction, cyc, pot.obstruction_product,
                        {cyc.vertices[0], cyc.vertices[1]},
                        to_double(max_abs(Mat<S>(pot.obstruction_product -
                                                 Mat<S>::Identity(x.m, x.m)))),
                        "cycle product differs from identity"};
      return out;
    }
    return std::nullopt;  // machinery inapplicable; direct route decides
  }

  // per-edge lambda diagnostics give crisp witnesses
  std::vector<Mat<S>> m_of(task.n_actions());
  std::vector<Mat<S>> gamma_inv(task.n_actions());
  for (int a = 0; a < task.n_actions(); ++a) {
    gamma_inv[a] = *try_invert(pot.gamma[a]);
    m_of[a] = gamma_inv[a] * project_bar_rows<S>(x.X[a]);
  }
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    std::optional<Vec<S>> lambda_seen;
    int seen_edge = -1;
    for (int e : groups[gi].edges) {
      auto [s, t] = g.topo.edges[e];
      Mat<S> r = m_of[t] - m_of[s];
      RowVec<S> dl = delta(task, s, t);
      S nn = dl.squaredNorm();
      Vec<S> lam = Vec<S>::Zero(x.m);
      if (nn != S(0))
        for (int j = 0; j < x.m; ++j) lam(j) = (RowVec<S>(r.row(j)) * dl.transpose())(0, 0) / nn;
      Mat<S> resid = r - lam * dl;
      if (max_abs(resid) > tol) {
        if (!exact_lengths) return std::nullopt;
        out.failure = NotAligned<S>{NotAligned<S>::Reason::LambdaInconsistent, std::nullopt,
                                    std::nullopt, {s, t}, to_double(max_abs(resid)),
                                    "question difference is not aligned with the payoff "
                                    "difference on this edge"};
        return out;
      }
      if (lambda_seen && max_abs(Vec<S>(lam - *lambda_seen)) > tol) {
        if (!exact_lengths) return std::nullopt;
        auto [ps, pt] = g.topo.edges[seen_edge];
        out.failure = NotAligned<S>{
            NotAligned<S>::Reason::LambdaInconsistent, std::nullopt, std::nullopt, {s, t},
            to_double(max_abs(Vec<S>(lam - *lambda_seen))),
            "lambda disagrees across edges (" + task.actions[ps].text + "," +
                task.actions[pt].text + ") and (" + task.actions[s].text + "," +
                task.actions[t].text + ")"};
        return out;
      }
      if (!lambda_seen) {
        lambda_seen = lam;
        seen_edge = e;
      }
    }
  }

  // remaining unknowns (lambda, d, psi) are linear with Gamma fixed
  detail::AlignmentSystem<S> sys(task, x, groups, kind);
  sys.build(&gamma_inv, {});
  auto sol = solve_linear<S>(sys.A, Mat<S>(sys.b));
  if (sol.residual > tol) {
    if (!exact_lengths) return std::nullopt;
    Vec<S> res = sys.A * Vec<S>(sol.x.col(0)) - sys.b;
    int worst = 0;
    S worst_v(0);
    for (int r = 0; r < res.size(); ++r)
      if (abs_val(res(r)) > worst_v) {
        worst_v = abs_val(res(r));
        worst = r;
      }
    int bad_action = sys.row_block[worst].first;
    out.failure =
        NotAligned<S>{NotAligned<S>::Reason::SystemInfeasible, std::nullopt, std::nullopt,
                      {pot.reference[g.component[bad_action]], bad_action},
                      to_double(worst_v),
                      "no action-independent d completes the potential"};
    return out;
  }
  auto cert = detail::assemble_certificate<S>(task, x, groups, kind, pot.gamma, sys,
                                              Vec<S>(sol.x.col(0)));
  auto check = verify_certificate(task, x, cert);
  if (!check.identity_ok || !check.all_gamma_invertible) return std::nullopt;
  out.cert = std::move(cert);
  return out;
}

// Direct route: gauge Gamma(ref) = I per component and solve the full
// bilinear-free system in (M, lambda, d, psi); invertibility of the M(a) is
// reached by sampling the solution affine space.
template <class S>
AlignOutcome<S> direct_route(const Task<S>& task, const QuestionProfile<S>& x,
                             const AdjacencyGraph<S>& g, const std::vector<GroupSpec>& groups,
                             CertKind kind, std::uint64_t seed = 817263) {
  S tol = scalar_traits<S>::exact ? S(0) : scalar_traits<S>::residual_tol();
  AlignOutcome<S> out;
  out.route = "direct";
  auto refs = component_references(task, g);

  detail::AlignmentSystem<S> sys(task, x, groups, kind);
  sys.build(nullptr, refs);
  auto sol = solve_linear<S>(sys.A, Mat<S>(sys.b));
  if (sol.residual > tol) {
    Vec<S> res = sys.A * Vec<S>(sol.x.col(0)) - sys.b;
    int worst = 0;
    S worst_v(0);
    for (int r = 0; r < res.size(); ++r)
      if (abs_val(res(r)) > worst_v) {
        worst_v = abs_val(res(r));
        worst = r;
      }
    int bad_action = sys.row_block[worst].first;
    out.failure = NotAligned<S>{NotAligned<S>::Reason::SystemInfeasible, std::nullopt,
                                std::nullopt, {refs[g.component[bad_action]], bad_action},
                                to_double(worst_v),
                                "alignment system has no solution"};
    return out;
  }

  Mat<S> kernel = kernel_basis<S>(sys.A);
  std::mt19937_64 rng(seed);
  auto extract = [&](const Vec<S>& v) -> std::optional<std::vector<Mat<S>>> {
    std::vector<Mat<S>> ms(task.n_actions());
    for (int a = 0; a < task.n_actions(); ++a) {
      if (sys.m_off[a] < 0) {
        ms[a] = Mat<S>::Identity(x.m, x.m);
      } else {
        ms[a] = Mat<S>(x.m, x.m);
        for (int j = 0; j < x.m; ++j)
          for (int k = 0; k < x.m; ++k) ms[a](j, k) = v(sys.m_off[a] + j * x.m + k);
      }
      if (!is_invertible(ms[a])) return std::nullopt;
    }
    return ms;
  };

  Vec<S> base = sol.x.col(0);
  std::optional<std::vector<Mat<S>>> ms = extract(base);
  Vec<S> chosen = base;
  for (int attempt = 0; !ms && attempt < 64; ++attempt) {
    Vec<S> v = base;
    if (attempt < kernel.cols()) {
      v += kernel.col(attempt);
    } else if (kernel.cols() > 0) {
      for (int c = 0; c < kernel.cols(); ++c)
        v += random_scalar<S>(rng, 7, 3) * kernel.col(c);
    } else {
      break;
    }
    ms = extract(v);
    if (ms) chosen = v;
  }
  if (!ms) {
    out.failure =
        NotAligned<S>{NotAligned<S>::Reason::NoInvertibleGamma, std::nullopt, std::nullopt,
                      {-1, -1}, 0.0,
                      "alignment system is solvable but no sampled solution has every "
                      "Gamma(a) invertible"};
    return out;
  }

  std::vector<Mat<S>> gamma(task.n_actions());
  for (int a = 0; a < task.n_actions(); ++a) gamma[a] = *try_invert((*ms)[a]);
  auto cert =
      detail::assemble_certificate<S>(task, x, groups, kind, gamma, sys, chosen);
  auto check = verify_certificate(task, x, cert);
  if (!check.identity_ok) {
    out.failure = NotAligned<S>{NotAligned<S>::Reason::SystemInfeasible, std::nullopt,
                                std::nullopt, {-1, -1}, to_double(check.max_residual),
                                "assembled certificate failed the final audit"};
    return out;
  }
  out.cert = std::move(cert);
  return out;
}

}  // namespace detail

// Decide alignment of the given kind. The potential route (edge lengths,
// Kirchhoff potential, per-edge lambda) runs first and its rejections are
// definitive when every edge length is exact; when the machinery is
// inapplicable (m > |states| - 2, rank-deficient projections that perturbation
// cannot settle, singular flows) the exact gauge-fixed linear solver decides.
template <class S>
AlignOutcome<S> find_certificate(const Task<S>& task, const QuestionProfile<S>& x,
                                 const AdjacencyGraph<S>& g, CertKind kind) {
  task.validate();
  x.validate(task);
  auto groups = build_group_specs(task, g, kind);

  if (x.m <= task.n_states() - 2) {
    EdgeFlow<S> flow = compute_edge_lengths(task, x, g);
    bool exact = flow.all_defined;
    std::optional<EdgeFlow<S>> use_flow;
    if (flow.all_defined) {
      use_flow = std::move(flow);
    } else {
      auto a1 = check_assumption_cycle_length(g.mcb, task.n_states(), x.m);
      bool a1_ok = std::all_of(a1.begin(), a1.end(), [](bool b) { return b; });
      if (a1_ok) {
        std::vector<Mat<S>> mu(task.n_actions(), Mat<S>::Identity(x.m, x.m));
        auto pert = perturb_edge_lengths(task, x, mu, g, flow);
        if (pert.ok) use_flow = std::move(pert.flow);
      }
    }
    if (use_flow) {
      auto res = detail::try_potential_route(task, x, g, groups, kind, *use_flow, exact);
      if (res) return *res;
    }
  }
  return detail::direct_route(task, x, g, groups, kind);
}

template <class S>
AlignOutcome<S> find_joint_certificate(const Task<S>& task, const QuestionProfile<S>& x,
                                       const AdjacencyGraph<S>& g) {
  return find_certificate(task, x, g, CertKind::Joint);
}

template <class S>
AlignOutcome<S> check_blockwise(const Task<S>& task, const QuestionProfile<S>& x,
                                const AdjacencyGraph<S>& g) {
  return find_certificate(task, x, g, CertKind::Blockwise);
}

template <class S>
AlignOutcome<S> check_taskwise(const Task<S>& task, const QuestionProfile<S>& x,
                               const AdjacencyGraph<S>& g) {
  return find_certificate(task, x, g, CertKind::Taskwise);
}

template <class S>
AlignOutcome<S> check_task_block_wise(const Task<S>& task, const QuestionProfile<S>& x,
                                      const AdjacencyGraph<S>& g) {
  return find_certificate(task, x, g, CertKind::TaskBlockwise);
}

// ---- rank decomposition and supplemental questions -----------------------------------

template <class S>
struct Decomposition {
  Mat<S> g;  // |A| x m
  Mat<S> d;  // m x |states|
  int rank = 0;
};

// Y = G D with D's leading rows a maximal independent row subset of Y,
// padded with zeros up to m. Fails (returning rank Y) when rank Y > m.
template <class S>
std::variant<Decomposition<S>, int> rank_decompose(const Mat<S>& y, int m) {
  if (m < 1) throw std::invalid_argument("rank_decompose needs m >= 1");
  const int rows = static_cast<int>(y.rows());
  const int cols = static_cast<int>(y.cols());
  int r = matrix_rank<S>(y);
  if (r > m) return r;

  std::vector<int> chosen;
  Mat<S> picked(0, cols);
  for (int i = 0; i < rows && static_cast<int>(chosen.size()) < r; ++i) {
    Mat<S> trial(picked.rows() + 1, cols);
    trial.topRows(picked.rows()) = picked;
    trial.row(picked.rows()) = y.row(i);
    if (matrix_rank<S>(trial) > static_cast<int>(picked.rows())) {
      picked = std::move(trial);
      chosen.push_back(i);
    }
  }

  Decomposition<S> out;
  out.rank = r;
  out.d = Mat<S>::Zero(m, cols);
  out.d.topRows(r) = picked;
  out.g = Mat<S>::Zero(rows, m);
  if (r > 0) {
    Mat<S> gram = picked * picked.transpose();
    Mat<S> inv = *try_invert(gram);
    for (int i = 0; i < rows; ++i)
      out.g.row(i).head(r) = y.row(i) * picked.transpose() * inv;
  }
  return out;
}

template <class S>
int check_m_decomposable(const Mat<S>& y) {
  return matrix_rank<S>(y);
}

enum class SupplementStrategy { FullRank, Minimal };

template <class S>
struct SupplementalProfile {
  QuestionProfile<S> profile;
  AlignmentCertificate<S> cert;
};

// Supplemental questions incentivizing a single target question Y:
//   FullRank: m = |A|, cyclic permutation potentials, first transformed row is
//     Y at the chosen action.
//   Minimal: m = rank Y, supplemental questions are independent rows of Y.
// Both return the lambda = 0 certificate that makes the profile jointly
// decomposable.
template <class S>
SupplementalProfile<S> supplemental_profile(const Task<S>& task, const QuestionProfile<S>& y,
                                            SupplementStrategy strategy) {
  task.validate();
  y.validate(task);
  if (y.m != 1) throw std::invalid_argument("supplemental_profile takes a single question");
  const int na = task.n_actions();
  const int ns = task.n_states();
  Mat<S> ymat(na, ns);
  for (int a = 0; a < na; ++a) ymat.row(a) = y.X[a].row(0);

  SupplementalProfile<S> out;
  if (strategy == SupplementStrategy::FullRank) {
    const int m = na;
    out.profile.m = m;
    out.cert.kind = CertKind::Joint;
    out.cert.m = m;
    for (int i = 0; i < na; ++i) {
      Mat<S> sigma = Mat<S>::Zero(m, m);
      for (int j = 0; j < m; ++j) sigma(j, (i + j) % m) = S(1);  // row j picks Y(a_{i+j})
      out.profile.X.push_back(sigma * ymat);
      out.cert.gamma.push_back(std::move(sigma));
      out.cert.kappa.push_back(Vec<S>::Zero(m));
    }
    CertGroup<S> grp;
    grp.lambda = Vec<S>::Zero(m);
    grp.d = ymat;
    for (int a = 0; a < na; ++a) grp.members.push_back(a);
    out.cert.groups.push_back(std::move(grp));
    return out;
  }

  auto dec = rank_decompose<S>(ymat, std::max(1, matrix_rank<S>(ymat)));
  auto& d = std::get<Decomposition<S>>(dec);
  const int m = std::max(1, d.rank);
  out.profile.m = m;
  out.cert.kind = CertKind::Joint;
  out.cert.m = m;
  for (int a = 0; a < na; ++a) {
    RowVec<S> grow = d.g.row(a).head(m);
    int pivot = -1;
    S best(0);
    for (int k = 0; k < m; ++k)
      if (abs_val(grow(k)) > best) {
        best = abs_val(grow(k));
        pivot = k;
      }
    if (pivot < 0)
      throw std::invalid_argument(
          "question row for action " + task.actions[a].text +
          " is zero; no invertible lambda=0 completion exists (use the full-rank strategy)");
    Mat<S> gamma = Mat<S>::Zero(m, m);
    gamma.row(0) = grow;
    int r = 1;
    for (int k = 0; k < m; ++k) {
      if (k == pivot) continue;
      gamma(r++, k) = S(1);
    }
    out.profile.X.push_back(gamma * d.d);
    out.cert.gamma.push_back(std::move(gamma));
    out.cert.kappa.push_back(Vec<S>::Zero(m));
  }
  CertGroup<S> grp;
  grp.lambda = Vec<S>::Zero(m);
  grp.d = d.d;
  for (int a = 0; a < na; ++a) grp.members.push_back(a);
  out.cert.groups.push_back(std::move(grp));
  return out;
}

// Same construction with a caller-chosen basis D (rows spanning every row of
// Y), e.g. moment questions for polynomial targets.
template <class S>
SupplementalProfile<S> supplemental_profile_with_basis(const Task<S>& task,
                                                       const QuestionProfile<S>& y,
                                                       const Mat<S>& basis) {
  task.validate();
  y.validate(task);
  if (y.m != 1) throw std::invalid_argument("supplemental_profile takes a single question");
  const int na = task.n_actions();
  const int m = static_cast<int>(basis.rows());
  if (basis.cols() != task.n_states())
    throw std::invalid_argument("basis must have one column per state");
  if (matrix_rank<S>(basis) != m)
    throw std::invalid_argument("basis rows must be linearly independent");

  auto gram_inv = try_invert(Mat<S>(basis * basis.transpose()));
  SupplementalProfile<S> out;
  out.profile.m = m;
  out.cert.kind = CertKind::Joint;
  out.cert.m = m;
  for (int a = 0; a < na; ++a) {
    RowVec<S> grow = y.X[a].row(0) * basis.transpose() * (*gram_inv);
    if (max_abs(RowVec<S>(grow * basis - y.X[a].row(0))) >
        (scalar_traits<S>::exact ? S(0) : scalar_traits<S>::residual_tol()))
      throw std::invalid_argument("question row for action " + task.actions[a].text +
                                  " lies outside the span of the basis");
    int pivot = -1;
    S best(0);
    for (int k = 0; k < m; ++k)
      if (abs_val(grow(k)) > best) {
        best = abs_val(grow(k));
        pivot = k;
      }
    if (pivot < 0)
      throw std::invalid_argument("question row for action " + task.actions[a].text +
                                  " is zero");
    Mat<S> gamma = Mat<S>::Zero(m, m);
    gamma.row(0) = grow;
    int r = 1;
    for (int k = 0; k < m; ++k) {
      if (k == pivot) continue;
      gamma(r++, k) = S(1);
    }
    out.profile.X.push_back(gamma * basis);
    out.cert.gamma.push_back(std::move(gamma));
    out.cert.kappa.push_back(Vec<S>::Zero(m));
  }
  CertGroup<S> grp;
  grp.lambda = Vec<S>::Zero(m);
  grp.d = basis;
  for (int a = 0; a < na; ++a) grp.members.push_back(a);
  out.cert.groups.push_back(std::move(grp));
  return out;
}

// ---- Gamma family classification ------------------------------------------------------

enum class GammaFamily { Diagonal, JointlyDiagonalizable, General };

inline const char* gamma_family_name(GammaFamily f) {
  switch (f) {
    case GammaFamily::Diagonal: return "diagonal";
    case GammaFamily::JointlyDiagonalizable: return "jointly-diagonalizable";
    case GammaFamily::General: return "general";
  }
  return "?";
}

// Diagonal Gammas mean every question is individually aligned; a commuting
// diagonalizable family shares a similarity that reduces joint to individual
// alignment after a change of basis. Diagnostic only, evaluated in floating
// point.
template <class S>
GammaFamily classify_gamma_family(const AlignmentCertificate<S>& cert) {
  std::vector<Mat<double>> gs;
  for (const auto& g : cert.gamma) gs.push_back(matrix_cast<double>(g));
  const int m = cert.m;
  double scale = 1.0;
  for (const auto& g : gs) scale = std::max(scale, max_abs(g));
  double tol = 1e-9 * scale;

  bool all_diag = true;
  for (const auto& g : gs)
    if (!is_diagonal(g, tol)) all_diag = false;
  if (all_diag) return GammaFamily::Diagonal;

  for (size_t i = 0; i < gs.size(); ++i)
    for (size_t j = i + 1; j < gs.size(); ++j)
      if (!commute(gs[i], gs[j], tol * scale)) return GammaFamily::General;

  // simultaneous diagonalization via a generic combination
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> coef(0.25, 1.0);
  for (int attempt = 0; attempt < 8; ++attempt) {
    Mat<double> combo = Mat<double>::Zero(m, m);
    for (const auto& g : gs) combo += coef(rng) * g;
    Eigen::EigenSolver<Mat<double>> es(combo);
    if (es.info() != Eigen::Success) continue;
    if (es.eigenvalues().imag().cwiseAbs().maxCoeff() > 1e-9 * scale) continue;
    Mat<double> q = es.eigenvectors().real();
    auto qinv = try_invert(q);
    if (!qinv) continue;
    bool ok = true;
    for (const auto& g : gs)
      if (!is_diagonal(Mat<double>((*qinv) * g * q), 1e-7 * scale)) ok = false;
    if (ok) return GammaFamily::JointlyDiagonalizable;
  }
  return GammaFamily::General;
}

}  // namespace elicit

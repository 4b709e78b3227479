#pragma once

#include "certificate.hpp"
#include "model.hpp"

namespace elicit {

namespace detail {

template <class S>
PaymentScheme<S> blank_scheme(int report_dim, int n_actions, int n_states) {
  PaymentScheme<S> v;
  v.report_dim = report_dim;
  v.quad.assign(n_actions, Mat<S>::Zero(report_dim, n_states));
  v.lin.assign(n_actions, Mat<S>::Zero(report_dim, n_states));
  v.constant.assign(n_actions, RowVec<S>::Zero(n_states));
  v.report_map.assign(n_actions, std::nullopt);
  return v;
}

}  // namespace detail

// Counterfactual scoring rule for a single question Y:
//   V(r, a_i, theta) = -sum_j [Y(a_j, theta) - r_j]^2 + u(a_i, theta).
// One report coordinate per action; the scoring part is identical across
// chosen actions, so the task incentive rides on u alone.
template <class S>
PaymentScheme<S> build_csr(const Task<S>& task, const QuestionProfile<S>& y) {
  task.validate();
  y.validate(task);
  if (y.m != 1)
    throw std::invalid_argument(
        "CSR scores a single question; decompose multi-question profiles first");
  const int na = task.n_actions();
  const int ns = task.n_states();
  auto v = detail::blank_scheme<S>(na, na, ns);
  for (int a = 0; a < na; ++a) {
    for (int j = 0; j < na; ++j) {
      for (int t = 0; t < ns; ++t) {
        S yj = y.X[j](0, t);
        v.quad[a](j, t) = S(-1);
        v.lin[a](j, t) = S(2) * yj;
        v.constant[a](t) -= yj * yj;
      }
    }
    v.constant[a] += task.u.row(a);
  }
  return v;
}

// The counterfactual profile the CSR elicits: coordinate j asks for
// E_p Y(a_j) regardless of the chosen action.
template <class S>
QuestionProfile<S> csr_effective_profile(const Task<S>& task, const QuestionProfile<S>& y) {
  QuestionProfile<S> out;
  out.m = task.n_actions();
  Mat<S> rows(out.m, task.n_states());
  for (int j = 0; j < out.m; ++j) rows.row(j) = y.X[j].row(0);
  out.X.assign(task.n_actions(), rows);
  return out;
}

// Quadratic scoring of the full belief: coordinate k elicits p(theta_k).
// The quadratic loss enters negatively; the sign printed in some sources
// would reward inaccuracy.
template <class S>
PaymentScheme<S> build_belief_revelation(const Task<S>& task) {
  task.validate();
  const int na = task.n_actions();
  const int ns = task.n_states();
  auto v = detail::blank_scheme<S>(ns, na, ns);
  for (int a = 0; a < na; ++a) {
    for (int k = 0; k < ns; ++k) {
      for (int t = 0; t < ns; ++t) {
        v.quad[a](k, t) = S(-1);
        v.lin[a](k, t) = (k == t) ? S(2) : S(0);
      }
    }
    // sum_k 1{theta = theta_k}^2 = 1
    v.constant[a] = task.u.row(a);
    for (int t = 0; t < ns; ++t) v.constant[a](t) -= S(1);
  }
  return v;
}

template <class S>
QuestionProfile<S> belief_revelation_profile(const Task<S>& task) {
  QuestionProfile<S> out;
  out.m = task.n_states();
  out.X.assign(task.n_actions(), Mat<S>::Identity(task.n_states(), task.n_states()));
  return out;
}

// Coarse CSR over a partition of the action set. Coordinate k scores against
// Y at the chosen action when it lies in cell k, and at the cell's first
// action otherwise. Within-cell action dependence remains, so this is only
// distortion-free when Y is constant on each cell.
template <class S>
PaymentScheme<S> build_coarse_csr(const Task<S>& task, const QuestionProfile<S>& y,
                                  const std::vector<std::vector<int>>& partition) {
  task.validate();
  y.validate(task);
  if (y.m != 1) throw std::invalid_argument("coarse CSR scores a single question");
  std::vector<int> seen(task.n_actions(), 0);
  for (const auto& cell : partition) {
    if (cell.empty()) throw std::invalid_argument("empty partition cell");
    for (int a : cell) {
      if (a < 0 || a >= task.n_actions() || seen[a]++)
        throw std::invalid_argument("partition must cover the actions disjointly");
    }
  }
  for (int a = 0; a < task.n_actions(); ++a)
    if (!seen[a]) throw std::invalid_argument("partition must cover the actions disjointly");

  const int na = task.n_actions();
  const int ns = task.n_states();
  const int cells = static_cast<int>(partition.size());
  auto v = detail::blank_scheme<S>(cells, na, ns);
  for (int a = 0; a < na; ++a) {
    for (int k = 0; k < cells; ++k) {
      bool in_cell =
          std::find(partition[k].begin(), partition[k].end(), a) != partition[k].end();
      int rep = in_cell ? a : partition[k].front();
      for (int t = 0; t < ns; ++t) {
        S yv = y.X[rep](0, t);
        v.quad[a](k, t) = S(-1);
        v.lin[a](k, t) = S(2) * yv;
        v.constant[a](t) -= yv * yv;
      }
    }
    v.constant[a] += task.u.row(a);
  }
  return v;
}

enum class BdmMode { QuestionIsUPlusD, QuestionIsD };

// The linear-quadratic mechanism V0(r,a,theta) = q(a,theta)(r - L) - r^2/2
// where q = u + d (first mode, task incentive inside the square) or q = d with
// u paid directly (second mode). L sits strictly below every scored value.
template <class S>
PaymentScheme<S> build_bdm(const Task<S>& task, const RowVec<S>& d, BdmMode mode) {
  task.validate();
  if (d.size() != task.n_states()) throw std::invalid_argument("d must be a state vector");
  const int na = task.n_actions();
  const int ns = task.n_states();
  auto v = detail::blank_scheme<S>(1, na, ns);

  Mat<S> scored(na, ns);
  for (int a = 0; a < na; ++a)
    for (int t = 0; t < ns; ++t)
      scored(a, t) = (mode == BdmMode::QuestionIsUPlusD) ? task.u(a, t) + d(t) : d(t);

  S low = scored(0, 0);
  for (int a = 0; a < na; ++a)
    for (int t = 0; t < ns; ++t)
      if (scored(a, t) < low) low = scored(a, t);
  S L = low - S(1);

  for (int a = 0; a < na; ++a) {
    for (int t = 0; t < ns; ++t) {
      v.quad[a](0, t) = S(-1) / S(2);
      v.lin[a](0, t) = scored(a, t);
      v.constant[a](t) = -L * scored(a, t);
      if (mode == BdmMode::QuestionIsD) v.constant[a](t) += task.u(a, t);
    }
  }
  return v;
}

// BDM scoring applied directly to an arbitrary single question Y. This is the
// distortion-prone construction: the post-report value is increasing in
// E_p Y(a), not in E_p u(a). Kept for negative tests and demonstrations.
template <class S>
PaymentScheme<S> build_naive_bdm(const Task<S>& task, const QuestionProfile<S>& y) {
  task.validate();
  y.validate(task);
  if (y.m != 1) throw std::invalid_argument("naive BDM scores a single question");
  const int na = task.n_actions();
  const int ns = task.n_states();

  S low = y.X[0](0, 0);
  for (int a = 0; a < na; ++a)
    for (int t = 0; t < ns; ++t)
      if (y.X[a](0, t) < low) low = y.X[a](0, t);
  S L = low - S(1);

  auto v = detail::blank_scheme<S>(1, na, ns);
  for (int a = 0; a < na; ++a)
    for (int t = 0; t < ns; ++t) {
      S q = y.X[a](0, t);
      v.quad[a](0, t) = S(-1) / S(2);
      v.lin[a](0, t) = q;
      v.constant[a](t) = -L * q;
    }
  return v;
}

// Joint BDM driven by an alignment certificate. The raw report is transformed
// per action by Gamma(a)^-1 (r - kappa(a)); each transformed coordinate is
// scored by V0 against the transformed question lambda u + d. When some
// lambda entries are zero, negative, or group-dependent, a multiple of
// u(a,theta) large enough to dominate the question terms' slope is added so
// the induced action set stays exactly the task optimum.
template <class S>
PaymentScheme<S> build_joint_bdm(const Task<S>& task, const QuestionProfile<S>& x,
                                 const AlignmentCertificate<S>& cert) {
  auto check = verify_certificate(task, x, cert);
  if (!check.identity_ok)
    throw std::invalid_argument("certificate does not verify against the profile");
  if (!check.all_gamma_invertible)
    throw std::invalid_argument("certificate has a singular Gamma(a); cannot transform reports");

  const int na = task.n_actions();
  const int ns = task.n_states();
  const int m = cert.m;
  RowVec<S> ones = RowVec<S>::Ones(ns);

  // transformed questions: q(a) = Gamma(a)^-1 (X(a) - kappa(a) 1)
  std::vector<Mat<S>> q(na);
  std::vector<Mat<S>> gamma_inv(na);
  for (int a = 0; a < na; ++a) {
    gamma_inv[a] = *try_invert(cert.gamma[a]);
    q[a] = gamma_inv[a] * (x.X[a] - cert.kappa[a] * ones);
  }

  Vec<S> low(m), high(m);
  for (int j = 0; j < m; ++j) {
    low(j) = q[0](j, 0);
    high(j) = q[0](j, 0);
    for (int a = 0; a < na; ++a)
      for (int t = 0; t < ns; ++t) {
        if (q[a](j, t) < low(j)) low(j) = q[a](j, t);
        if (q[a](j, t) > high(j)) high(j) = q[a](j, t);
      }
  }
  Vec<S> L = low;
  for (int j = 0; j < m; ++j) L(j) -= S(1);

  // u-term coefficient
  S c(0);
  bool single = cert.groups.size() == 1;
  if (single) {
    const Vec<S>& lam = cert.groups[0].lambda;
    bool nonneg = true, nonzero = false;
    for (int j = 0; j < m; ++j) {
      if (lam(j) < S(0)) nonneg = false;
      if (lam(j) != S(0)) nonzero = true;
    }
    if (!nonzero)
      c = S(1);
    else if (!nonneg)
      single = false;  // fall through to the dominating term
  }
  if (!single) {
    // W_j bounds E_p q_j - L_j; c exceeds every assignment's total slope
    S worst(0);
    for (int a = 0; a < na; ++a) {
      for (const auto& asg : detail::cert_assignments(cert, a)) {
        S slope(0);
        for (int g : asg)
          for (int j = 0; j < m; ++j)
            slope += abs_val(cert.groups[g].lambda(j)) * (high(j) - L(j));
        if (slope > worst) worst = slope;
      }
    }
    c = worst + S(1);
  }

  auto v = detail::blank_scheme<S>(m, na, ns);
  for (int a = 0; a < na; ++a) {
    for (int j = 0; j < m; ++j)
      for (int t = 0; t < ns; ++t) {
        v.quad[a](j, t) = S(-1) / S(2);
        v.lin[a](j, t) = q[a](j, t);
        v.constant[a](t) -= L(j) * q[a](j, t);
      }
    if (c != S(0)) v.constant[a] += c * task.u.row(a);
    v.report_map[a] = typename PaymentScheme<S>::ReportMap{gamma_inv[a], cert.kappa[a]};
  }
  return v;
}

// Closed-form maximizer of E_p V(., a, theta); unique under strict concavity.
template <class S>
Vec<S> optimal_report(const PaymentScheme<S>& v, const Task<S>& task, const Belief<S>& p,
                      int a) {
  (void)task;
  Vec<S> eq = expected_rows<S>(p, v.quad[a]);
  Vec<S> el = expected_rows<S>(p, v.lin[a]);
  Vec<S> rt(v.report_dim);
  for (int j = 0; j < v.report_dim; ++j) {
    if (!(eq(j) < S(0)))
      throw std::invalid_argument("scheme is not strictly concave in the report");
    rt(j) = -el(j) / (S(2) * eq(j));
  }
  return v.untransform_report(a, rt);
}

// Expected payoff of action a under the optimal report.
template <class S>
S best_response_value(const PaymentScheme<S>& v, const Belief<S>& p, int a) {
  Vec<S> eq = expected_rows<S>(p, v.quad[a]);
  Vec<S> el = expected_rows<S>(p, v.lin[a]);
  S ec = expected_value<S>(p, v.constant[a]);
  S acc = ec;
  for (int j = 0; j < v.report_dim; ++j) {
    if (!(eq(j) < S(0)))
      throw std::invalid_argument("scheme is not strictly concave in the report");
    S rt = -el(j) / (S(2) * eq(j));
    acc += eq(j) * rt * rt + el(j) * rt;
  }
  return acc;
}

// Actions maximizing the best-response expected payoff.
template <class S>
std::vector<int> induced_actions(const PaymentScheme<S>& v, const Task<S>& task,
                                 const Belief<S>& p) {
  Vec<S> values(task.n_actions());
  for (int a = 0; a < task.n_actions(); ++a) values(a) = best_response_value(v, p, a);
  return argmax_set<S>(values, scalar_traits<S>::tie_tol());
}

}  // namespace elicit

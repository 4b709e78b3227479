#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "numeric.hpp"

namespace elicit {

// A state or action label. The numeric value is attached when the label text
// parses as a number; tasks like numeric guesses and MCQ-over-reals use it to
// build question matrices, the core machinery never needs it.
struct Label {
  std::string text;
  std::optional<Rational> value;

  static Label named(std::string t) {
    Label l{std::move(t), std::nullopt};
    try {
      l.value = rational_from_string(l.text);
    } catch (const std::invalid_argument&) {
    }
    return l;
  }
  static Label numbered(const Rational& v) { return Label{rational_to_string(v), v}; }

  bool operator==(const Label& o) const { return text == o.text; }
};

template <class S>
struct Task;

// Factor decomposition of a product task: states and actions are tuples over
// the factors and the payoff is additive.
template <class S>
struct ProductStructure {
  std::vector<Task<S>> factors;
  // strides for decoding flat indices into factor indices (row-major over
  // factors, first factor slowest)
  std::vector<int> state_stride;
  std::vector<int> action_stride;

  int factor_state_index(int flat_state, int factor) const {
    return (flat_state / state_stride[factor]) %
           static_cast<int>(factors[factor].states.size());
  }
  int factor_action_index(int flat_action, int factor) const {
    return (flat_action / action_stride[factor]) %
           static_cast<int>(factors[factor].actions.size());
  }
};

// A finite state-contingent decision problem: payoff matrix u with one row
// per action and one column per state.
template <class S>
struct Task {
  std::vector<Label> states;
  std::vector<Label> actions;
  Mat<S> u;
  std::optional<ProductStructure<S>> product;

  int n_states() const { return static_cast<int>(states.size()); }
  int n_actions() const { return static_cast<int>(actions.size()); }

  int state_index(const std::string& text) const {
    for (int i = 0; i < n_states(); ++i)
      if (states[i].text == text) return i;
    throw std::invalid_argument("unknown state label: " + text);
  }
  int action_index(const std::string& text) const {
    for (int i = 0; i < n_actions(); ++i)
      if (actions[i].text == text) return i;
    throw std::invalid_argument("unknown action label: " + text);
  }

  void validate() const {
    if (n_states() < 2) throw std::invalid_argument("task needs at least 2 states");
    if (n_actions() < 2) throw std::invalid_argument("task needs at least 2 actions");
    if (u.rows() != n_actions() || u.cols() != n_states())
      throw std::invalid_argument("payoff matrix shape does not match labels");
    if constexpr (!scalar_traits<S>::exact) {
      for (Eigen::Index i = 0; i < u.rows(); ++i)
        for (Eigen::Index j = 0; j < u.cols(); ++j)
          if (!std::isfinite(u(i, j))) throw std::invalid_argument("payoff not finite");
    }
  }
};

template <class To, class From>
Task<To> task_cast(const Task<From>& t) {
  Task<To> r;
  r.states = t.states;
  r.actions = t.actions;
  r.u = matrix_cast<To>(t.u);
  if (t.product) {
    ProductStructure<To> p;
    for (const auto& f : t.product->factors) p.factors.push_back(task_cast<To>(f));
    p.state_stride = t.product->state_stride;
    p.action_stride = t.product->action_stride;
    r.product = std::move(p);
  }
  return r;
}

// Probability vector over the task's states.
template <class S>
struct Belief {
  Vec<S> p;

  explicit Belief(Vec<S> probs) : p(std::move(probs)) { validate(); }

  void validate() const {
    S sum(0);
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (p(i) < S(0)) throw std::invalid_argument("belief has a negative entry");
      sum += p(i);
    }
    S err = abs_val(S(sum - S(1)));
    S tol = scalar_traits<S>::exact ? S(0) : S(1e-12);
    if (err > tol) throw std::invalid_argument("belief does not sum to 1");
  }

  static Belief uniform(int k) {
    Vec<S> v(k);
    for (int i = 0; i < k; ++i) v(i) = S(1) / S(k);
    return Belief(std::move(v));
  }
  static Belief point_mass(int k, int at) {
    Vec<S> v = Vec<S>::Zero(k);
    v(at) = S(1);
    return Belief(std::move(v));
  }
};

// m question rows per action; row j of X[a] is the question payoff X_j(a, .).
template <class S>
struct QuestionProfile {
  int m = 0;
  std::vector<Mat<S>> X;  // indexed like the task's actions, each m x |states|

  void validate(const Task<S>& task) const {
    if (m < 1) throw std::invalid_argument("question profile needs m >= 1");
    if (static_cast<int>(X.size()) != task.n_actions())
      throw std::invalid_argument("question profile must cover every action");
    for (const auto& mat : X)
      if (mat.rows() != m || mat.cols() != task.n_states())
        throw std::invalid_argument("question matrix shape mismatch");
  }
};

template <class To, class From>
QuestionProfile<To> profile_cast(const QuestionProfile<From>& q) {
  QuestionProfile<To> r;
  r.m = q.m;
  for (const auto& x : q.X) r.X.push_back(matrix_cast<To>(x));
  return r;
}

// Quadratic-in-report payment, diagonal after an optional per-action affine
// report transform r' = T(a) (r - kappa(a)):
//   V(r, a, theta) = sum_j quad[a](j,theta) r'_j^2 + lin[a](j,theta) r'_j + constant[a](theta)
template <class S>
struct PaymentScheme {
  struct ReportMap {
    Mat<S> T;      // invertible, report_dim x report_dim
    Vec<S> kappa;  // report_dim
  };

  int report_dim = 0;
  std::vector<Mat<S>> quad;       // per action, report_dim x |states|
  std::vector<Mat<S>> lin;        // per action, report_dim x |states|
  std::vector<RowVec<S>> constant;  // per action, |states|
  std::vector<std::optional<ReportMap>> report_map;  // per action

  int n_actions() const { return static_cast<int>(quad.size()); }

  void validate() const {
    size_t n = quad.size();
    if (lin.size() != n || constant.size() != n || report_map.size() != n)
      throw std::invalid_argument("payment scheme tensors disagree on action count");
    for (size_t a = 0; a < n; ++a) {
      if (quad[a].rows() != report_dim || lin[a].rows() != report_dim)
        throw std::invalid_argument("payment scheme coordinate count mismatch");
      if (quad[a].cols() != constant[a].size() || lin[a].cols() != constant[a].size())
        throw std::invalid_argument("payment scheme state count mismatch");
      for (Eigen::Index j = 0; j < quad[a].rows(); ++j)
        for (Eigen::Index t = 0; t < quad[a].cols(); ++t)
          if (quad[a](j, t) > S(0))
            throw std::invalid_argument("quadratic coefficients must be <= 0");
      if (report_map[a]) {
        if (report_map[a]->T.rows() != report_dim || report_map[a]->T.cols() != report_dim ||
            report_map[a]->kappa.size() != report_dim)
          throw std::invalid_argument("report map shape mismatch");
      }
    }
  }

  Vec<S> transform_report(int a, const Vec<S>& r) const {
    if (!report_map[a]) return r;
    return report_map[a]->T * (r - report_map[a]->kappa);
  }
  Vec<S> untransform_report(int a, const Vec<S>& r_tilde) const {
    if (!report_map[a]) return r_tilde;
    auto inv = try_invert(report_map[a]->T);
    if (!inv) throw std::invalid_argument("report map is singular");
    return (*inv) * r_tilde + report_map[a]->kappa;
  }
};

template <class To, class From>
PaymentScheme<To> scheme_cast(const PaymentScheme<From>& v) {
  PaymentScheme<To> r;
  r.report_dim = v.report_dim;
  for (const auto& q : v.quad) r.quad.push_back(matrix_cast<To>(q));
  for (const auto& l : v.lin) r.lin.push_back(matrix_cast<To>(l));
  for (const auto& c : v.constant)
    r.constant.push_back(matrix_cast<To>(Mat<From>(c)).row(0));
  for (const auto& m : v.report_map) {
    if (m)
      r.report_map.push_back(typename PaymentScheme<To>::ReportMap{
          matrix_cast<To>(m->T), vector_cast<To>(m->kappa)});
    else
      r.report_map.push_back(std::nullopt);
  }
  return r;
}

template <class To, class From>
Belief<To> belief_cast(const Belief<From>& b) {
  return Belief<To>(vector_cast<To>(b.p));
}

// ---- centering geometry -------------------------------------------------------

// v - mean(v) 1: projection onto the hyperplane of zero-sum vectors.
template <class S>
RowVec<S> project_bar(const RowVec<S>& v) {
  S mean = v.sum() / S(static_cast<int>(v.size()));
  RowVec<S> r = v;
  for (Eigen::Index i = 0; i < r.size(); ++i) r(i) -= mean;
  return r;
}

template <class S>
Mat<S> project_bar_rows(const Mat<S>& m) {
  Mat<S> r = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    r.row(i) = project_bar<S>(m.row(i));
  return r;
}

// Centered payoff difference: bar u(b) - bar u(a).
template <class S>
RowVec<S> delta(const Task<S>& task, int a, int b) {
  if (a == b) throw std::invalid_argument("delta needs two distinct actions");
  return project_bar<S>(RowVec<S>(task.u.row(b))) - project_bar<S>(RowVec<S>(task.u.row(a)));
}

template <class S>
RowVec<S> delta(const Task<S>& task, const std::string& a, const std::string& b) {
  return delta(task, task.action_index(a), task.action_index(b));
}

template <class S>
S expected_value(const Belief<S>& p, const RowVec<S>& row) {
  if (p.p.size() != row.size()) throw std::invalid_argument("expected_value length mismatch");
  S acc(0);
  for (Eigen::Index i = 0; i < row.size(); ++i) acc += p.p(i) * row(i);
  return acc;
}

template <class S>
Vec<S> expected_rows(const Belief<S>& p, const Mat<S>& rows) {
  Vec<S> r(rows.rows());
  for (Eigen::Index j = 0; j < rows.rows(); ++j)
    r(j) = expected_value<S>(p, RowVec<S>(rows.row(j)));
  return r;
}

// All actions within tie tolerance of the maximal expected payoff.
template <class S>
std::vector<int> task_optimal_actions(const Task<S>& task, const Belief<S>& p) {
  Vec<S> values(task.n_actions());
  for (int a = 0; a < task.n_actions(); ++a)
    values(a) = expected_value<S>(p, RowVec<S>(task.u.row(a)));
  return argmax_set<S>(values, scalar_traits<S>::tie_tol());
}

template <class S>
S evaluate_payment(const PaymentScheme<S>& v, const Vec<S>& r, int a, int theta) {
  if (r.size() != v.report_dim) throw std::invalid_argument("report dimension mismatch");
  if (a < 0 || a >= v.n_actions()) throw std::invalid_argument("action out of range");
  if (theta < 0 || theta >= v.constant[a].size())
    throw std::invalid_argument("state out of range");
  Vec<S> rt = v.transform_report(a, r);
  S acc = v.constant[a](theta);
  for (int j = 0; j < v.report_dim; ++j)
    acc += v.quad[a](j, theta) * rt(j) * rt(j) + v.lin[a](j, theta) * rt(j);
  return acc;
}

// ---- product tasks -------------------------------------------------------------

template <class S>
Task<S> product_task(const std::vector<Task<S>>& factors) {
  if (factors.empty()) throw std::invalid_argument("product task needs at least one factor");
  for (const auto& f : factors) f.validate();
  if (factors.size() == 1) return factors[0];

  int nf = static_cast<int>(factors.size());
  ProductStructure<S> ps;
  ps.factors = factors;
  ps.state_stride.assign(nf, 1);
  ps.action_stride.assign(nf, 1);
  for (int i = nf - 2; i >= 0; --i) {
    ps.state_stride[i] = ps.state_stride[i + 1] * factors[i + 1].n_states();
    ps.action_stride[i] = ps.action_stride[i + 1] * factors[i + 1].n_actions();
  }
  int ns = ps.state_stride[0] * factors[0].n_states();
  int na = ps.action_stride[0] * factors[0].n_actions();

  Task<S> t;
  auto joined = [&](auto&& pick, int flat, bool is_state) {
    std::string s;
    for (int i = 0; i < nf; ++i) {
      if (i) s += "|";
      s += pick(i, flat).text;
    }
    (void)is_state;
    return Label{s, std::nullopt};
  };
  t.states.reserve(ns);
  for (int st = 0; st < ns; ++st)
    t.states.push_back(joined(
        [&](int i, int flat) { return ps.factors[i].states[ps.factor_state_index(flat, i)]; },
        st, true));
  t.actions.reserve(na);
  for (int ac = 0; ac < na; ++ac)
    t.actions.push_back(joined(
        [&](int i, int flat) { return ps.factors[i].actions[ps.factor_action_index(flat, i)]; },
        ac, false));

  t.u = Mat<S>::Zero(na, ns);
  for (int ac = 0; ac < na; ++ac)
    for (int st = 0; st < ns; ++st)
      for (int i = 0; i < nf; ++i)
        t.u(ac, st) +=
            factors[i].u(ps.factor_action_index(ac, i), ps.factor_state_index(st, i));
  t.product = std::move(ps);
  return t;
}

// Row of factor i's payoff for the given flat action, lifted to the product
// state space: value at theta is u_i(a_i, theta_i).
template <class S>
RowVec<S> lifted_factor_row(const Task<S>& task, int factor, int flat_action) {
  if (!task.product) throw std::invalid_argument("task has no product structure");
  const auto& ps = *task.product;
  int ai = ps.factor_action_index(flat_action, factor);
  RowVec<S> row(task.n_states());
  for (int st = 0; st < task.n_states(); ++st)
    row(st) = ps.factors[factor].u(ai, ps.factor_state_index(st, factor));
  return row;
}

}  // namespace elicit

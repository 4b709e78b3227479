#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// deliberately avoid the library's solve paths: rank uses plain Gaussian
// elimination, report maximization uses nested grid search.

#include <random>

#include "elicit/elicit.hpp"

namespace testsupport {

using namespace elicit;

// MCQ task over real-valued answers 0, 1/2, 1 with u = 1{a == theta}.
inline Task<Rational> mcq3_task() {
  Task<Rational> t;
  t.states = {Label::named("0"), Label::named("1/2"), Label::named("1")};
  t.actions = t.states;
  t.u = Mat<Rational>::Identity(3, 3);
  return t;
}

// X1(a, theta) = (a - theta)^2
inline QuestionProfile<Rational> mcq3_x1() {
  auto t = mcq3_task();
  QuestionProfile<Rational> q;
  q.m = 1;
  for (int a = 0; a < 3; ++a) {
    Mat<Rational> x(1, 3);
    for (int s = 0; s < 3; ++s) {
      Rational diff = *t.actions[a].value - *t.states[s].value;
      x(0, s) = diff * diff;
    }
    q.X.push_back(x);
  }
  return q;
}

// X = (X1; X2) with X2(a, theta) = theta^2
inline QuestionProfile<Rational> mcq3_x12() {
  auto t = mcq3_task();
  auto x1 = mcq3_x1();
  QuestionProfile<Rational> q;
  q.m = 2;
  for (int a = 0; a < 3; ++a) {
    Mat<Rational> x(2, 3);
    x.row(0) = x1.X[a].row(0);
    for (int s = 0; s < 3; ++s) x(1, s) = (*t.states[s].value) * (*t.states[s].value);
    q.X.push_back(x);
  }
  return q;
}

// The paper's witness for the MCQ pair: Gamma(a) = [[a,1],[0,1]],
// kappa(a) = (a^2, 0), d rows (-2 theta, theta^2), lambda = 0.
inline AlignmentCertificate<Rational> mcq3_paper_certificate() {
  auto t = mcq3_task();
  AlignmentCertificate<Rational> cert;
  cert.kind = CertKind::Joint;
  cert.m = 2;
  for (int a = 0; a < 3; ++a) {
    Rational av = *t.actions[a].value;
    Mat<Rational> g(2, 2);
    g << av, Rational(1), Rational(0), Rational(1);
    cert.gamma.push_back(g);
    Vec<Rational> k(2);
    k << av * av, Rational(0);
    cert.kappa.push_back(k);
  }
  CertGroup<Rational> grp;
  grp.lambda = Vec<Rational>::Zero(2);
  grp.d = Mat<Rational>(2, 3);
  for (int s = 0; s < 3; ++s) {
    Rational sv = *t.states[s].value;
    grp.d(0, s) = Rational(-2) * sv;
    grp.d(1, s) = sv * sv;
  }
  grp.members = {0, 1, 2};
  cert.groups.push_back(grp);
  return cert;
}

// Safe-option task: coarsened matching-the-state with a neutral action o.
inline Task<Rational> table4_task() {
  Task<Rational> t;
  t.states = {Label::named("a1"), Label::named("a2"), Label::named("b1"), Label::named("b2")};
  t.actions = {Label::named("a1"), Label::named("a2"), Label::named("o"), Label::named("b1"),
               Label::named("b2")};
  Rational h(3, 5);
  t.u = Mat<Rational>(5, 4);
  t.u << Rational(1), h, Rational(0), Rational(0),
      h, Rational(1), Rational(0), Rational(0),
      h, h, h, h,
      Rational(0), Rational(0), Rational(1), h,
      Rational(0), Rational(0), h, Rational(1);
  return t;
}

inline Belief<Rational> paper_belief() {
  Vec<Rational> p(3);
  p << Rational(3, 10), Rational(6, 10), Rational(1, 10);
  return Belief<Rational>(p);
}

// ---- independent oracles ----------------------------------------------------------

// Rank by plain Gaussian elimination with exact pivots; independent of the
// library's LU path.
inline int row_reduction_rank(Mat<Rational> m) {
  int rank = 0;
  int rows = static_cast<int>(m.rows()), cols = static_cast<int>(m.cols());
  for (int c = 0; c < cols && rank < rows; ++c) {
    int pivot = -1;
    for (int r = rank; r < rows; ++r)
      if (m(r, c) != 0) {
        pivot = r;
        break;
      }
    if (pivot < 0) continue;
    m.row(rank).swap(m.row(pivot));
    for (int r = 0; r < rows; ++r) {
      if (r == rank || m(r, c) == 0) continue;
      m.row(r) -= (m(r, c) / m(rank, c)) * m.row(rank);
    }
    ++rank;
  }
  return rank;
}

// Nested grid maximization of the expected payment over reports, refining the
// bracket around the best point. Slow; use on small report dimensions only.
inline Vec<double> grid_search_report(const PaymentScheme<double>& v, const Task<double>& task,
                                      const Belief<double>& p, int a, double lo, double hi,
                                      int rounds = 8, int steps = 8) {
  auto vd = [&](const Vec<double>& r) {
    double acc = 0;
    for (int t = 0; t < task.n_states(); ++t)
      acc += p.p(t) * evaluate_payment(v, r, a, t);
    return acc;
  };
  int dim = v.report_dim;
  Vec<double> lo_v = Vec<double>::Constant(dim, lo), hi_v = Vec<double>::Constant(dim, hi);
  Vec<double> best = (lo_v + hi_v) / 2;
  for (int round = 0; round < rounds; ++round) {
    // coordinate sweep on the current bracket
    for (int j = 0; j < dim; ++j) {
      double best_val = -1e300, best_x = best(j);
      for (int s = 0; s <= steps; ++s) {
        Vec<double> r = best;
        r(j) = lo_v(j) + (hi_v(j) - lo_v(j)) * s / steps;
        double val = vd(r);
        if (val > best_val) {
          best_val = val;
          best_x = r(j);
        }
      }
      best(j) = best_x;
    }
    Vec<double> width = (hi_v - lo_v) / steps;
    lo_v = best - width;
    hi_v = best + width;
  }
  return best;
}

// ---- random generators --------------------------------------------------------------

inline Task<Rational> random_task(std::mt19937_64& rng, int min_a = 2, int max_a = 4,
                                  int min_s = 2, int max_s = 5) {
  std::uniform_int_distribution<int> na(min_a, max_a), ns(min_s, max_s);
  Task<Rational> t;
  int a = na(rng), s = ns(rng);
  for (int i = 0; i < s; ++i) t.states.push_back(Label::named("s" + std::to_string(i)));
  for (int i = 0; i < a; ++i) t.actions.push_back(Label::named("a" + std::to_string(i)));
  t.u = random_matrix<Rational>(rng, a, s, 9, 4);
  return t;
}

inline QuestionProfile<Rational> random_profile(std::mt19937_64& rng, const Task<Rational>& t,
                                                int m) {
  QuestionProfile<Rational> q;
  q.m = m;
  for (int a = 0; a < t.n_actions(); ++a)
    q.X.push_back(random_matrix<Rational>(rng, m, t.n_states(), 9, 4));
  return q;
}

// Profile constructed from a random certificate; jointly aligned by
// construction. Returns the certificate too.
inline std::pair<QuestionProfile<Rational>, AlignmentCertificate<Rational>>
random_aligned_profile(std::mt19937_64& rng, const Task<Rational>& t, int m) {
  AlignmentCertificate<Rational> cert;
  cert.kind = CertKind::Joint;
  cert.m = m;
  CertGroup<Rational> grp;
  grp.lambda = Vec<Rational>(m);
  for (int j = 0; j < m; ++j) grp.lambda(j) = random_rational(rng, 3, 2);
  grp.d = random_matrix<Rational>(rng, m, t.n_states(), 5, 3);
  for (int a = 0; a < t.n_actions(); ++a) grp.members.push_back(a);
  cert.groups.push_back(grp);

  QuestionProfile<Rational> q;
  q.m = m;
  RowVec<Rational> ones = RowVec<Rational>::Ones(t.n_states());
  for (int a = 0; a < t.n_actions(); ++a) {
    cert.gamma.push_back(random_invertible<Rational>(rng, m, 5, 3));
    Vec<Rational> kappa(m);
    for (int j = 0; j < m; ++j) kappa(j) = random_rational(rng, 5, 3);
    cert.kappa.push_back(kappa);
    Mat<Rational> bracket = cert.groups[0].lambda * RowVec<Rational>(t.u.row(a)) +
                            cert.groups[0].d;
    q.X.push_back(cert.gamma[a] * bracket + kappa * ones);
  }
  return {q, cert};
}

}  // namespace testsupport

#include <doctest.h>

#include "support.hpp"

using namespace elicit;
using namespace testsupport;

TEST_CASE("rational parsing") {
  CHECK(rational_from_string("3/5") == Rational(3, 5));
  CHECK(rational_from_string("0.6") == Rational(3, 5));
  CHECK(rational_from_string("-0.25") == Rational(-1, 4));
  CHECK(rational_from_string("2") == Rational(2));
  CHECK(rational_from_string("1e-2") == Rational(1, 100));
  CHECK(rational_from_string("1.5e2") == Rational(150));
  CHECK_THROWS_AS(rational_from_string("abc"), std::invalid_argument);
  CHECK_THROWS_AS(rational_from_string("1/0"), std::invalid_argument);
}

TEST_CASE("project_bar centers and is idempotent") {
  RowVec<Rational> c(3);
  c << 1, 1, 1;
  CHECK(project_bar<Rational>(c).isZero());

  RowVec<Rational> e(3);
  e << 1, 0, 0;
  RowVec<Rational> expect(3);
  expect << Rational(2, 3), Rational(-1, 3), Rational(-1, 3);
  CHECK(project_bar<Rational>(e) == expect);
  CHECK(project_bar<Rational>(project_bar<Rational>(e)) == expect);

  // first payoff row of the safe-option task: subtract its mean 2/5
  auto t4 = table4_task();
  RowVec<Rational> row = t4.u.row(0);
  RowVec<Rational> want(4);
  want << Rational(3, 5), Rational(1, 5), Rational(-2, 5), Rational(-2, 5);
  CHECK(project_bar<Rational>(row) == want);
}

TEST_CASE("project_bar is linear and its image sums to zero") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    RowVec<Rational> a = random_matrix<Rational>(rng, 1, 5).row(0);
    RowVec<Rational> b = random_matrix<Rational>(rng, 1, 5).row(0);
    Rational c1 = random_rational(rng), c2 = random_rational(rng);
    RowVec<Rational> lin = project_bar<Rational>(RowVec<Rational>(c1 * a + c2 * b));
    RowVec<Rational> sep = c1 * project_bar<Rational>(a) + c2 * project_bar<Rational>(b);
    CHECK(lin == sep);
    CHECK(project_bar<Rational>(a).sum() == Rational(0));
  }
}

TEST_CASE("delta is the centered payoff difference and antisymmetric") {
  auto mcq = mcq3_task();
  RowVec<Rational> d = delta(mcq, std::string("0"), std::string("1/2"));
  RowVec<Rational> want(3);
  want << -1, 1, 0;
  CHECK(d == want);

  auto t4 = table4_task();
  // center each row first: bar u(o) = 0, bar u(a1) = (3/5, 1/5, -2/5, -2/5)
  RowVec<Rational> d2 = delta(t4, std::string("a1"), std::string("o"));
  RowVec<Rational> want2(4);
  want2 << Rational(-3, 5), Rational(-1, 5), Rational(2, 5), Rational(2, 5);
  CHECK(d2 == want2);

  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto t = random_task(rng);
    int a = 0, b = t.n_actions() - 1;
    CHECK(RowVec<Rational>(delta(t, a, b) + delta(t, b, a)).isZero());
    CHECK(delta(t, a, b).sum() == Rational(0));
  }
  CHECK_THROWS_AS(delta(mcq, std::string("0"), std::string("nope")), std::invalid_argument);
}

TEST_CASE("expected_value reproduces the worked MCQ numbers") {
  auto p = paper_belief();
  auto x1 = mcq3_x1();
  CHECK(expected_value<Rational>(p, RowVec<Rational>(x1.X[0].row(0))) == Rational(1, 4));
  CHECK(expected_value<Rational>(p, RowVec<Rational>(x1.X[1].row(0))) == Rational(1, 10));
  CHECK(expected_value<Rational>(p, RowVec<Rational>(x1.X[2].row(0))) == Rational(9, 20));

  RowVec<Rational> constant = RowVec<Rational>::Constant(3, Rational(5, 7));
  Belief<Rational> uniform = Belief<Rational>::uniform(3);
  CHECK(expected_value<Rational>(uniform, constant) == Rational(5, 7));
}

TEST_CASE("task_optimal_actions") {
  auto mcq = mcq3_task();
  auto p = paper_belief();
  CHECK(task_optimal_actions(mcq, p) == std::vector<int>{1});

  auto t4 = table4_task();
  auto point = Belief<Rational>::point_mass(4, 2);  // state b1
  CHECK(task_optimal_actions(t4, point) == std::vector<int>{3});

  // argmax invariance under a state-dependent shift of every row
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    auto t = random_task(rng);
    RowVec<Rational> shift = random_matrix<Rational>(rng, 1, t.n_states()).row(0);
    Task<Rational> shifted = t;
    for (int a = 0; a < t.n_actions(); ++a) shifted.u.row(a) += shift;
    Vec<Rational> probs = Vec<Rational>::Zero(t.n_states());
    Rational total(0);
    for (int s = 0; s < t.n_states(); ++s) {
      probs(s) = Rational(1 + (int)(rng() % 5), 1);
      total += probs(s);
    }
    for (int s = 0; s < t.n_states(); ++s) probs(s) /= total;
    Belief<Rational> p2(probs);
    CHECK(task_optimal_actions(t, p2) == task_optimal_actions(shifted, p2));
  }
}

TEST_CASE("belief validation") {
  Vec<Rational> bad(2);
  bad << Rational(1, 2), Rational(1, 3);
  CHECK_THROWS_AS(Belief<Rational>(bad), std::invalid_argument);
  Vec<Rational> neg(2);
  neg << Rational(3, 2), Rational(-1, 2);
  CHECK_THROWS_AS(Belief<Rational>(neg), std::invalid_argument);
}

TEST_CASE("evaluate_payment") {
  auto mcq = mcq3_task();
  PaymentScheme<Rational> zero;
  zero.report_dim = 2;
  zero.quad.assign(3, Mat<Rational>::Zero(2, 3));
  zero.lin.assign(3, Mat<Rational>::Zero(2, 3));
  zero.constant.assign(3, RowVec<Rational>::Zero(3));
  zero.report_map.assign(3, std::nullopt);
  Vec<Rational> r(2);
  r << 1, 2;
  CHECK(evaluate_payment(zero, r, 0, 0) == Rational(0));

  // CSR payment at any report equals the defining formula
  auto y = mcq3_x1();
  auto csr = build_csr(mcq, y);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    Vec<Rational> rep(3);
    for (int j = 0; j < 3; ++j) rep(j) = random_rational(rng);
    int a = (int)(rng() % 3), s = (int)(rng() % 3);
    Rational direct(0);
    for (int j = 0; j < 3; ++j) {
      Rational diff = y.X[j](0, s) - rep(j);
      direct -= diff * diff;
    }
    direct += mcq.u(a, s);
    CHECK(evaluate_payment(csr, rep, a, s) == direct);
  }

  // BDM at r = L gives -L^2/2
  auto bdm = build_bdm(mcq, RowVec<Rational>::Zero(3), BdmMode::QuestionIsUPlusD);
  Rational L = Rational(0) - Rational(1);  // min u = 0, margin 1
  Vec<Rational> rl(1);
  rl << L;
  CHECK(evaluate_payment(bdm, rl, 0, 0) == -L * L / 2);

  Vec<Rational> wrong(2);
  wrong << 1, 2;
  CHECK_THROWS_AS(evaluate_payment(bdm, wrong, 0, 0), std::invalid_argument);
}

TEST_CASE("payment scheme concavity maximizer matches grid search") {
  auto mcq = mcq3_task();
  auto y = mcq3_x1();
  auto csr = build_csr(mcq, y);
  auto p = paper_belief();
  auto csr_d = scheme_cast<double>(csr);
  auto mcq_d = task_cast<double>(mcq);
  auto p_d = belief_cast<double>(p);
  for (int a = 0; a < 3; ++a) {
    Vec<Rational> closed = optimal_report(csr, mcq, p, a);
    Vec<double> gridded = grid_search_report(csr_d, mcq_d, p_d, a, -2.0, 2.0);
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(to_double(closed(j)) - gridded(j)) < 1e-5);
  }
}

TEST_CASE("product task assembles additive payoffs") {
  auto m1 = mcq3_task();
  Task<Rational> m2;
  m2.states = {Label::named("L"), Label::named("R")};
  m2.actions = m2.states;
  m2.u = Mat<Rational>::Identity(2, 2);

  auto prod = product_task<Rational>({m1, m2});
  CHECK(prod.n_states() == 6);
  CHECK(prod.n_actions() == 6);
  CHECK(prod.actions[0].text == "0|L");
  CHECK(prod.product.has_value());
  // u((a1,a2),(t1,t2)) = u1 + u2
  for (int a = 0; a < 6; ++a)
    for (int s = 0; s < 6; ++s) {
      int a1 = prod.product->factor_action_index(a, 0);
      int a2 = prod.product->factor_action_index(a, 1);
      int s1 = prod.product->factor_state_index(s, 0);
      int s2 = prod.product->factor_state_index(s, 1);
      CHECK(prod.u(a, s) == m1.u(a1, s1) + m2.u(a2, s2));
    }
  // lifted factor rows sum to the product payoff
  for (int a = 0; a < 6; ++a) {
    RowVec<Rational> sum =
        lifted_factor_row(prod, 0, a) + lifted_factor_row(prod, 1, a);
    CHECK(RowVec<Rational>(sum - prod.u.row(a)).isZero());
  }
  CHECK_THROWS_AS(product_task<Rational>({}), std::invalid_argument);
}

#include <doctest.h>

#include "support.hpp"

using namespace elicit;
using namespace testsupport;

TEST_CASE("verify_certificate") {
  SUBCASE("X = u with the trivial witness") {
    auto mcq = mcq3_task();
    QuestionProfile<Rational> x;
    x.m = 1;
    for (int a = 0; a < 3; ++a) {
      Mat<Rational> row(1, 3);
      row.row(0) = mcq.u.row(a);
      x.X.push_back(row);
    }
    AlignmentCertificate<Rational> cert;
    cert.kind = CertKind::Joint;
    cert.m = 1;
    CertGroup<Rational> grp;
    grp.lambda = Vec<Rational>::Ones(1);
    grp.d = Mat<Rational>::Zero(1, 3);
    grp.members = {0, 1, 2};
    cert.groups.push_back(grp);
    for (int a = 0; a < 3; ++a) {
      cert.gamma.push_back(Mat<Rational>::Identity(1, 1));
      cert.kappa.push_back(Vec<Rational>::Zero(1));
    }
    auto check = verify_certificate(mcq, x, cert);
    CHECK(check.identity_ok);
    CHECK(check.max_residual == Rational(0));
    CHECK(check.all_gamma_invertible);
  }
  SUBCASE("the published MCQ witness verifies exactly") {
    auto mcq = mcq3_task();
    auto x = mcq3_x12();
    auto cert = mcq3_paper_certificate();
    auto check = verify_certificate(mcq, x, cert);
    CHECK(check.identity_ok);
    CHECK(check.max_residual == Rational(0));
    // Gamma(0) = [[0,1],[0,1]] is singular; the identity still holds
    CHECK_FALSE(check.all_gamma_invertible);
    CHECK(check.singular_actions == std::vector<int>{0});
  }
  SUBCASE("dropping kappa breaks it with residual a^2") {
    auto mcq = mcq3_task();
    auto x = mcq3_x12();
    auto cert = mcq3_paper_certificate();
    for (auto& k : cert.kappa) k = Vec<Rational>::Zero(2);
    auto check = verify_certificate(mcq, x, cert);
    CHECK_FALSE(check.identity_ok);
    CHECK(check.max_residual == Rational(1));  // max over a of a^2
  }
}

TEST_CASE("find_joint_certificate on X = u uses the potential route") {
  auto mcq = mcq3_task();
  QuestionProfile<Rational> x;
  x.m = 1;
  for (int a = 0; a < 3; ++a) {
    Mat<Rational> row(1, 3);
    row.row(0) = mcq.u.row(a);
    x.X.push_back(row);
  }
  auto g = build_graph(mcq);
  auto outcome = find_joint_certificate(mcq, x, g);
  REQUIRE(outcome.aligned());
  CHECK(outcome.route == "potential");
  auto check = verify_certificate(mcq, x, *outcome.cert);
  CHECK(check.identity_ok);
  CHECK(check.all_gamma_invertible);
  CHECK(outcome.cert->groups[0].lambda(0) == Rational(1));
}

TEST_CASE("the MCQ pair (X1; X2) is jointly aligned; X1 alone is not") {
  auto mcq = mcq3_task();
  auto g = build_graph(mcq);

  SUBCASE("pair aligned via the direct solver (m = |states| - 1)") {
    auto x = mcq3_x12();
    auto outcome = find_joint_certificate(mcq, x, g);
    REQUIRE(outcome.aligned());
    CHECK(outcome.route == "direct");
    auto check = verify_certificate(mcq, x, *outcome.cert);
    CHECK(check.identity_ok);
    CHECK(check.max_residual == Rational(0));
    CHECK(check.all_gamma_invertible);
  }
  SUBCASE("single question not aligned") {
    auto x1 = mcq3_x1();
    auto outcome = find_joint_certificate(mcq, x1, g);
    CHECK_FALSE(outcome.aligned());
    REQUIRE(outcome.failure.has_value());
  }
}

TEST_CASE("round trip: random certificates are recovered") {
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 6; ++trial) {
    auto t = random_task(rng, 3, 4, 4, 5);
    int m = 1 + (int)(rng() % 2);
    auto [x, cert] = random_aligned_profile(rng, t, m);
    CHECK(verify_certificate(t, x, cert).identity_ok);

    auto g = build_graph(t);
    auto outcome = find_joint_certificate(t, x, g);
    REQUIRE(outcome.aligned());
    auto check = verify_certificate(t, x, *outcome.cert);
    CHECK(check.identity_ok);
    CHECK(check.max_residual == Rational(0));
  }
}

TEST_CASE("certificate gauge freedom") {
  std::mt19937_64 rng(73);
  auto t = random_task(rng, 3, 3, 4, 4);
  auto [x, cert] = random_aligned_profile(rng, t, 2);
  Mat<Rational> m = random_invertible<Rational>(rng, 2, 5, 3);
  Mat<Rational> minv = *try_invert(m);

  AlignmentCertificate<Rational> gauged = cert;
  for (auto& gm : gauged.gamma) gm = gm * m;
  gauged.groups[0].lambda = minv * cert.groups[0].lambda;
  gauged.groups[0].d = minv * cert.groups[0].d;
  CHECK(verify_certificate(t, x, gauged).identity_ok);
}

TEST_CASE("misaligned question on a one-block graph yields a concrete witness") {
  // MCQ-style payoff on 4 actions and 5 states: complete one-block graph,
  // triangles of length 3 < 5, generic independence
  Task<Rational> t;
  for (int i = 0; i < 5; ++i) t.states.push_back(Label::named("s" + std::to_string(i)));
  for (int i = 0; i < 4; ++i) t.actions.push_back(Label::named("a" + std::to_string(i)));
  t.u = Mat<Rational>::Zero(4, 5);
  for (int i = 0; i < 4; ++i) t.u(i, i) = 1;
  auto g = build_graph(t);
  CHECK(g.topo.n_edges() == 6);
  CHECK(g.blocks.blocks.size() == 1);
  auto a1 = check_assumption_cycle_length(g.mcb, t.n_states(), 1);
  CHECK(std::all_of(a1.begin(), a1.end(), [](bool b) { return b; }));
  auto a2 = check_assumption_independence(t, g.mcb);
  CHECK(std::all_of(a2.begin(), a2.end(), [](bool b) { return b; }));

  std::mt19937_64 rng(79);
  auto x = random_profile(rng, t, 1);
  auto outcome = find_joint_certificate(t, x, g);
  REQUIRE_FALSE(outcome.aligned());
  REQUIRE(outcome.failure.has_value());
  CHECK(outcome.route == "potential");
  bool has_witness = outcome.failure->cycle.has_value() ||
                     outcome.failure->witness_pair.first >= 0;
  CHECK(has_witness);
}

TEST_CASE("rank decomposition") {
  std::mt19937_64 rng(83);

  SUBCASE("rank-1 outer product with m = 1") {
    Vec<Rational> g(4);
    Mat<Rational> dt(1, 5);
    for (int i = 0; i < 4; ++i) g(i) = random_rational(rng, 5, 3);
    for (int i = 0; i < 5; ++i) dt(0, i) = random_rational(rng, 5, 3);
    g(0) = Rational(1);  // keep it nonzero
    Mat<Rational> y = g * dt.row(0);
    auto dec = rank_decompose<Rational>(y, 1);
    REQUIRE(std::holds_alternative<Decomposition<Rational>>(dec));
    const auto& d = std::get<Decomposition<Rational>>(dec);
    CHECK(max_abs(Mat<Rational>(y - d.g * d.d)) == Rational(0));
  }
  SUBCASE("identity exceeds m and reports its rank") {
    auto dec = rank_decompose<Rational>(Mat<Rational>::Identity(3, 3), 2);
    REQUIRE(std::holds_alternative<int>(dec));
    CHECK(std::get<int>(dec) == 3);
  }
  SUBCASE("random rank-3 5x7 reconstructs exactly") {
    for (int trial = 0; trial < 5; ++trial) {
      Mat<Rational> a = random_matrix<Rational>(rng, 5, 3, 5, 3);
      Mat<Rational> b = random_matrix<Rational>(rng, 3, 7, 5, 3);
      Mat<Rational> y = a * b;
      if (matrix_rank<Rational>(y) != 3) continue;  // extremely unlikely
      auto dec = rank_decompose<Rational>(y, 3);
      REQUIRE(std::holds_alternative<Decomposition<Rational>>(dec));
      const auto& d = std::get<Decomposition<Rational>>(dec);
      CHECK(max_abs(Mat<Rational>(y - d.g * d.d)) == Rational(0));
      CHECK(d.rank == 3);
      // padding path: m larger than the rank
      auto dec2 = rank_decompose<Rational>(y, 5);
      const auto& d2 = std::get<Decomposition<Rational>>(dec2);
      CHECK(max_abs(Mat<Rational>(y - d2.g * d2.d)) == Rational(0));
    }
  }
}

TEST_CASE("m-decomposability equals rank (independent oracle)") {
  CHECK(check_m_decomposable<Rational>(Mat<Rational>::Constant(4, 3, Rational(2))) == 1);
  CHECK(check_m_decomposable<Rational>(Mat<Rational>::Identity(4, 4)) == 4);

  // squared deviation on the 3x3 grid splits into a^2 - 2a theta + theta^2
  auto mcq = mcq3_task();
  auto x1 = mcq3_x1();
  Mat<Rational> y(3, 3);
  for (int a = 0; a < 3; ++a) y.row(a) = x1.X[a].row(0);
  CHECK(check_m_decomposable<Rational>(y) == 3);
  CHECK(row_reduction_rank(y) == 3);

  std::mt19937_64 rng(89);
  for (int trial = 0; trial < 10; ++trial) {
    Mat<Rational> m = random_matrix<Rational>(rng, 4, 6, 5, 3);
    CHECK(check_m_decomposable<Rational>(m) == row_reduction_rank(m));
  }
}

TEST_CASE("supplemental questions") {
  auto mcq = mcq3_task();
  auto y = mcq3_x1();

  SUBCASE("full-rank permutation construction") {
    auto sup = supplemental_profile(mcq, y, SupplementStrategy::FullRank);
    CHECK(sup.profile.m == 3);
    // first transformed row at each action is the target question
    for (int a = 0; a < 3; ++a)
      CHECK(RowVec<Rational>(sup.profile.X[a].row(0)) == RowVec<Rational>(y.X[a].row(0)));
    auto check = verify_certificate(mcq, sup.profile, sup.cert);
    CHECK(check.identity_ok);
    CHECK(check.all_gamma_invertible);
    CHECK(sup.cert.groups[0].lambda.isZero());
  }
  SUBCASE("minimal strategy uses rank many questions") {
    auto sup = supplemental_profile(mcq, y, SupplementStrategy::Minimal);
    CHECK(sup.profile.m == 3);  // (a - theta)^2 has full rank here
    auto check = verify_certificate(mcq, sup.profile, sup.cert);
    CHECK(check.identity_ok);
    CHECK(check.all_gamma_invertible);
  }
  SUBCASE("rank-1 questions need a single supplemental question") {
    Task<Rational> t;
    for (int i = 0; i < 4; ++i) t.states.push_back(Label::named("s" + std::to_string(i)));
    for (int i = 0; i < 3; ++i) t.actions.push_back(Label::named("a" + std::to_string(i)));
    std::mt19937_64 rng(97);
    t.u = random_matrix<Rational>(rng, 3, 4, 5, 3);
    QuestionProfile<Rational> q;
    q.m = 1;
    RowVec<Rational> base(4);
    base << 1, 2, 3, 5;
    for (int a = 0; a < 3; ++a) {
      Mat<Rational> row(1, 4);
      row.row(0) = Rational(a + 1) * base;
      q.X.push_back(row);
    }
    auto sup = supplemental_profile(t, q, SupplementStrategy::Minimal);
    CHECK(sup.profile.m == 1);
    CHECK(verify_certificate(t, sup.profile, sup.cert).identity_ok);
  }
  SUBCASE("polynomial questions decompose into moment questions") {
    // Y(a, theta) = f1(a) + f2(a) theta + f3(a) theta^2 over a 3-point grid:
    // the moment rows (1, theta, theta^2) span the decomposition
    auto t = mcq3_task();
    Mat<Rational> moments(3, 3);
    for (int s = 0; s < 3; ++s) {
      Rational sv = *t.states[s].value;
      moments(0, s) = 1;
      moments(1, s) = sv;
      moments(2, s) = sv * sv;
    }
    std::mt19937_64 rng(101);
    Mat<Rational> coef = random_invertible<Rational>(rng, 3, 5, 3);
    QuestionProfile<Rational> q;
    q.m = 1;
    for (int a = 0; a < 3; ++a) {
      Mat<Rational> row(1, 3);
      row.row(0) = coef.row(a) * moments;
      q.X.push_back(row);
    }
    auto sup = supplemental_profile_with_basis(t, q, moments);
    CHECK(sup.profile.m == 3);
    CHECK(verify_certificate(t, sup.profile, sup.cert).identity_ok);
    // supplemental rows are the moments themselves, re-ordered per action
    for (int a = 0; a < 3; ++a)
      for (int j = 1; j < 3; ++j) {
        RowVec<Rational> row = sup.profile.X[a].row(j);
        bool is_moment = false;
        for (int k = 0; k < 3; ++k)
          if (row == RowVec<Rational>(moments.row(k))) is_moment = true;
        CHECK(is_moment);
      }
  }
  SUBCASE("zero question rows break the minimal construction") {
    QuestionProfile<Rational> q = y;
    q.X[1].setZero();
    CHECK_THROWS_AS(supplemental_profile(mcq, q, SupplementStrategy::Minimal),
                    std::invalid_argument);
  }
}

TEST_CASE("weak alignment sufficiency chain") {
  // m-decomposable question -> supplemental profile verifies (lambda = 0)
  // -> joint BDM passes the grid oracle
  std::mt19937_64 rng(103);
  for (int trial = 0; trial < 3; ++trial) {
    auto t = random_task(rng, 3, 3, 4, 4);
    Mat<Rational> a = random_matrix<Rational>(rng, 3, 2, 4, 2);
    Mat<Rational> b = random_matrix<Rational>(rng, 2, 4, 4, 2);
    Mat<Rational> ymat = a * b;
    bool zero_row = false;
    for (int i = 0; i < 3; ++i)
      if (ymat.row(i).isZero()) zero_row = true;
    if (zero_row) continue;
    QuestionProfile<Rational> y;
    y.m = 1;
    for (int i = 0; i < 3; ++i) {
      Mat<Rational> row(1, 4);
      row.row(0) = ymat.row(i);
      y.X.push_back(row);
    }
    auto sup = supplemental_profile(t, y, SupplementStrategy::Minimal);
    auto check = verify_certificate(t, sup.profile, sup.cert);
    REQUIRE(check.identity_ok);
    auto scheme = build_joint_bdm(t, sup.profile, sup.cert);
    auto report = verify_incentivizable(scheme, t, sup.profile, 8);
    CHECK(report.verdict);
  }
}

TEST_CASE("blockwise alignment on the safe-option task") {
  auto t4 = table4_task();
  auto g = build_graph(t4);
  QuestionProfile<Rational> x;
  x.m = 1;
  for (int a = 0; a < 5; ++a) {
    Mat<Rational> row(1, 4);
    row.row(0) = t4.u.row(a);
    x.X.push_back(row);
  }

  // hand witness: lambda_z = 1, d_z = 0 within both triangles
  AlignmentCertificate<Rational> hand;
  hand.kind = CertKind::Blockwise;
  hand.m = 1;
  for (int a = 0; a < 5; ++a) {
    hand.gamma.push_back(Mat<Rational>::Identity(1, 1));
    hand.kappa.push_back(Vec<Rational>::Zero(1));
  }
  for (size_t z = 0; z < g.blocks.blocks.size(); ++z) {
    CertGroup<Rational> grp;
    grp.lambda = Vec<Rational>::Ones(1);
    grp.d = Mat<Rational>::Zero(1, 4);
    grp.members = g.blocks.block_vertices(g.topo, static_cast<int>(z));
    hand.groups.push_back(grp);
  }
  CHECK(verify_certificate(t4, x, hand).identity_ok);

  auto outcome = check_blockwise(t4, x, g);
  REQUIRE(outcome.aligned());
  auto check = verify_certificate(t4, x, *outcome.cert);
  CHECK(check.identity_ok);
  CHECK(check.all_gamma_invertible);
  CHECK(outcome.cert->groups.size() == 2);
}

TEST_CASE("single-block blockwise solve coincides with the joint one") {
  std::mt19937_64 rng(107);
  auto t = random_task(rng, 3, 3, 4, 4);
  auto [x, cert] = random_aligned_profile(rng, t, 1);
  auto g = build_graph(t);
  if (g.blocks.blocks.size() != 1) return;  // needs the generic complete case
  auto joint = find_joint_certificate(t, x, g);
  auto block = check_blockwise(t, x, g);
  REQUIRE(joint.aligned());
  REQUIRE(block.aligned());
}

TEST_CASE("taskwise alignment on a two-task product") {
  Task<Rational> coin;
  coin.states = {Label::named("H"), Label::named("T")};
  coin.actions = coin.states;
  coin.u = Mat<Rational>::Identity(2, 2);
  Task<Rational> mcq = mcq3_task();
  auto prod = product_task<Rational>({coin, mcq});
  auto g = build_graph(prod);

  // X(a) = 2 u1(a1) + 3 u2(a2) (+ a constant): taskwise with lambda1 != lambda2
  QuestionProfile<Rational> x;
  x.m = 1;
  for (int a = 0; a < prod.n_actions(); ++a) {
    Mat<Rational> row(1, prod.n_states());
    row.row(0) = Rational(2) * lifted_factor_row(prod, 0, a) +
                 Rational(3) * lifted_factor_row(prod, 1, a);
    x.X.push_back(row);
  }
  auto outcome = check_taskwise(prod, x, g);
  REQUIRE(outcome.aligned());
  auto check = verify_certificate(prod, x, *outcome.cert);
  CHECK(check.identity_ok);
  REQUIRE(outcome.cert->groups.size() == 2);
  // in any gauge the two task coefficients keep the 2 : 3 ratio
  Rational l1 = outcome.cert->groups[0].lambda(0);
  Rational l2 = outcome.cert->groups[1].lambda(0);
  CHECK(l1 != l2);
  CHECK(Rational(3) * l1 == Rational(2) * l2);
}

TEST_CASE("task-block-wise alignment across safe-option factors") {
  // product of two safe-option tasks: each factor graph has two blocks
  auto t4 = table4_task();
  auto prod = product_task<Rational>({t4, t4});
  auto g = build_graph(prod);

  // per-factor blockwise coefficients: u restricted to each factor is
  // blockwise aligned, so the product question 2 u1 + 5 u2 is
  // task-block-wise aligned
  QuestionProfile<Rational> x;
  x.m = 1;
  for (int a = 0; a < prod.n_actions(); ++a) {
    Mat<Rational> row(1, prod.n_states());
    row.row(0) = Rational(2) * lifted_factor_row(prod, 0, a) +
                 Rational(5) * lifted_factor_row(prod, 1, a);
    x.X.push_back(row);
  }
  auto outcome = check_task_block_wise(prod, x, g);
  REQUIRE(outcome.aligned());
  CHECK(verify_certificate(prod, x, *outcome.cert).identity_ok);
}

TEST_CASE("gamma family classification") {
  SUBCASE("identity family is diagonal") {
    auto mcq = mcq3_task();
    AlignmentCertificate<Rational> cert;
    cert.kind = CertKind::Joint;
    cert.m = 2;
    for (int a = 0; a < 3; ++a) {
      cert.gamma.push_back(Mat<Rational>::Identity(2, 2));
      cert.kappa.push_back(Vec<Rational>::Zero(2));
    }
    CHECK(classify_gamma_family(cert) == GammaFamily::Diagonal);
  }
  SUBCASE("the MCQ pair family is not diagonal") {
    auto cert = mcq3_paper_certificate();
    CHECK(classify_gamma_family(cert) != GammaFamily::Diagonal);
  }
  SUBCASE("commuting symmetric family is jointly diagonalizable") {
    // polynomials in one symmetric matrix commute and share eigenvectors
    Mat<Rational> base(2, 2);
    base << 2, 1, 1, 3;
    AlignmentCertificate<Rational> cert;
    cert.kind = CertKind::Joint;
    cert.m = 2;
    cert.gamma.push_back(base);
    cert.gamma.push_back(Mat<Rational>(base * base));
    cert.gamma.push_back(Mat<Rational>(base + Mat<Rational>::Identity(2, 2)));
    for (int a = 0; a < 3; ++a) cert.kappa.push_back(Vec<Rational>::Zero(2));
    CHECK(classify_gamma_family(cert) == GammaFamily::JointlyDiagonalizable);
  }
}

#include <doctest.h>

#include "support.hpp"

using namespace elicit;
using namespace testsupport;

TEST_CASE("numbers parse from decimals, fractions, and JSON numbers") {
  CHECK(number_from_json<Rational>(json::parse("\"3/5\"")) == Rational(3, 5));
  CHECK(number_from_json<Rational>(json::parse("0.6")) == Rational(3, 5));
  CHECK(number_from_json<Rational>(json::parse("-2")) == Rational(-2));
  CHECK(number_from_json<double>(json::parse("0.25")) == 0.25);
  CHECK_THROWS(number_from_json<Rational>(json::parse("{}")));
}

TEST_CASE("task round trip is lossless for rational strings") {
  auto t4 = table4_task();
  json j = task_to_json<Rational>(t4);
  auto back = task_from_json<Rational>(j);
  CHECK(back.u == t4.u);
  CHECK(back.actions[2].text == "o");
  CHECK(task_to_json<Rational>(back).dump() == j.dump());
}

TEST_CASE("question profile round trip") {
  auto mcq = mcq3_task();
  auto x = mcq3_x12();
  json j = questions_to_json<Rational>(x, mcq);
  auto back = questions_from_json<Rational>(j, mcq);
  CHECK(back.m == 2);
  for (int a = 0; a < 3; ++a) CHECK(back.X[a] == x.X[a]);
  // embedded under a "questions" key works too
  json wrapped{{"questions", j}};
  CHECK(questions_from_json<Rational>(wrapped, mcq).X[1] == x.X[1]);
  // missing actions are rejected
  json broken = j;
  broken["X"].erase("0");
  CHECK_THROWS(questions_from_json<Rational>(broken, mcq));
}

TEST_CASE("scheme round trip including report maps") {
  auto mcq = mcq3_task();
  auto x = mcq3_x12();
  auto g = build_graph(mcq);
  auto outcome = find_joint_certificate(mcq, x, g);
  REQUIRE(outcome.aligned());
  auto scheme = build_joint_bdm(mcq, x, *outcome.cert);
  json j = scheme_to_json<Rational>(scheme, mcq);
  auto back = scheme_from_json<Rational>(j, mcq);
  CHECK(back.report_dim == scheme.report_dim);
  for (int a = 0; a < 3; ++a) {
    CHECK(back.quad[a] == scheme.quad[a]);
    CHECK(back.lin[a] == scheme.lin[a]);
    CHECK(back.constant[a] == scheme.constant[a]);
    REQUIRE(back.report_map[a].has_value());
    CHECK(back.report_map[a]->T == scheme.report_map[a]->T);
    CHECK(back.report_map[a]->kappa == scheme.report_map[a]->kappa);
  }
  CHECK(scheme_to_json<Rational>(back, mcq).dump() == j.dump());
}

TEST_CASE("certificate round trip") {
  auto mcq = mcq3_task();
  auto cert = mcq3_paper_certificate();
  json j = certificate_to_json<Rational>(cert, mcq);
  auto back = certificate_from_json<Rational>(j, mcq);
  CHECK(back.kind == CertKind::Joint);
  CHECK(back.m == 2);
  for (int a = 0; a < 3; ++a) {
    CHECK(back.gamma[a] == cert.gamma[a]);
    CHECK(back.kappa[a] == cert.kappa[a]);
  }
  CHECK(back.groups[0].d == cert.groups[0].d);
  CHECK(certificate_to_json<Rational>(back, mcq).dump() == j.dump());
  // and it still verifies after the round trip
  CHECK(verify_certificate(mcq, mcq3_x12(), back).identity_ok);
}

TEST_CASE("verification report serialization") {
  auto mcq = mcq3_task();
  auto naive = build_naive_bdm(mcq, mcq3_x1());
  auto report = verify_incentivizable(naive, mcq, mcq3_x1(), 10);
  json j = report_to_json<Rational>(report, mcq);
  CHECK(j["verdict"] == "fail");
  CHECK(j["resolution"] == 10);
  CHECK(j["violations"].size() > 0);
}

TEST_CASE("DOT export marks cut vertices and colors blocks") {
  auto t4 = table4_task();
  auto g = build_graph(t4);
  std::string dot = graph_to_dot(g, t4);
  CHECK(dot.find("\"o\" [shape=doublecircle]") != std::string::npos);
  CHECK(dot.find("\"a1\" -- \"a2\"") != std::string::npos);
  CHECK(dot.find("color=") != std::string::npos);
}

TEST_CASE("graph analysis JSON") {
  auto t4 = table4_task();
  auto g = build_graph(t4);
  json j = graph_to_json(g, t4);
  CHECK(j["edges"].size() == 6);
  CHECK(j["blocks"].size() == 2);
  CHECK(j["cut_vertices"] == json::array({"o"}));
  CHECK(j["mcb"].size() == 2);
  CHECK(j["components"] == 1);
}

TEST_CASE("product task JSON round trip") {
  auto mcq = mcq3_task();
  Task<Rational> coin;
  coin.states = {Label::named("H"), Label::named("T")};
  coin.actions = coin.states;
  coin.u = Mat<Rational>::Identity(2, 2);
  auto prod = product_task<Rational>({mcq, coin});
  json j = task_to_json<Rational>(prod);
  CHECK(j.contains("factors"));
  auto back = task_from_json<Rational>(j);
  CHECK(back.u == prod.u);
  CHECK(back.product.has_value());
}

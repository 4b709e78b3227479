#pragma once

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adjacency.hpp"
#include "certificate.hpp"
#include "model.hpp"
#include "verify.hpp"

namespace elicit {

using nlohmann::json;

// ---- numbers ----------------------------------------------------------------

// Rationals serialize as exact "p/q" strings; doubles as JSON numbers.
template <class S>
json number_to_json(const S& v) {
  if constexpr (scalar_traits<S>::exact)
    return json(rational_to_string(v));
  else
    return json(v);
}

// Accepts JSON numbers and "p/q"/decimal strings. A JSON number is read
// through its decimal literal, so 0.6 becomes exactly 3/5 on the rational
// backend.
template <class S>
S number_from_json(const json& j) {
  if (j.is_string()) return scalar_cast<S>(rational_from_string(j.get<std::string>()));
  if (j.is_number()) {
    if constexpr (scalar_traits<S>::exact)
      return scalar_cast<S>(rational_from_string(j.dump()));
    else
      return j.get<double>();
  }
  throw std::invalid_argument("expected a number or a rational string, got " + j.dump());
}

template <class S>
json matrix_to_json(const Mat<S>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number_to_json<S>(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class S>
Mat<S> matrix_from_json(const json& j, int expect_cols = -1) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("expected a matrix");
  int rows = static_cast<int>(j.size());
  int cols = static_cast<int>(j[0].size());
  if (expect_cols >= 0 && cols != expect_cols)
    throw std::invalid_argument("matrix has wrong column count");
  Mat<S> m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(j[i].size()) != cols)
      throw std::invalid_argument("ragged matrix rows");
    for (int c = 0; c < cols; ++c) m(i, c) = number_from_json<S>(j[i][c]);
  }
  return m;
}

template <class S>
json vector_to_json(const Vec<S>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_to_json<S>(v(i)));
  return out;
}

template <class S>
Vec<S> vector_from_json(const json& j) {
  Vec<S> v(static_cast<int>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<int>(i)) = number_from_json<S>(j[i]);
  return v;
}

// ---- task / questions ----------------------------------------------------------

inline std::vector<Label> labels_from_json(const json& j) {
  std::vector<Label> out;
  for (const auto& item : j) {
    if (item.is_string())
      out.push_back(Label::named(item.get<std::string>()));
    else
      out.push_back(Label::named(item.dump()));
  }
  return out;
}

inline json labels_to_json(const std::vector<Label>& labels) {
  json out = json::array();
  for (const auto& l : labels) out.push_back(l.text);
  return out;
}

template <class S>
Task<S> task_from_json(const json& j) {
  if (j.contains("factors")) {
    std::vector<Task<S>> factors;
    for (const auto& f : j["factors"]) factors.push_back(task_from_json<S>(f));
    return product_task(factors);
  }
  Task<S> t;
  t.states = labels_from_json(j.at("states"));
  t.actions = labels_from_json(j.at("actions"));
  t.u = matrix_from_json<S>(j.at("u"), static_cast<int>(t.states.size()));
  if (t.u.rows() != static_cast<int>(t.actions.size()))
    throw std::invalid_argument("payoff row count does not match the action list");
  t.validate();
  return t;
}

template <class S>
json task_to_json(const Task<S>& t) {
  if (t.product) {
    json factors = json::array();
    for (const auto& f : t.product->factors) factors.push_back(task_to_json<S>(f));
    return json{{"factors", std::move(factors)}};
  }
  return json{{"states", labels_to_json(t.states)},
              {"actions", labels_to_json(t.actions)},
              {"u", matrix_to_json<S>(t.u)}};
}

template <class S>
QuestionProfile<S> questions_from_json(const json& root, const Task<S>& task) {
  const json& j = root.contains("questions") ? root.at("questions") : root;
  QuestionProfile<S> q;
  q.m = j.at("m").get<int>();
  const json& x = j.at("X");
  q.X.resize(task.n_actions());
  std::vector<bool> seen(task.n_actions(), false);
  for (auto it = x.begin(); it != x.end(); ++it) {
    int a = task.action_index(it.key());
    q.X[a] = matrix_from_json<S>(it.value(), task.n_states());
    if (q.X[a].rows() != q.m)
      throw std::invalid_argument("question matrix for action " + it.key() +
                                  " does not have m rows");
    seen[a] = true;
  }
  for (int a = 0; a < task.n_actions(); ++a)
    if (!seen[a])
      throw std::invalid_argument("questions missing for action " + task.actions[a].text);
  q.validate(task);
  return q;
}

template <class S>
json questions_to_json(const QuestionProfile<S>& q, const Task<S>& task) {
  json x = json::object();
  for (int a = 0; a < task.n_actions(); ++a)
    x[task.actions[a].text] = matrix_to_json<S>(q.X[a]);
  return json{{"m", q.m}, {"X", std::move(x)}};
}

// ---- payment schemes -------------------------------------------------------------

template <class S>
json scheme_to_json(const PaymentScheme<S>& v, const Task<S>& task) {
  json quad = json::object(), lin = json::object(), cst = json::object(),
       rmap = json::object();
  for (int a = 0; a < task.n_actions(); ++a) {
    const std::string& name = task.actions[a].text;
    quad[name] = matrix_to_json<S>(v.quad[a]);
    lin[name] = matrix_to_json<S>(v.lin[a]);
    cst[name] = vector_to_json<S>(Vec<S>(v.constant[a].transpose()));
    if (v.report_map[a])
      rmap[name] = json{{"T", matrix_to_json<S>(v.report_map[a]->T)},
                        {"kappa", vector_to_json<S>(v.report_map[a]->kappa)}};
  }
  json out{{"report_dim", v.report_dim},
           {"quad", std::move(quad)},
           {"lin", std::move(lin)},
           {"const", std::move(cst)}};
  if (!rmap.empty()) out["report_map"] = std::move(rmap);
  return out;
}

template <class S>
PaymentScheme<S> scheme_from_json(const json& j, const Task<S>& task) {
  PaymentScheme<S> v;
  v.report_dim = j.at("report_dim").get<int>();
  int na = task.n_actions();
  v.quad.resize(na);
  v.lin.resize(na);
  v.constant.resize(na);
  v.report_map.assign(na, std::nullopt);
  for (int a = 0; a < na; ++a) {
    const std::string& name = task.actions[a].text;
    v.quad[a] = matrix_from_json<S>(j.at("quad").at(name), task.n_states());
    v.lin[a] = matrix_from_json<S>(j.at("lin").at(name), task.n_states());
    v.constant[a] = vector_from_json<S>(j.at("const").at(name)).transpose();
    if (j.contains("report_map") && j.at("report_map").contains(name)) {
      const auto& rm = j.at("report_map").at(name);
      v.report_map[a] = typename PaymentScheme<S>::ReportMap{
          matrix_from_json<S>(rm.at("T"), v.report_dim),
          vector_from_json<S>(rm.at("kappa"))};
    }
  }
  v.validate();
  return v;
}

// ---- certificates -----------------------------------------------------------------

template <class S>
json certificate_to_json(const AlignmentCertificate<S>& cert, const Task<S>& task) {
  json gamma = json::object(), kappa = json::object();
  for (int a = 0; a < task.n_actions(); ++a) {
    gamma[task.actions[a].text] = matrix_to_json<S>(cert.gamma[a]);
    kappa[task.actions[a].text] = vector_to_json<S>(cert.kappa[a]);
  }
  json groups = json::array();
  for (const auto& g : cert.groups) {
    json members = json::array();
    for (int a : g.members) members.push_back(task.actions[a].text);
    groups.push_back(json{{"task", g.task_index},
                          {"members", std::move(members)},
                          {"lambda", vector_to_json<S>(g.lambda)},
                          {"d", matrix_to_json<S>(g.d)}});
  }
  return json{{"kind", cert_kind_name(cert.kind)},
              {"m", cert.m},
              {"gamma", std::move(gamma)},
              {"kappa", std::move(kappa)},
              {"groups", std::move(groups)}};
}

inline CertKind cert_kind_from_name(const std::string& s) {
  if (s == "joint") return CertKind::Joint;
  if (s == "individual") return CertKind::Individual;
  if (s == "taskwise") return CertKind::Taskwise;
  if (s == "blockwise") return CertKind::Blockwise;
  if (s == "task-block-wise") return CertKind::TaskBlockwise;
  throw std::invalid_argument("unknown certificate kind: " + s);
}

template <class S>
AlignmentCertificate<S> certificate_from_json(const json& j, const Task<S>& task) {
  AlignmentCertificate<S> cert;
  cert.kind = cert_kind_from_name(j.at("kind").get<std::string>());
  cert.m = j.at("m").get<int>();
  cert.gamma.resize(task.n_actions());
  cert.kappa.resize(task.n_actions());
  for (int a = 0; a < task.n_actions(); ++a) {
    const std::string& name = task.actions[a].text;
    cert.gamma[a] = matrix_from_json<S>(j.at("gamma").at(name), cert.m);
    cert.kappa[a] = vector_from_json<S>(j.at("kappa").at(name));
  }
  for (const auto& g : j.at("groups")) {
    CertGroup<S> cg;
    cg.task_index = g.at("task").get<int>();
    for (const auto& mem : g.at("members"))
      cg.members.push_back(task.action_index(mem.get<std::string>()));
    cg.lambda = vector_from_json<S>(g.at("lambda"));
    cg.d = matrix_from_json<S>(g.at("d"), task.n_states());
    cert.groups.push_back(std::move(cg));
  }
  return cert;
}

// ---- reports and analysis -----------------------------------------------------------

template <class S>
json report_to_json(const VerificationReport<S>& r, const Task<S>& task) {
  json violations = json::array();
  for (const auto& v : r.violations) {
    json induced = json::array(), optimal = json::array();
    for (int a : v.induced) induced.push_back(task.actions[a].text);
    for (int a : v.optimal) optimal.push_back(task.actions[a].text);
    violations.push_back(json{{"belief_counts", v.belief_counts},
                              {"induced", std::move(induced)},
                              {"optimal", std::move(optimal)},
                              {"report_error", v.report_error}});
  }
  return json{{"resolution", r.grid_resolution},
              {"checked", r.checked},
              {"violations", std::move(violations)},
              {"violation_count", r.violation_count},
              {"max_report_error", to_double(r.max_report_error)},
              {"verdict", r.verdict ? "pass" : "fail"}};
}

template <class S>
json graph_to_json(const AdjacencyGraph<S>& g, const Task<S>& task) {
  json edges = json::array();
  for (int e = 0; e < g.topo.n_edges(); ++e) {
    auto [a, b] = g.topo.edges[e];
    const auto& w = g.witness_for(a, b);
    edges.push_back(json{{"a", task.actions[a].text},
                         {"b", task.actions[b].text},
                         {"witness", vector_to_json<S>(w.p.p)},
                         {"gap", number_to_json<S>(w.gap)},
                         {"block", g.blocks.block_of_edge[e]}});
  }
  json blocks = json::array();
  for (const auto& blk : g.blocks.blocks) {
    json edges_of_block = json::array();
    for (int e : blk)
      edges_of_block.push_back(json::array({task.actions[g.topo.edges[e].first].text,
                                            task.actions[g.topo.edges[e].second].text}));
    blocks.push_back(std::move(edges_of_block));
  }
  json cuts = json::array();
  for (int v : g.blocks.cut_vertices) cuts.push_back(task.actions[v].text);
  json mcb = json::array();
  for (const auto& c : g.mcb) {
    json walk = json::array();
    for (int v : c.vertices) walk.push_back(task.actions[v].text);
    mcb.push_back(std::move(walk));
  }
  return json{{"actions", labels_to_json(task.actions)},
              {"edges", std::move(edges)},
              {"blocks", std::move(blocks)},
              {"cut_vertices", std::move(cuts)},
              {"mcb", std::move(mcb)},
              {"components",
               g.component.empty()
                   ? 0
                   : *std::max_element(g.component.begin(), g.component.end()) + 1}};
}

// DOT export with blocks colored and cut vertices double-circled.
template <class S>
std::string graph_to_dot(const AdjacencyGraph<S>& g, const Task<S>& task) {
  std::ostringstream dot;
  dot << "graph adjacency {\n  node [shape=circle];\n";
  std::set<int> cuts(g.blocks.cut_vertices.begin(), g.blocks.cut_vertices.end());
  for (int v = 0; v < g.topo.n; ++v) {
    dot << "  \"" << task.actions[v].text << "\"";
    if (cuts.count(v)) dot << " [shape=doublecircle]";
    dot << ";\n";
  }
  static const char* colors[] = {"black",      "royalblue3",  "firebrick3", "forestgreen",
                                 "darkorchid", "darkorange2", "deeppink3",  "steelblue4"};
  for (int e = 0; e < g.topo.n_edges(); ++e) {
    auto [a, b] = g.topo.edges[e];
    int blk = g.blocks.block_of_edge[e];
    dot << "  \"" << task.actions[a].text << "\" -- \"" << task.actions[b].text
        << "\" [color=" << colors[blk >= 0 ? blk % 8 : 0] << "];\n";
  }
  dot << "}\n";
  return dot.str();
}

// ---- file helpers ---------------------------------------------------------------------

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("parse error in " + path + ": " + e.what());
  }
  return j;
}

inline void save_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

}  // namespace elicit

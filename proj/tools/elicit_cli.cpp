// Command-line front end: load a task and question profile, analyze the
// adjacency graph, decide alignment, emit mechanisms, and verify them against
// the brute-force grid oracle.

#include <CLI11.hpp>

#include <iostream>

#include "elicit/elicit.hpp"

namespace {

using namespace elicit;

// stable, documented exit codes (see README)
enum ExitCode {
  kOk = 0,
  kParseError = 2,
  kBadInput = 3,
  kNotAligned = 4,
  kMechanismError = 5,
  kVerifyFailed = 6,
  kResourceGuard = 7,
};

struct CommonOpts {
  std::string backend = "rational";
  std::string task_file, questions_file, cert_file, scheme_file;
  std::string json_out, dot_out;
  std::string kind = "auto";
  std::string mech_type;
  std::string d_spec, partition_file, mode = "u-plus-d";
  std::string strategy = "minimal";
  bool naive = false;
  std::string fallback;
  int n = 20;
  int m_target = -1;
  std::uint64_t seed = 7;
  int trials = 0;
  double magnitude = 1.0;
};

template <class S>
CertKind pick_kind(const Task<S>& task, const AdjacencyGraph<S>& g, const std::string& kind) {
  if (kind == "joint") return CertKind::Joint;
  if (kind == "taskwise") return CertKind::Taskwise;
  if (kind == "blockwise") return CertKind::Blockwise;
  if (kind == "task-block-wise") return CertKind::TaskBlockwise;
  if (kind != "auto") throw std::invalid_argument("unknown alignment kind: " + kind);
  if (task.product) {
    for (const auto& f : task.product->factors) {
      auto gf = build_graph(f);
      if (gf.blocks.blocks.size() > 1) return CertKind::TaskBlockwise;
    }
    return CertKind::Taskwise;
  }
  if (g.blocks.blocks.size() > 1) return CertKind::Blockwise;
  return CertKind::Joint;
}

template <class S>
void print_analysis(const Task<S>& task, const AdjacencyGraph<S>& g,
                    const std::optional<QuestionProfile<S>>& x) {
  std::cout << "actions: " << task.n_actions() << ", states: " << task.n_states()
            << ", edges: " << g.topo.n_edges() << ", components: "
            << (g.component.empty()
                    ? 0
                    : *std::max_element(g.component.begin(), g.component.end()) + 1)
            << "\n";
  std::cout << "blocks: " << g.blocks.blocks.size();
  if (g.topo.n_edges() > 0 && g.mcb.empty()) std::cout << " (tree: no cycles)";
  std::cout << "\ncut vertices:";
  if (g.blocks.cut_vertices.empty()) std::cout << " none";
  for (int v : g.blocks.cut_vertices) std::cout << " " << task.actions[v].text;
  std::cout << "\nMCB: " << g.mcb.size() << " cycles, total length "
            << total_length(g.mcb) << "\n";
  for (const auto& c : g.mcb) {
    std::cout << "  cycle:";
    for (int v : c.vertices) std::cout << " " << task.actions[v].text;
    std::cout << "\n";
  }
  int m = x ? x->m : 1;
  auto a1 = check_assumption_cycle_length(g.mcb, task.n_states(), m);
  auto a2 = check_assumption_independence(task, g.mcb);
  bool all1 = std::all_of(a1.begin(), a1.end(), [](bool b) { return b; });
  bool all2 = std::all_of(a2.begin(), a2.end(), [](bool b) { return b; });
  std::cout << "cycle-length assumption (m=" << m << "): " << (all1 ? "holds" : "fails")
            << " (requires |states| >= m + max cycle length)\n";
  std::cout << "cycle-independence assumption: " << (all2 ? "holds" : "fails") << "\n";
  if (task.product) {
    auto a3 = check_assumption_product(task, g, g.mcb);
    bool all3 = std::all_of(a3.begin(), a3.end(), [](bool b) { return b; });
    std::cout << "product-cycle assumption: " << (all3 ? "holds" : "fails") << "\n";
  }
}

template <class S>
int cmd_analyze(const CommonOpts& opt) {
  auto task = task_from_json<S>(load_json_file(opt.task_file));
  auto g = build_graph(task);
  std::optional<QuestionProfile<S>> x;
  if (!opt.questions_file.empty())
    x = questions_from_json<S>(load_json_file(opt.questions_file), task);
  print_analysis(task, g, x);
  if (!opt.dot_out.empty()) save_text_file(opt.dot_out, graph_to_dot(g, task));
  if (!opt.json_out.empty()) save_text_file(opt.json_out, graph_to_json(g, task).dump(2));
  return kOk;
}

template <class S>
void print_not_aligned(const Task<S>& task, const NotAligned<S>& f) {
  std::cout << "not aligned: " << f.detail << "\n";
  if (f.cycle) {
    std::cout << "  witness cycle:";
    for (int v : f.cycle->vertices) std::cout << " " << task.actions[v].text;
    std::cout << "\n";
  }
  if (f.witness_pair.first >= 0)
    std::cout << "  witness pair: (" << task.actions[f.witness_pair.first].text << ", "
              << task.actions[f.witness_pair.second].text << ")\n";
  if (f.residual > 0) std::cout << "  residual: " << f.residual << "\n";
}

template <class S>
int cmd_align(const CommonOpts& opt) {
  auto task = task_from_json<S>(load_json_file(opt.task_file));
  auto x = questions_from_json<S>(load_json_file(opt.questions_file), task);

  if (opt.kind == "decompose") {
    if (x.m != 1) {
      std::cout << "decompose expects a single question\n";
      return kBadInput;
    }
    Mat<S> y(task.n_actions(), task.n_states());
    for (int a = 0; a < task.n_actions(); ++a) y.row(a) = x.X[a].row(0);
    int rank = check_m_decomposable(y);
    std::cout << "rank(Y) = " << rank << "; the question is " << rank
              << "-decomposable (and not less)\n";
    return kOk;
  }

  auto g = build_graph(task);
  CertKind kind = pick_kind(task, g, opt.kind);
  auto outcome = find_certificate(task, x, g, kind);
  if (!outcome.aligned()) {
    print_not_aligned(task, *outcome.failure);
    return kNotAligned;
  }
  auto check = verify_certificate(task, x, *outcome.cert);
  std::cout << "aligned (" << cert_kind_name(kind) << ", via " << outcome.route
            << " route); residual " << to_double(check.max_residual) << "\n";
  std::cout << "gamma family: " << gamma_family_name(classify_gamma_family(*outcome.cert))
            << "\n";
  if (!opt.json_out.empty())
    save_text_file(opt.json_out, certificate_to_json(*outcome.cert, task).dump(2));
  return kOk;
}

template <class S>
int cmd_decompose(const CommonOpts& opt) {
  auto task = task_from_json<S>(load_json_file(opt.task_file));
  auto x = questions_from_json<S>(load_json_file(opt.questions_file), task);
  if (x.m != 1) {
    std::cout << "decompose expects a single question\n";
    return kBadInput;
  }
  Mat<S> y(task.n_actions(), task.n_states());
  for (int a = 0; a < task.n_actions(); ++a) y.row(a) = x.X[a].row(0);
  int rank = check_m_decomposable(y);
  std::cout << "rank(Y) = " << rank << "\n";
  int m = opt.m_target > 0 ? opt.m_target : rank;
  auto dec = rank_decompose<S>(y, m);
  if (std::holds_alternative<int>(dec)) {
    std::cout << "no decomposition with m = " << m << " (rank is "
              << std::get<int>(dec) << ")\n";
    return kBadInput;
  }
  auto strat = opt.strategy == "full" ? SupplementStrategy::FullRank
                                      : SupplementStrategy::Minimal;
  auto sup = supplemental_profile(task, x, strat);
  std::cout << "supplemental profile: m = " << sup.profile.m << " ("
            << (strat == SupplementStrategy::FullRank ? "full-rank permutation"
                                                      : "minimal basis-row")
            << " construction)\n";
  if (!opt.json_out.empty()) {
    json out{{"rank", rank},
             {"G", matrix_to_json<S>(std::get<Decomposition<S>>(dec).g)},
             {"D", matrix_to_json<S>(std::get<Decomposition<S>>(dec).d)},
             {"questions", questions_to_json(sup.profile, task)},
             {"certificate", certificate_to_json(sup.cert, task)}};
    save_text_file(opt.json_out, out.dump(2));
  }
  return kOk;
}

template <class S>
RowVec<S> parse_d_spec(const std::string& spec, const Task<S>& task) {
  if (spec.empty()) return RowVec<S>::Zero(task.n_states());
  json j = (spec.front() == '[') ? json::parse(spec) : load_json_file(spec);
  if (j.is_object() && j.contains("d")) j = j["d"];
  Vec<S> v = vector_from_json<S>(j);
  if (v.size() != task.n_states())
    throw std::invalid_argument("d must have one entry per state");
  return v.transpose();
}

template <class S>
std::vector<std::vector<int>> parse_partition(const std::string& file, const Task<S>& task) {
  json j = load_json_file(file);
  if (j.is_object() && j.contains("partition")) j = j["partition"];
  std::vector<std::vector<int>> out;
  for (const auto& cell : j) {
    std::vector<int> ids;
    for (const auto& label : cell) ids.push_back(task.action_index(label.get<std::string>()));
    out.push_back(std::move(ids));
  }
  return out;
}

template <class S>
int cmd_mechanism(const CommonOpts& opt) {
  auto task = task_from_json<S>(load_json_file(opt.task_file));
  PaymentScheme<S> scheme;
  std::optional<QuestionProfile<S>> x;
  if (!opt.questions_file.empty())
    x = questions_from_json<S>(load_json_file(opt.questions_file), task);

  if (opt.mech_type == "csr") {
    if (!x) throw std::invalid_argument("csr needs --questions");
    scheme = build_csr(task, *x);
  } else if (opt.mech_type == "br") {
    scheme = build_belief_revelation(task);
  } else if (opt.mech_type == "coarse-csr") {
    if (!x) throw std::invalid_argument("coarse-csr needs --questions");
    if (opt.partition_file.empty()) throw std::invalid_argument("coarse-csr needs --partition");
    scheme = build_coarse_csr(task, *x, parse_partition<S>(opt.partition_file, task));
  } else if (opt.mech_type == "bdm") {
    if (opt.naive) {
      if (!x) throw std::invalid_argument("naive bdm needs --questions");
      scheme = build_naive_bdm(task, *x);
    } else {
      auto mode = opt.mode == "d" ? BdmMode::QuestionIsD : BdmMode::QuestionIsUPlusD;
      scheme = build_bdm(task, parse_d_spec<S>(opt.d_spec, task), mode);
    }
  } else if (opt.mech_type == "joint-bdm") {
    if (!x) throw std::invalid_argument("joint-bdm needs --questions");
    AlignmentCertificate<S> cert;
    if (!opt.cert_file.empty()) {
      cert = certificate_from_json<S>(load_json_file(opt.cert_file), task);
    } else {
      auto g = build_graph(task);
      auto outcome = find_certificate(task, *x, g, pick_kind(task, g, opt.kind));
      if (!outcome.aligned()) {
        print_not_aligned(task, *outcome.failure);
        return kNotAligned;
      }
      cert = *outcome.cert;
    }
    scheme = build_joint_bdm(task, *x, cert);
  } else {
    throw std::invalid_argument("unknown mechanism type: " + opt.mech_type);
  }

  std::cout << "mechanism " << opt.mech_type << ": report_dim = " << scheme.report_dim
            << "\n";
  if (!opt.json_out.empty())
    save_text_file(opt.json_out, scheme_to_json(scheme, task).dump(2));
  return kOk;
}

template <class S>
int cmd_verify(const CommonOpts& opt) {
  auto task = task_from_json<S>(load_json_file(opt.task_file));
  auto scheme = scheme_from_json<S>(load_json_file(opt.scheme_file), task);
  if (!opt.questions_file.empty()) {
    auto x = questions_from_json<S>(load_json_file(opt.questions_file), task);
    auto report = verify_incentivizable(scheme, task, x, opt.n);
    std::cout << (report.verdict ? "pass" : "fail") << " at resolution " << opt.n << " ("
              << report.checked << " beliefs, " << report.violation_count
              << " violations, max report error " << to_double(report.max_report_error)
              << ")\n";
    for (size_t i = 0; i < report.violations.size() && i < 5; ++i) {
      const auto& v = report.violations[i];
      std::cout << "  violation at counts [";
      for (size_t k = 0; k < v.belief_counts.size(); ++k)
        std::cout << (k ? "," : "") << v.belief_counts[k];
      std::cout << "]/" << opt.n << ": induced {";
      for (size_t k = 0; k < v.induced.size(); ++k)
        std::cout << (k ? "," : "") << task.actions[v.induced[k]].text;
      std::cout << "} vs optimal {";
      for (size_t k = 0; k < v.optimal.size(); ++k)
        std::cout << (k ? "," : "") << task.actions[v.optimal[k]].text;
      std::cout << "}\n";
    }
    if (!opt.json_out.empty())
      save_text_file(opt.json_out, report_to_json(report, task).dump(2));
    return report.verdict ? kOk : kVerifyFailed;
  }
  auto distortions = detect_distortion(scheme, task, opt.n);
  std::cout << (distortions.empty() ? "no action distortion" : "action distortion found")
            << " at resolution " << opt.n << " (" << distortions.size() << " beliefs)\n";
  return distortions.empty() ? kOk : kVerifyFailed;
}

template <class S>
int cmd_pipeline(const CommonOpts& opt) {
  auto task = task_from_json<S>(load_json_file(opt.task_file));
  auto x = questions_from_json<S>(load_json_file(opt.questions_file), task);
  auto g = build_graph(task);
  print_analysis(task, g, std::optional<QuestionProfile<S>>(x));
  if (!opt.dot_out.empty()) save_text_file(opt.dot_out, graph_to_dot(g, task));

  CertKind kind = pick_kind(task, g, opt.kind);
  std::cout << "alignment kind: " << cert_kind_name(kind) << "\n";
  auto outcome = find_certificate(task, x, g, kind);

  PaymentScheme<S> scheme;
  QuestionProfile<S> effective = x;
  if (outcome.aligned()) {
    std::cout << "aligned via " << outcome.route << " route\n";
    scheme = build_joint_bdm(task, x, *outcome.cert);
  } else if (opt.fallback == "csr" && x.m == 1) {
    print_not_aligned(task, *outcome.failure);
    std::cout << "falling back to CSR over counterfactual reports\n";
    scheme = build_csr(task, x);
    effective = csr_effective_profile(task, x);
  } else {
    print_not_aligned(task, *outcome.failure);
    return kNotAligned;
  }

  auto report = verify_incentivizable(scheme, task, effective, opt.n);
  std::cout << "verification: " << (report.verdict ? "pass" : "fail") << " at resolution "
            << opt.n << " (" << report.checked << " beliefs)\n";
  if (!opt.json_out.empty()) {
    json bundle{{"analysis", graph_to_json(g, task)},
                {"scheme", scheme_to_json(scheme, task)},
                {"report", report_to_json(report, task)}};
    if (outcome.aligned())
      bundle["certificate"] = certificate_to_json(*outcome.cert, task);
    save_text_file(opt.json_out, bundle.dump(2));
  }
  return report.verdict ? kOk : kVerifyFailed;
}

template <int (*F)(const CommonOpts&)>
struct Dispatch;

int dispatch(const std::string& backend, const CommonOpts& opt,
             int (*rational_fn)(const CommonOpts&), int (*float_fn)(const CommonOpts&)) {
  if (backend == "rational") return rational_fn(opt);
  if (backend == "float") return float_fn(opt);
  throw std::invalid_argument("backend must be rational or float");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "elicit: nondistortionary belief-elicitation mechanisms, alignment "
      "certificates, and grid verification"};
  app.require_subcommand(1);
  CommonOpts opt;
  app.add_option("--backend", opt.backend, "arithmetic backend: rational | float")
      ->capture_default_str();

  auto add_common = [&](CLI::App* cmd, bool need_task, bool need_questions) {
    auto* t = cmd->add_option("--task", opt.task_file, "task JSON file");
    if (need_task) t->required();
    auto* q = cmd->add_option("--questions", opt.questions_file, "question profile JSON file");
    if (need_questions) q->required();
    cmd->add_option("--json-out", opt.json_out, "write machine-readable output here");
  };

  auto* analyze = app.add_subcommand("analyze", "adjacency graph, blocks, MCB, assumptions");
  add_common(analyze, true, false);
  analyze->add_option("--dot", opt.dot_out, "write a DOT rendering of the graph");

  auto* align = app.add_subcommand("align", "decide alignment and emit a certificate");
  add_common(align, true, true);
  align->add_option("--kind", opt.kind,
                    "joint | taskwise | blockwise | task-block-wise | decompose | auto")
      ->capture_default_str();

  auto* decompose = app.add_subcommand("decompose", "rank-decompose a single question");
  add_common(decompose, true, true);
  decompose->add_option("--m", opt.m_target, "target number of questions (default: rank)");
  decompose->add_option("--strategy", opt.strategy, "minimal | full")->capture_default_str();

  auto* mech = app.add_subcommand("mechanism", "construct a payment scheme");
  mech->add_option("type", opt.mech_type, "csr | bdm | joint-bdm | br | coarse-csr")
      ->required();
  add_common(mech, true, false);
  mech->add_option("--cert", opt.cert_file, "alignment certificate (joint-bdm)");
  mech->add_option("--d", opt.d_spec, "state vector d as JSON array or file (bdm)");
  mech->add_option("--mode", opt.mode, "bdm mode: u-plus-d | d")->capture_default_str();
  mech->add_flag("--naive", opt.naive, "score the question directly with BDM (distortion demo)");
  mech->add_option("--partition", opt.partition_file, "action partition JSON (coarse-csr)");

  auto* verify = app.add_subcommand("verify", "grid-verify a scheme against a task");
  add_common(verify, true, false);
  verify->add_option("--scheme", opt.scheme_file, "payment scheme JSON")->required();
  verify->add_option("--n", opt.n, "simplex grid resolution")->capture_default_str();
  verify->add_option("--seed", opt.seed, "seed recorded in reports")->capture_default_str();

  auto* pipeline =
      app.add_subcommand("pipeline", "analyze, align, build, and verify in one pass");
  add_common(pipeline, true, true);
  pipeline->add_option("--kind", opt.kind, "alignment kind or auto")->capture_default_str();
  pipeline->add_option("--fallback", opt.fallback, "csr: fall back to CSR when not aligned");
  pipeline->add_option("--n", opt.n, "simplex grid resolution")->capture_default_str();
  pipeline->add_option("--seed", opt.seed, "seed recorded in reports")->capture_default_str();
  pipeline->add_option("--dot", opt.dot_out, "write a DOT rendering of the graph");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed())
      return dispatch(opt.backend, opt, &cmd_analyze<elicit::Rational>, &cmd_analyze<double>);
    if (align->parsed())
      return dispatch(opt.backend, opt, &cmd_align<elicit::Rational>, &cmd_align<double>);
    if (decompose->parsed())
      return dispatch(opt.backend, opt, &cmd_decompose<elicit::Rational>,
                      &cmd_decompose<double>);
    if (mech->parsed())
      return dispatch(opt.backend, opt, &cmd_mechanism<elicit::Rational>,
                      &cmd_mechanism<double>);
    if (verify->parsed())
      return dispatch(opt.backend, opt, &cmd_verify<elicit::Rational>, &cmd_verify<double>);
    if (pipeline->parsed())
      return dispatch(opt.backend, opt, &cmd_pipeline<elicit::Rational>,
                      &cmd_pipeline<double>);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kParseError;
  } catch (const std::runtime_error& e) {
    std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    if (what.find("parse error") != std::string::npos ||
        what.find("cannot open") != std::string::npos)
      return kParseError;
    return kBadInput;
  } catch (const std::invalid_argument& e) {
    std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    if (what.find("grid") != std::string::npos || what.find("budget") != std::string::npos)
      return kResourceGuard;
    return kBadInput;
  }
  return kOk;
}

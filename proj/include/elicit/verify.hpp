#pragma once

#include "alignment.hpp"
#include "grid.hpp"
#include "mechanisms.hpp"

namespace elicit {

// One grid belief at which the scheme misbehaves.
template <class S>
struct Violation {
  std::vector<int> belief_counts;  // belief = counts / resolution
  std::vector<int> induced;
  std::vector<int> optimal;
  double report_error = 0.0;
};

template <class S>
struct VerificationReport {
  int grid_resolution = 0;
  long long checked = 0;
  std::vector<Violation<S>> violations;  // capped; total count below
  long long violation_count = 0;
  S max_report_error = S(0);
  bool verdict = false;

  static constexpr size_t kMaxStoredViolations = 64;
};

// Brute-force oracle: at every grid belief the induced action set must equal
// the task optimum and every induced action's optimal report must equal the
// truthful statistic E_p X(a). Failures are data, not errors.
template <class S>
VerificationReport<S> verify_incentivizable(const PaymentScheme<S>& v, const Task<S>& task,
                                            const QuestionProfile<S>& x, int n) {
  task.validate();
  x.validate(task);
  v.validate();
  S tol = scalar_traits<S>::exact ? S(0) : scalar_traits<S>::residual_tol();

  long long size = simplex_grid_size(task.n_states(), n);
  if (size > max_grid_points())
    throw std::invalid_argument("grid too large; set ELICIT_MAX_GRID to override");

  VerificationReport<S> report;
  report.grid_resolution = n;
  for_each_composition(task.n_states(), n, [&](const std::vector<int>& counts) {
    Belief<S> p = belief_from_counts<S>(counts, n);
    auto optimal = task_optimal_actions(task, p);
    auto induced = induced_actions(v, task, p);
    bool action_ok = induced == optimal;

    S report_err(0);
    for (int a : induced) {
      Vec<S> r = optimal_report(v, task, p, a);
      Vec<S> truthful = expected_rows<S>(p, x.X[a]);
      S err = max_abs(Vec<S>(r - truthful));
      if (err > report_err) report_err = err;
    }
    if (report_err > report.max_report_error) report.max_report_error = report_err;

    if (!action_ok || report_err > tol) {
      ++report.violation_count;
      if (report.violations.size() < VerificationReport<S>::kMaxStoredViolations)
        report.violations.push_back(
            Violation<S>{counts, induced, optimal, to_double(report_err)});
    }
    ++report.checked;
  });
  report.verdict = report.violation_count == 0 && report.max_report_error <= tol;
  return report;
}

// Action distortion only: beliefs where the induced set differs from the task
// optimum.
template <class S>
std::vector<Violation<S>> detect_distortion(const PaymentScheme<S>& v, const Task<S>& task,
                                            int n) {
  task.validate();
  v.validate();
  std::vector<Violation<S>> out;
  for_each_composition(task.n_states(), n, [&](const std::vector<int>& counts) {
    Belief<S> p = belief_from_counts<S>(counts, n);
    auto optimal = task_optimal_actions(task, p);
    auto induced = induced_actions(v, task, p);
    if (induced != optimal) out.push_back(Violation<S>{counts, induced, optimal, 0.0});
  });
  return out;
}

// ---- robustness sampling ------------------------------------------------------------

template <class S>
struct RobustTrial {
  bool aligned = false;
  bool verified = false;
  std::string failure;

  bool pass() const { return aligned && verified; }
};

template <class S>
struct RobustnessReport {
  std::uint64_t seed = 0;
  int trials = 0;
  int passed = 0;
  std::vector<RobustTrial<S>> trial_results;

  bool all_pass() const { return passed == trials; }
};

// Samples perturbations X_t(a) = X(a) + mu(a) t with t entries uniform in
// [-magnitude, magnitude] (dyadic rationals, so both backends are exact) and
// re-runs alignment + joint BDM + grid verification per trial.
template <class S>
RobustnessReport<S> verify_robust(const Task<S>& task, const QuestionProfile<S>& x,
                                  const std::vector<Mat<S>>& mu, int trials, const S& magnitude,
                                  int n, std::uint64_t seed, CertKind kind = CertKind::Joint) {
  task.validate();
  x.validate(task);
  if (static_cast<int>(mu.size()) != task.n_actions())
    throw std::invalid_argument("mu must give one matrix per action");
  for (const auto& m_a : mu)
    if (!is_invertible(m_a)) throw std::invalid_argument("mu(a) must be invertible");

  auto graph = build_graph(task);  // perturbing the questions leaves the task fixed
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> grid64(-64, 64);

  RobustnessReport<S> report;
  report.seed = seed;
  report.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    Mat<S> t(x.m, task.n_states());
    for (int j = 0; j < x.m; ++j)
      for (int st = 0; st < task.n_states(); ++st)
        t(j, st) = magnitude * scalar_cast<S>(Rational(grid64(rng), 64));

    QuestionProfile<S> xt = x;
    for (int a = 0; a < task.n_actions(); ++a) xt.X[a] += mu[a] * t;

    RobustTrial<S> result;
    auto outcome = find_certificate(task, xt, graph, kind);
    if (!outcome.aligned()) {
      result.failure = outcome.failure ? outcome.failure->detail : "not aligned";
    } else {
      result.aligned = true;
      try {
        auto scheme = build_joint_bdm(task, xt, *outcome.cert);
        auto vr = verify_incentivizable(scheme, task, xt, n);
        result.verified = vr.verdict;
        if (!vr.verdict) result.failure = "grid verification failed";
      } catch (const std::exception& e) {
        result.failure = e.what();
      }
    }
    if (result.pass()) ++report.passed;
    report.trial_results.push_back(std::move(result));
  }
  return report;
}

}  // namespace elicit

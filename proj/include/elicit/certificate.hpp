#pragma once

#include "model.hpp"

namespace elicit {

enum class CertKind { Joint, Individual, Taskwise, Blockwise, TaskBlockwise };

inline const char* cert_kind_name(CertKind k) {
  switch (k) {
    case CertKind::Joint: return "joint";
    case CertKind::Individual: return "individual";
    case CertKind::Taskwise: return "taskwise";
    case CertKind::Blockwise: return "blockwise";
    case CertKind::TaskBlockwise: return "task-block-wise";
  }
  return "?";
}

// One (lambda, d) pair. task_index -1 means lambda multiplies the full task
// payoff row u(a); otherwise the lifted factor payoff of that task.
template <class S>
struct CertGroup {
  Vec<S> lambda;             // m
  Mat<S> d;                  // m x |states|
  int task_index = -1;
  std::vector<int> members;  // action ids the group covers
};

// Witnesses X(a) = Gamma(a) (sum of group terms) + kappa(a) 1.
//   joint/individual: one group, applies to every action.
//   blockwise: one group per block; an action satisfies the identity for
//     every block containing it (cut vertices sit in several).
//   taskwise: one group per task, all summed.
//   task-block-wise: one group per (task, block of that task's graph); for
//     each way of assigning the action's coordinates to blocks, the summed
//     identity must hold.
template <class S>
struct AlignmentCertificate {
  CertKind kind = CertKind::Joint;
  int m = 0;
  std::vector<Mat<S>> gamma;  // per action, m x m
  std::vector<Vec<S>> kappa;  // per action, m
  std::vector<CertGroup<S>> groups;

  int n_actions() const { return static_cast<int>(gamma.size()); }
};

namespace detail {

// Lists the group-index sets whose summed terms must reproduce X(a).
template <class S>
std::vector<std::vector<int>> cert_assignments(const AlignmentCertificate<S>& cert, int a) {
  switch (cert.kind) {
    case CertKind::Joint:
    case CertKind::Individual: {
      // one group normally; one per connected component when the adjacency
      // graph is disconnected (alignment is reported per component)
      if (cert.groups.size() == 1) return {{0}};
      std::vector<std::vector<int>> out;
      for (size_t g = 0; g < cert.groups.size(); ++g) {
        const auto& mem = cert.groups[g].members;
        if (std::find(mem.begin(), mem.end(), a) != mem.end())
          out.push_back({static_cast<int>(g)});
      }
      return out;
    }
    case CertKind::Taskwise: {
      std::vector<int> all(cert.groups.size());
      for (size_t g = 0; g < cert.groups.size(); ++g) all[g] = static_cast<int>(g);
      return {all};
    }
    case CertKind::Blockwise: {
      std::vector<std::vector<int>> out;
      for (size_t g = 0; g < cert.groups.size(); ++g) {
        const auto& mem = cert.groups[g].members;
        if (std::find(mem.begin(), mem.end(), a) != mem.end())
          out.push_back({static_cast<int>(g)});
      }
      return out;
    }
    case CertKind::TaskBlockwise: {
      // one choice per task among the groups covering a
      std::map<int, std::vector<int>> per_task;
      for (size_t g = 0; g < cert.groups.size(); ++g) {
        const auto& mem = cert.groups[g].members;
        if (std::find(mem.begin(), mem.end(), a) != mem.end())
          per_task[cert.groups[g].task_index].push_back(static_cast<int>(g));
      }
      std::vector<std::vector<int>> out{{}};
      for (const auto& [task, choices] : per_task) {
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
RowVec<S> cert_u_row(const Task<S>& task, const CertGroup<S>& group, int a) {
  if (group.task_index < 0) return RowVec<S>(task.u.row(a));
  return lifted_factor_row(task, group.task_index, a);
}

// The bracket Gamma(a)^-1 (X(a) - kappa(a) 1) must equal for one assignment.
template <class S>
Mat<S> cert_bracket(const Task<S>& task, const AlignmentCertificate<S>& cert, int a,
                    const std::vector<int>& assignment) {
  Mat<S> q = Mat<S>::Zero(cert.m, task.n_states());
  for (int g : assignment) {
    const auto& grp = cert.groups[g];
    RowVec<S> urow = cert_u_row(task, grp, a);
    q += grp.lambda * urow;
    q += grp.d;
  }
  return q;
}

}  // namespace detail

template <class S>
struct CertificateCheck {
  bool identity_ok = false;
  S max_residual = S(0);
  bool all_gamma_invertible = false;
  std::vector<int> singular_actions;

  // identity holds and every Gamma(a) is invertible
  bool strict_ok() const { return identity_ok && all_gamma_invertible; }
};

// Checks the defining identity of cert.kind row-exactly for every action (and
// every applicable block assignment) and reports the worst residual. Singular
// Gamma(a) is reported rather than thrown so that published certificates that
// are degenerate at isolated actions can still be audited.
template <class S>
CertificateCheck<S> verify_certificate(const Task<S>& task, const QuestionProfile<S>& x,
                                       const AlignmentCertificate<S>& cert) {
  task.validate();
  x.validate(task);
  if (cert.n_actions() != task.n_actions() || cert.m != x.m)
    throw std::invalid_argument("certificate dimensions do not match task/profile");

  CertificateCheck<S> out;
  out.all_gamma_invertible = true;
  RowVec<S> ones = RowVec<S>::Ones(task.n_states());
  for (int a = 0; a < task.n_actions(); ++a) {
    if (!is_invertible(cert.gamma[a])) {
      out.all_gamma_invertible = false;
      out.singular_actions.push_back(a);
    }
    auto assignments = detail::cert_assignments(cert, a);
    if (assignments.empty())
      throw std::invalid_argument("certificate covers no group for action " +
                                  task.actions[a].text);
    for (const auto& asg : assignments) {
      Mat<S> q = detail::cert_bracket(task, cert, a, asg);
      Mat<S> residual = x.X[a] - cert.gamma[a] * q - cert.kappa[a] * ones;
      S r = max_abs(residual);
      if (r > out.max_residual) out.max_residual = r;
    }
  }
  S tol = scalar_traits<S>::exact ? S(0) : scalar_traits<S>::residual_tol();
  out.identity_ok = out.max_residual <= tol;
  return out;
}

}  // namespace elicit

#pragma once

#include "numeric.hpp"

namespace elicit {

// Dense two-phase primal simplex in equality form:
//   maximize c.x  subject to  A x = b, x >= 0.
// Bland's rule throughout, so it terminates on degenerate instances. Exact
// over Rational; the double instantiation treats |.| <= eps as zero.
template <class S>
struct LpResult {
  enum class Status { Optimal, Infeasible, Unbounded };
  Status status = Status::Infeasible;
  Vec<S> x;
  S objective = S(0);
};

template <class S>
class SimplexSolver {
 public:
  LpResult<S> maximize(Mat<S> a, Vec<S> b, const Vec<S>& c) {
    const int m = static_cast<int>(a.rows());
    const int n = static_cast<int>(a.cols());
    if (b.size() != m || c.size() != n)
      throw std::invalid_argument("lp: shape mismatch");

    for (int i = 0; i < m; ++i)
      if (b(i) < S(0)) {
        a.row(i) = -a.row(i);
        b(i) = -b(i);
      }

    // tableau: columns = n structural + m artificial + rhs
    cols_ = n + m;
    tab_ = Mat<S>::Zero(m + 1, cols_ + 1);
    tab_.block(0, 0, m, n) = a;
    for (int i = 0; i < m; ++i) {
      tab_(i, n + i) = S(1);
      tab_(i, cols_) = b(i);
    }
    basis_.resize(m);
    for (int i = 0; i < m; ++i) basis_[i] = n + i;

    // phase 1: minimize artificial sum == maximize -(sum of artificials)
    for (int j = 0; j < cols_; ++j) {
      S coef(0);
      for (int i = 0; i < m; ++i)
        if (basis_[i] == n + i) coef += tab_(i, j);
      tab_(m, j) = coef;  // reduced costs of -sum(artificials), negated below
    }
    S rhs_sum(0);
    for (int i = 0; i < m; ++i) rhs_sum += tab_(i, cols_);
    tab_(m, cols_) = rhs_sum;
    // objective row holds sum over basic artificial rows; pivot to drive to 0
    run_phase(n + m);
    if (!is_zero(tab_(m, cols_))) {
      LpResult<S> r;
      r.status = LpResult<S>::Status::Infeasible;
      return r;
    }
    // kick remaining artificials out of the basis when possible
    for (int i = 0; i < m; ++i) {
      if (basis_[i] >= n) {
        int enter = -1;
        for (int j = 0; j < n; ++j)
          if (!is_zero(tab_(i, j))) {
            enter = j;
            break;
          }
        if (enter >= 0) pivot(i, enter);
        // else: redundant row, keep the artificial at value 0
      }
    }

    // phase 2 objective row, kept as c_j - z_j so that positive = improving
    for (int j = 0; j <= cols_; ++j) tab_(m, j) = S(0);
    for (int j = 0; j < n; ++j) tab_(m, j) = c(j);
    for (int i = 0; i < m; ++i)
      if (basis_[i] < n && !is_zero(c(basis_[i])))
        tab_.row(m) -= c(basis_[i]) * tab_.row(i);
    if (!run_phase(n)) {
      LpResult<S> r;
      r.status = LpResult<S>::Status::Unbounded;
      return r;
    }

    LpResult<S> r;
    r.status = LpResult<S>::Status::Optimal;
    r.x = Vec<S>::Zero(n);
    for (int i = 0; i < m; ++i)
      if (basis_[i] < n) r.x(basis_[i]) = tab_(i, cols_);
    r.objective = -tab_(m, cols_);
    return r;
  }

 private:
  static bool is_zero(const S& v) {
    if constexpr (scalar_traits<S>::exact) return v == S(0);
    return abs_val(v) <= S(1e-9);
  }
  static bool is_pos(const S& v) { return v > S(0) && !is_zero(v); }

  void pivot(int row, int col) {
    const int m = static_cast<int>(tab_.rows()) - 1;
    S pv = tab_(row, col);
    tab_.row(row) /= pv;
    for (int i = 0; i <= m; ++i) {
      if (i == row) continue;
      S f = tab_(i, col);
      if (!is_zero(f)) tab_.row(i) -= f * tab_.row(row);
    }
    basis_[row] = col;
  }

  // Pivots until no entering column with positive reduced improvement exists
  // among the first `eligible` columns. Returns false when unbounded.
  bool run_phase(int eligible) {
    const int m = static_cast<int>(tab_.rows()) - 1;
    while (true) {
      int enter = -1;
      for (int j = 0; j < eligible; ++j) {
        if (is_pos(tab_(m, j))) {  // Bland: first improving column
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      int leave = -1;
      for (int i = 0; i < m; ++i) {
        if (!is_pos(tab_(i, enter))) continue;
        if (leave < 0) {
          leave = i;
          continue;
        }
        S lhs = tab_(i, cols_) * tab_(leave, enter);
        S rhs = tab_(leave, cols_) * tab_(i, enter);
        if (lhs < rhs || (lhs == rhs && basis_[i] < basis_[leave])) leave = i;
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

  Mat<S> tab_;
  std::vector<int> basis_;
  int cols_ = 0;
};

template <class S>
LpResult<S> lp_maximize(const Mat<S>& a, const Vec<S>& b, const Vec<S>& c) {
  SimplexSolver<S> solver;
  return solver.maximize(a, b, c);
}

}  // namespace elicit

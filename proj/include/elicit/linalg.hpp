#pragma once

#include <optional>
#include <random>

#include "numeric.hpp"

namespace elicit {

namespace detail {

// FullPivLU with the backend's rank threshold. Exact (threshold 0) for
// Rational; relative threshold for double.
template <class S>
Eigen::FullPivLU<Mat<S>> pivoted_lu(const Mat<S>& m) {
  Eigen::FullPivLU<Mat<S>> lu(m);
  if constexpr (scalar_traits<S>::exact) {
    lu.setThreshold(S(0));
  } else {
    lu.setThreshold(scalar_traits<S>::rank_tol());
  }
  return lu;
}

}  // namespace detail

template <class S>
int matrix_rank(const Mat<S>& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  if constexpr (scalar_traits<S>::exact) {
    return static_cast<int>(detail::pivoted_lu(m).rank());
  } else {
    Eigen::JacobiSVD<Mat<double>> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    double cut = scalar_traits<double>::rank_tol() * sv(0);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > cut) ++r;
    return r;
  }
}

// Basis of the (right) nullspace, one column per kernel direction.
template <class S>
Mat<S> kernel_basis(const Mat<S>& m) {
  if (m.cols() == 0) return Mat<S>(0, 0);
  if (m.rows() == 0) return Mat<S>::Identity(m.cols(), m.cols());
  auto lu = detail::pivoted_lu(m);
  if (lu.dimensionOfKernel() == 0) return Mat<S>(m.cols(), 0);
  return lu.kernel();
}

template <class S>
std::optional<Mat<S>> try_invert(const Mat<S>& m) {
  if (m.rows() != m.cols()) return std::nullopt;
  auto lu = detail::pivoted_lu(m);
  if (!lu.isInvertible()) return std::nullopt;
  return lu.inverse();
}

template <class S>
bool is_invertible(const Mat<S>& m) {
  return try_invert(m).has_value();
}

// Solves M x = rhs (possibly over/under-determined); returns a solution and
// its residual max |M x - rhs|. Caller decides whether the residual is
// acceptable.
template <class S>
struct LinearSolution {
  Mat<S> x;
  S residual;
};

template <class S>
LinearSolution<S> solve_linear(const Mat<S>& m, const Mat<S>& rhs) {
  auto lu = detail::pivoted_lu(m);
  Mat<S> x = lu.solve(rhs);
  Mat<S> r = m * x - rhs;
  return {std::move(x), max_abs(r)};
}

// Unique w with w * a = b when a has full row rank: w = b a' (a a')^{-1}.
// residual is nonzero when b's rows are not in a's row space.
template <class S>
struct RowMapSolution {
  Mat<S> w;
  S residual;
  bool full_row_rank;
};

template <class S>
RowMapSolution<S> solve_row_map(const Mat<S>& a, const Mat<S>& b) {
  Mat<S> gram = a * a.transpose();
  auto inv = try_invert(gram);
  if (!inv) return {Mat<S>(), S(0), false};
  Mat<S> w = b * a.transpose() * (*inv);
  Mat<S> r = w * a - b;
  return {std::move(w), max_abs(r), true};
}

template <class S>
bool is_diagonal(const Mat<S>& m, const S& tol) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (i != j && abs_val(m(i, j)) > tol) return false;
  return true;
}

template <class S>
bool commute(const Mat<S>& a, const Mat<S>& b, const S& tol) {
  return max_abs(Mat<S>(a * b - b * a)) <= tol;
}

// ---- random helpers (seeded, deterministic) ----------------------------------

inline Rational random_rational(std::mt19937_64& rng, int max_num = 9, int max_den = 4) {
  std::uniform_int_distribution<int> num(-max_num, max_num);
  std::uniform_int_distribution<int> den(1, max_den);
  return Rational(num(rng), den(rng));
}

template <class S>
S random_scalar(std::mt19937_64& rng, int max_num = 9, int max_den = 4) {
  Rational r = random_rational(rng, max_num, max_den);
  return scalar_cast<S>(r);
}

template <class S>
Mat<S> random_matrix(std::mt19937_64& rng, int rows, int cols, int max_num = 9, int max_den = 4) {
  Mat<S> m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = random_scalar<S>(rng, max_num, max_den);
  return m;
}

template <class S>
Mat<S> random_invertible(std::mt19937_64& rng, int n, int max_num = 9, int max_den = 4) {
  for (int attempt = 0; attempt < 256; ++attempt) {
    Mat<S> m = random_matrix<S>(rng, n, n, max_num, max_den);
    if (is_invertible(m)) return m;
  }
  throw std::runtime_error("random_invertible: exhausted attempts");
}

}  // namespace elicit

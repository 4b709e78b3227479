#pragma once

#include <Eigen/Dense>
#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/eigen.hpp>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace elicit {

// Exact backend. All qualitative decisions (rank, ties, adjacency) are exact
// when inputs are rational; the double backend is for verification sweeps and
// large grids.
using Rational = boost::multiprecision::mpq_rational;

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

template <class S>
struct scalar_traits;

template <>
struct scalar_traits<double> {
  static constexpr bool exact = false;
  // relative argmax tie tolerance
  static double tie_tol() { return 1e-9; }
  // residual tolerance for certificate identities and linear solves
  static double residual_tol() { return 1e-9; }
  // singular values below rank_tol * (largest singular value) count as zero
  static double rank_tol() { return 1e-9; }
  // cycle products / potential reconstruction
  static double potential_tol() { return 1e-8; }
  static double zero_tol() { return 1e-12; }
};

template <>
struct scalar_traits<Rational> {
  static constexpr bool exact = true;
  static Rational tie_tol() { return Rational(0); }
  static Rational residual_tol() { return Rational(0); }
  static Rational rank_tol() { return Rational(0); }
  static Rational potential_tol() { return Rational(0); }
  static Rational zero_tol() { return Rational(0); }
};

inline double to_double(double x) { return x; }
inline double to_double(const Rational& x) { return x.template convert_to<double>(); }

template <class S>
S abs_val(const S& x) {
  using std::abs;
  return abs(x);
}

// ---- scalar conversions -----------------------------------------------------

template <class To, class From>
To scalar_cast(const From& x) {
  if constexpr (std::is_same_v<To, From>) {
    return x;
  } else if constexpr (std::is_same_v<To, double>) {
    return to_double(x);
  } else {
    // double -> Rational: exact binary value of the double
    return Rational(x);
  }
}

template <class To, class From>
Mat<To> matrix_cast(const Mat<From>& m) {
  Mat<To> r(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(i, j) = scalar_cast<To>(m(i, j));
  return r;
}

template <class To, class From>
Vec<To> vector_cast(const Vec<From>& v) {
  Vec<To> r(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) r(i) = scalar_cast<To>(v(i));
  return r;
}

// ---- parsing ----------------------------------------------------------------

// Parses "p/q", integers, and plain decimal/scientific literals into an exact
// rational ("0.6" -> 3/5, "1e-2" -> 1/100).
inline Rational rational_from_string(std::string_view s) {
  auto fail = [&] { throw std::invalid_argument("not a number: '" + std::string(s) + "'"); };
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) fail();

  auto slash = s.find('/');
  if (slash != std::string_view::npos) {
    using Int = boost::multiprecision::mpz_int;
    try {
      Int num(std::string(s.substr(0, slash)));
      Int den(std::string(s.substr(slash + 1)));
      if (den == 0) fail();
      return Rational(num, den);
    } catch (const std::exception&) {
      fail();
    }
  }

  bool neg = false;
  size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = (s[i++] == '-');
  std::string digits;
  long frac_digits = 0;
  bool any = false, dot = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (dot) ++frac_digits;
      any = true;
    } else if (c == '.' && !dot) {
      dot = true;
    } else if (c == 'e' || c == 'E') {
      break;
    } else {
      fail();
    }
  }
  if (!any) fail();
  long exp10 = 0;
  if (i < s.size()) {  // exponent part
    ++i;
    bool eneg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) eneg = (s[i++] == '-');
    if (i >= s.size()) fail();
    for (; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') fail();
      exp10 = exp10 * 10 + (s[i] - '0');
      if (exp10 > 100000) fail();
    }
    if (eneg) exp10 = -exp10;
  }
  using Int = boost::multiprecision::mpz_int;
  Int num(digits.empty() ? "0" : digits);
  if (neg) num = -num;
  long shift = exp10 - frac_digits;
  Int den = 1;
  if (shift >= 0) {
    num *= boost::multiprecision::pow(Int(10), static_cast<unsigned>(shift));
  } else {
    den = boost::multiprecision::pow(Int(10), static_cast<unsigned>(-shift));
  }
  return Rational(num, den);
}

inline std::string rational_to_string(const Rational& r) {
  return r.str();
}

// ---- argmax with tie tolerance ----------------------------------------------

// Indices within tie tolerance of the maximum. Exact tie set when tol == 0.
template <class S>
std::vector<int> argmax_set(const Vec<S>& values, const S& rel_tol) {
  if (values.size() == 0) return {};
  S best = values(0);
  for (Eigen::Index i = 1; i < values.size(); ++i)
    if (values(i) > best) best = values(i);
  S scale = abs_val(best);
  if (scale < S(1)) scale = S(1);
  S threshold = best - rel_tol * scale;
  std::vector<int> out;
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (values(i) >= threshold) out.push_back(static_cast<int>(i));
  return out;
}

template <class S>
S max_abs(const Mat<S>& m) {
  S r(0);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      S a = abs_val(m(i, j));
      if (a > r) r = a;
    }
  return r;
}

template <class S>
S max_abs(const Vec<S>& v) {
  S r(0);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    S a = abs_val(v(i));
    if (a > r) r = a;
  }
  return r;
}

template <class S>
S max_abs(const RowVec<S>& v) {
  S r(0);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    S a = abs_val(v(i));
    if (a > r) r = a;
  }
  return r;
}

}  // namespace elicit

#pragma once

#include <cstdlib>
#include <functional>

#include "model.hpp"

namespace elicit {

inline long long simplex_grid_size(int k, int n) {
  // C(n + k - 1, k - 1), saturating at a large sentinel
  long long r = 1;
  for (int i = 1; i <= k - 1; ++i) {
    r = r * (n + i) / i;
    if (r > (1LL << 62) / (n + k)) return 1LL << 62;
  }
  return r;
}

inline long long max_grid_points() {
  if (const char* env = std::getenv("ELICIT_MAX_GRID")) {
    char* end = nullptr;
    long long v = std::strtoll(env, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
  }
  return 10'000'000;  // default guard
}

// Visits every rational belief with denominator n on the k-simplex, i.e. all
// compositions of n into k parts, in lexicographically decreasing order of the
// count vector. f receives the integer counts; the belief is counts / n.
template <class F>
void for_each_composition(int k, int n, F&& f) {
  if (k < 1 || n < 1) throw std::invalid_argument("simplex grid needs k >= 1, n >= 1");
  std::vector<int> counts(k, 0);
  std::function<void(int, int)> rec = [&](int pos, int left) {
    if (pos == k - 1) {
      counts[pos] = left;
      f(counts);
      return;
    }
    for (int c = left; c >= 0; --c) {
      counts[pos] = c;
      rec(pos + 1, left - c);
    }
  };
  rec(0, n);
}

template <class S>
Belief<S> belief_from_counts(const std::vector<int>& counts, int n) {
  Vec<S> p(static_cast<int>(counts.size()));
  for (size_t i = 0; i < counts.size(); ++i)
    p(static_cast<int>(i)) = scalar_cast<S>(Rational(counts[i], n));
  return Belief<S>(std::move(p));
}

// Materialized enumeration with the overflow guard (ELICIT_MAX_GRID overrides).
template <class S>
std::vector<Belief<S>> enumerate_simplex(int k, int n) {
  long long sz = simplex_grid_size(k, n);
  if (sz > max_grid_points())
    throw std::invalid_argument("simplex grid would exceed the point budget (" +
                                std::to_string(sz) + " points); set ELICIT_MAX_GRID to override");
  std::vector<Belief<S>> out;
  out.reserve(static_cast<size_t>(sz));
  for_each_composition(k, n, [&](const std::vector<int>& counts) {
    out.push_back(belief_from_counts<S>(counts, n));
  });
  return out;
}

}  // namespace elicit

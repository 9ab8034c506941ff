#pragma once
// Independent reference computations used as test oracles. Nothing here calls
// into the library's DP or softmax code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ocd/types.hpp"

namespace ref {

// Recursive memoised Levenshtein distance (no rolling rows).
inline int distance(const ocd::Sequence& a, const ocd::Sequence& b) {
  std::vector<std::vector<int>> memo(a.size() + 1, std::vector<int>(b.size() + 1, -1));
  std::function<int(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> int {
    if (i == 0) return static_cast<int>(j);
    if (j == 0) return static_cast<int>(i);
    int& cell = memo[i][j];
    if (cell >= 0) return cell;
    cell = std::min({go(i - 1, j) + 1, go(i, j - 1) + 1, go(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return cell;
  };
  return go(a.size(), b.size());
}

inline ocd::Sequence prefix(const ocd::Sequence& s, std::size_t n) { return {s.begin(), s.begin() + static_cast<std::ptrdiff_t>(n)}; }

// m_i = min_j D(hyp[<i], ref[<j]).
inline int row_min(const ocd::Sequence& hyp_prefix, const ocd::Sequence& r) {
  int best = distance(hyp_prefix, {});
  for (std::size_t j = 1; j <= r.size(); ++j) best = std::min(best, distance(hyp_prefix, prefix(r, j)));
  return best;
}

// Every sequence over [0, v) with length <= max_len, shortest first.
inline std::vector<ocd::Sequence> all_sequences(int v, std::size_t max_len) {
  std::vector<ocd::Sequence> out{{}};
  std::size_t begin = 0;
  for (std::size_t len = 1; len <= max_len; ++len) {
    const std::size_t end = out.size();
    for (std::size_t k = begin; k < end; ++k) {
      for (int t = 0; t < v; ++t) {
        auto s = out[k];
        s.push_back(t);
        out.push_back(std::move(s));
      }
    }
    begin = end;
  }
  return out;
}

// Softmax in long double.
inline std::vector<long double> softmax(const std::vector<long double>& z) {
  const long double mx = *std::max_element(z.begin(), z.end());
  long double total = 0;
  std::vector<long double> p(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) total += p[i] = std::exp(z[i] - mx);
  for (auto& x : p) x /= total;
  return p;
}

inline std::vector<double> log_uniform(std::size_t n) { return std::vector<double>(n, -std::log(static_cast<double>(n))); }

}  // namespace ref

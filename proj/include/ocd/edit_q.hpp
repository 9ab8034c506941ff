#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "ocd/types.hpp"

namespace ocd {

/// Unit-cost Levenshtein distance between any two random-access ranges whose
/// elements compare with ==. Two-row DP, O(|a|·|b|) time.
template <typename Range>
int levenshtein(const Range& a, const Range& b) {
  const std::size_t n = std::size(b);
  std::vector<int> row(n + 1);
  std::iota(row.begin(), row.end(), 0);
  int i = 0;
  for (const auto& ai : a) {
    int diag = row[0];
    row[0] = ++i;
    std::size_t j = 1;
    for (const auto& bj : b) {
      const int up = row[j];
      row[j] = std::min({diag + (ai == bj ? 0 : 1), up + 1, row[j - 1] + 1});
      diag = up;
      ++j;
    }
  }
  return row[n];
}

int edit_distance(std::span<const Token> a, std::span<const Token> b);

/// Full (|hyp|+1) x (|ref|+1) table of prefix-to-prefix edit distances.
/// Golden tests and the OCT selector use it; training uses q_values.
class DistanceTable {
 public:
  DistanceTable(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), cells_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  int& at(std::size_t i, std::size_t j) { return cells_[i * cols_ + j]; }
  int at(std::size_t i, std::size_t j) const { return cells_[i * cols_ + j]; }
  std::span<const int> row(std::size_t i) const { return {cells_.data() + i * cols_, cols_}; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<int> cells_;
};

DistanceTable prefix_distance_table(std::span<const Token> hyp, std::span<const Token> ref);

/// Optimal Q-values for one hypothesis prefix, stored sparsely. Every content
/// token in `optimal` has Q = -m and every other content token -m-1. Ending
/// the sequence leaves no completion, so Q(eos) = -D(prefix, ref): -m when
/// `eos` is set, at most -m-1 otherwise.
struct QRow {
  int m = 0;
  /// D(hyp prefix, ref).
  int full_distance = 0;
  /// Reference prefix lengths j with D(hyp prefix, ref[<j]) == m, ascending.
  /// j == |ref| stands for the eos extension.
  std::vector<int> positions;
  /// Distinct ref[j] over positions j < |ref|, ordered by first position.
  std::vector<Token> optimal;
  bool eos = false;

  bool is_optimal(Token a) const {
    if (a == kEos) return eos;
    return std::find(optimal.begin(), optimal.end(), a) != optimal.end();
  }
  int q(Token a) const {
    if (a == kEos) return -full_distance;
    return is_optimal(a) ? -m : -m - 1;
  }

  /// Dense Q over content tokens [0, content_size) followed by eos.
  std::vector<double> dense(std::size_t content_size) const;
};

/// One row per hypothesis prefix, |hyp| + 1 rows in total.
using QTable = std::vector<QRow>;

/// Exact optimal Q-values of every prefix of `hyp` against `ref` using a
/// single rolling DP row (O(|ref|) working memory).
QTable q_values(std::span<const Token> hyp, std::span<const Token> ref);

std::vector<QTable> q_values_batch(std::span<const std::pair<Sequence, Sequence>> pairs);

}  // namespace ocd

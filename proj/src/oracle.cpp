#include "ocd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ocd/rng.hpp"

namespace ocd {

namespace {

// Full-matrix Levenshtein, kept separate from the kernel's DP.
int naive_distance(const Sequence& a, std::span<const Token> b) {
  std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

// Row of D(s, ref[<j]) for s extended by one token.
void extend_row(const std::vector<int>& prev, Token t, std::span<const Token> ref, std::vector<int>& next) {
  next.resize(prev.size());
  next[0] = prev[0] + 1;
  for (std::size_t j = 1; j < prev.size(); ++j) {
    next[j] = std::min({prev[j] + 1, next[j - 1] + 1, prev[j - 1] + (t == ref[j - 1] ? 0 : 1)});
  }
}

// rows[depth] holds the DP row of the current completion of that length.
int best_completion(std::vector<std::vector<int>>& rows, std::size_t depth, std::span<const Token> ref,
                    std::size_t vocab_size, std::size_t bound) {
  int best = rows[depth].back();
  if (depth == bound) return best;
  for (std::size_t v = 0; v < vocab_size; ++v) {
    extend_row(rows[depth], static_cast<Token>(v), ref, rows[depth + 1]);
    best = std::min(best, best_completion(rows, depth + 1, ref, vocab_size, bound));
  }
  return best;
}

}  // namespace

int oracle_q_suffix(std::span<const Token> hyp_prefix, Token a, std::span<const Token> ref) {
  Sequence base(hyp_prefix.begin(), hyp_prefix.end());
  if (a == kEos) return -naive_distance(base, ref);
  base.push_back(a);
  int best = naive_distance(base, ref);  // empty suffix
  for (std::size_t j = 0; j < ref.size(); ++j) {
    Sequence full = base;
    full.insert(full.end(), ref.begin() + static_cast<std::ptrdiff_t>(j), ref.end());
    best = std::min(best, naive_distance(full, ref));
  }
  return -best;
}

int oracle_q_exhaustive(std::span<const Token> hyp_prefix, Token a, std::span<const Token> ref,
                        std::size_t vocab_size, std::optional<std::size_t> len_bound) {
  Sequence base(hyp_prefix.begin(), hyp_prefix.end());
  if (a == kEos) return -naive_distance(base, ref);
  const std::size_t bound = len_bound.value_or(ref.size() + 1);
  if (std::pow(static_cast<double>(vocab_size), static_cast<double>(bound)) > 1e7) {
    throw Error("oracle_q_exhaustive: " + std::to_string(vocab_size) + "^" + std::to_string(bound) +
                " completions exceed the 1e7 enumeration guard");
  }
  std::vector<int> row(ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) row[j] = static_cast<int>(j);
  std::vector<int> next;
  base.push_back(a);
  for (Token t : base) {
    extend_row(row, t, ref, next);
    row.swap(next);
  }
  std::vector<std::vector<int>> rows(bound + 1);
  rows[0] = row;
  return -best_completion(rows, 0, ref, vocab_size, bound);
}

OracleReport oracle_check(std::size_t trials, std::size_t vocab_size, std::size_t max_len, std::uint64_t seed,
                          const QKernel& kernel) {
  if (vocab_size == 0 && trials > 0) throw Error("oracle_check: vocab_size must be positive");
  OracleReport report;
  report.trials = trials;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(derive_seed(seed, "oracle", {trial}));
    auto draw = [&] {
      Sequence s(rng.below(max_len + 1));
      for (auto& t : s) t = static_cast<Token>(rng.below(vocab_size));
      return s;
    };
    const Sequence hyp = draw();
    const Sequence ref = draw();
    const QTable table = kernel(hyp, ref);
    if (table.size() != hyp.size() + 1) {
      ++report.mismatches;
      if (!report.first) report.first = OracleCounterexample{hyp, ref, table.size(), kEos, 0, 0, 0};
      continue;
    }
    std::vector<int> oracle_row(vocab_size + 1);
    for (std::size_t i = 0; i <= hyp.size(); ++i) {
      const std::span<const Token> prefix(hyp.data(), i);
      for (std::size_t v = 0; v <= vocab_size; ++v) {
        const Token a = v == vocab_size ? kEos : static_cast<Token>(v);
        const int k = table[i].q(a);
        const int s = oracle_q_suffix(prefix, a, ref);
        const int e = oracle_q_exhaustive(prefix, a, ref, vocab_size);
        oracle_row[v] = s;
        ++report.comparisons;
        if (k != s || s != e) {
          ++report.mismatches;
          if (!report.first) report.first = OracleCounterexample{hyp, ref, i, a, k, s, e};
        }
      }
      // The sparse row must name exactly the oracle's maximisers.
      const int best = *std::max_element(oracle_row.begin(), oracle_row.end());
      for (std::size_t v = 0; v <= vocab_size; ++v) {
        const Token a = v == vocab_size ? kEos : static_cast<Token>(v);
        if (table[i].is_optimal(a) != (oracle_row[v] == best) || table[i].m != -best) {
          ++report.mismatches;
          if (!report.first) report.first = OracleCounterexample{hyp, ref, i, a, table[i].q(a), oracle_row[v], oracle_row[v]};
          break;
        }
      }
    }
  }
  return report;
}

namespace {

std::string show(const Sequence& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + "]";
}

std::string show_token(Token t) { return t == kEos ? "eos" : std::to_string(t); }

}  // namespace

std::string OracleReport::to_text() const {
  std::ostringstream os;
  os << "oracle-check: " << trials << " trials, " << comparisons << " comparisons, " << mismatches << " mismatches\n";
  if (first) {
    os << "first counterexample: hyp=" << show(first->hyp) << " ref=" << show(first->ref) << " row=" << first->row
       << " token=" << show_token(first->token) << " kernel=" << first->kernel << " suffix=" << first->suffix
       << " exhaustive=" << first->exhaustive << "\n";
  } else {
    os << (trials ? "kernel == suffix oracle == exhaustive oracle on every instance\n" : "no trials (vacuous pass)\n");
  }
  return os.str();
}

nlohmann::json OracleReport::to_json() const {
  nlohmann::json j{{"trials", trials}, {"comparisons", comparisons}, {"mismatches", mismatches}, {"ok", ok()}};
  if (first) {
    j["first_counterexample"] = {{"hyp", first->hyp},       {"ref", first->ref},
                                 {"row", first->row},       {"token", show_token(first->token)},
                                 {"kernel", first->kernel}, {"suffix", first->suffix},
                                 {"exhaustive", first->exhaustive}};
  }
  return j;
}

}  // namespace ocd

#include "ocd/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace ocd {

std::vector<double> soft_policy(std::span<const double> q, double tau) {
  if (!(tau > 0.0)) throw Error("soft_policy needs tau > 0, got " + std::to_string(tau));
  std::vector<double> out(q.size());
  if (q.empty()) return out;
  const double top = *std::max_element(q.begin(), q.end());
  double z = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    out[i] = std::exp((q[i] - top) / tau);
    z += out[i];
  }
  for (auto& p : out) p /= z;
  return out;
}

std::vector<double> soft_policy(const QRow& row, double tau, std::size_t content_size) {
  const auto dense = row.dense(content_size);
  return soft_policy(dense, tau);
}

std::vector<Token> hard_targets(const QRow& row) {
  std::vector<Token> out = row.optimal;
  if (row.eos) out.push_back(kEos);
  return out;
}

OctStrategy parse_oct_strategy(std::string_view name) {
  if (name == "shortest") return OctStrategy::kShortest;
  if (name == "same_words") return OctStrategy::kSameWords;
  throw Error("unknown OCT strategy '" + std::string(name) + "' (expected shortest or same_words)");
}

std::size_t word_count(std::span<const Token> seq, std::optional<Token> space) {
  if (seq.empty()) return 0;
  if (!space) return 1;
  return static_cast<std::size_t>(std::count(seq.begin(), seq.end(), *space)) + 1;
}

namespace {

Token select_from_positions(std::span<const int> positions, std::span<const Token> ref,
                            std::span<const Token> hyp_prefix, OctStrategy strategy, std::optional<Token> space) {
  if (positions.empty()) throw Error("oct_select: no argmin positions");
  auto token_at = [&](int j) { return static_cast<std::size_t>(j) == ref.size() ? kEos : ref[j]; };

  if (strategy == OctStrategy::kShortest) {
    return token_at(*std::max_element(positions.begin(), positions.end()));
  }

  const auto target_words = static_cast<long>(word_count(ref, space));
  const auto prefix_spaces = space ? std::count(hyp_prefix.begin(), hyp_prefix.end(), *space) : 0;
  int best_j = -1;
  long best_gap = 0;
  for (int j : positions) {
    const auto suffix = ref.subspan(static_cast<std::size_t>(j));
    long words = 0;
    if (!hyp_prefix.empty() || !suffix.empty()) {
      const auto suffix_spaces = space ? std::count(suffix.begin(), suffix.end(), *space) : 0;
      words = static_cast<long>(prefix_spaces + suffix_spaces) + 1;
    }
    const long gap = std::labs(words - target_words);
    const bool better = best_j < 0 || gap < best_gap || (gap == best_gap && j > best_j) ||
                        (gap == best_gap && j == best_j && token_at(j) < token_at(best_j));
    if (better) {
      best_j = j;
      best_gap = gap;
    }
  }
  return token_at(best_j);
}

}  // namespace

Token oct_select(std::span<const int> distance_row, std::span<const Token> ref, std::span<const Token> hyp_prefix,
                 OctStrategy strategy, std::optional<Token> space) {
  if (distance_row.size() != ref.size() + 1) throw Error("oct_select: distance row does not match reference");
  const int m = *std::min_element(distance_row.begin(), distance_row.end());
  std::vector<int> positions;
  for (std::size_t j = 0; j < distance_row.size(); ++j) {
    if (distance_row[j] == m) positions.push_back(static_cast<int>(j));
  }
  return select_from_positions(positions, ref, hyp_prefix, strategy, space);
}

Token oct_select(const QRow& row, std::span<const Token> ref, std::span<const Token> hyp_prefix,
                 OctStrategy strategy, std::optional<Token> space) {
  return select_from_positions(row.positions, ref, hyp_prefix, strategy, space);
}

std::vector<double> PolicyTargets::distribution(std::size_t step, std::size_t content_size) const {
  if (tau > 0.0) return soft.at(step);
  const auto& set = hard.at(step);
  std::vector<double> out(content_size + 1, 0.0);
  const double w = 1.0 / static_cast<double>(set.size());
  for (Token t : set) out[t == kEos ? content_size : static_cast<std::size_t>(t)] = w;
  return out;
}

PolicyTargets PolicyTargets::from_table(const QTable& table, std::size_t steps, double tau,
                                        std::size_t content_size) {
  if (tau < 0.0) throw Error("tau must be non-negative");
  if (steps > table.size()) throw Error("more target steps requested than QTable rows");
  PolicyTargets out;
  out.tau = tau;
  for (std::size_t t = 0; t < steps; ++t) {
    if (tau > 0.0) {
      out.soft.push_back(soft_policy(table[t], tau, content_size));
    } else {
      out.hard.push_back(hard_targets(table[t]));
    }
  }
  return out;
}

}  // namespace ocd

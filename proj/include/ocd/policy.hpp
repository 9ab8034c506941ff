#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ocd/edit_q.hpp"

namespace ocd {

/// exp(q/tau) normalized, with max subtraction. Throws on tau <= 0.
std::vector<double> soft_policy(std::span<const double> q, double tau);
/// Soft policy over content tokens followed by eos.
std::vector<double> soft_policy(const QRow& row, double tau, std::size_t content_size);

/// The tau -> 0 limit: tokens with Q = -m, eos reported as kEos (last).
std::vector<Token> hard_targets(const QRow& row);

enum class OctStrategy { kShortest, kSameWords };
OctStrategy parse_oct_strategy(std::string_view name);

/// Picks one optimal extension. `distance_row` is D(hyp_prefix, ref[<j]) for
/// j = 0..|ref|; each argmin j stands for the completion hyp_prefix + ref[j:].
/// kShortest takes the largest j (shortest completion, eos when available);
/// kSameWords takes the completion whose word count is closest to ref's, then
/// the larger j. Returns kEos for the eos extension.
Token oct_select(std::span<const int> distance_row, std::span<const Token> ref, std::span<const Token> hyp_prefix,
                 OctStrategy strategy, std::optional<Token> space = std::nullopt);
/// Same selection using the argmin positions recorded in a kernel row.
Token oct_select(const QRow& row, std::span<const Token> ref, std::span<const Token> hyp_prefix,
                 OctStrategy strategy, std::optional<Token> space = std::nullopt);

/// Word count as count(space) + 1, or 0 for an empty sequence.
std::size_t word_count(std::span<const Token> seq, std::optional<Token> space);

/// Per-step training targets derived from a QTable. With tau == 0 each step is
/// a uniform distribution over the hard target set.
struct PolicyTargets {
  double tau = 0.0;
  std::vector<std::vector<Token>> hard;
  std::vector<std::vector<double>> soft;

  std::size_t steps() const { return tau > 0.0 ? soft.size() : hard.size(); }
  /// Dense distribution over content tokens followed by eos.
  std::vector<double> distribution(std::size_t step, std::size_t content_size) const;

  /// Targets for the first `steps` rows of `table`.
  static PolicyTargets from_table(const QTable& table, std::size_t steps, double tau, std::size_t content_size);
};

}  // namespace ocd

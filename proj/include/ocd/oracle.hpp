#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "ocd/edit_q.hpp"

namespace ocd {

/// Q via the suffix restriction: -min over suffixes s of ref (including the
/// empty one) of D(hyp_prefix + a + s, ref). For a == kEos, -D(hyp_prefix, ref).
int oracle_q_suffix(std::span<const Token> hyp_prefix, Token a, std::span<const Token> ref);

/// Q by enumerating every completion of length <= len_bound over tokens
/// [0, vocab_size). len_bound defaults to |ref| + 1. Throws when
/// vocab_size^len_bound exceeds 1e7.
int oracle_q_exhaustive(std::span<const Token> hyp_prefix, Token a, std::span<const Token> ref,
                        std::size_t vocab_size, std::optional<std::size_t> len_bound = std::nullopt);

struct OracleCounterexample {
  Sequence hyp;
  Sequence ref;
  std::size_t row = 0;
  Token token = 0;
  int kernel = 0;
  int suffix = 0;
  int exhaustive = 0;
};

struct OracleReport {
  std::size_t trials = 0;
  std::size_t comparisons = 0;
  std::size_t mismatches = 0;
  std::optional<OracleCounterexample> first;

  bool ok() const { return mismatches == 0; }
  std::string to_text() const;
  nlohmann::json to_json() const;
};

using QKernel = std::function<QTable(std::span<const Token>, std::span<const Token>)>;

/// Random (hyp, ref) pairs with lengths in [0, max_len] over vocab_size
/// tokens; compares the kernel against both oracles for every row and every
/// token including eos. Mismatches are reported, never thrown.
OracleReport oracle_check(std::size_t trials, std::size_t vocab_size, std::size_t max_len, std::uint64_t seed,
                          const QKernel& kernel = q_values);

}  // namespace ocd

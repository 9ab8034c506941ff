#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ocd/model.hpp"

namespace ocd {

struct BeamHypothesis {
  Sequence tokens;
  double logprob = 0.0;  // sum of chosen log-probabilities, eos included
  bool finished = false;
};

/// Argmax each step (smallest id on ties) until eos or max_len steps.
template <typename T>
BeamHypothesis greedy_decode(const Seq2Seq<T>& model, std::span<const Token> x, std::size_t max_len);

/// Width-limited search over content + eos with raw log-probability scores.
/// Expansions compete for `beam` slots; eos expansions retire into a finished
/// pool. Stops once no live hypothesis can beat the best finished one. Ties
/// break by lexicographic token order (eos sorts last).
template <typename T>
BeamHypothesis beam_search(const Seq2Seq<T>& model, std::span<const Token> x, std::size_t beam, std::size_t max_len);
template <typename T>
BeamHypothesis beam_search(const Seq2Seq<T>& model, const Encoding<T>& enc, std::size_t beam, std::size_t max_len);

/// Edit distance over |ref|. An empty reference with a non-empty hypothesis
/// yields |hyp| and sets *empty_ref_flag.
double cer(std::span<const Token> hyp, std::span<const Token> ref, bool* empty_ref_flag = nullptr);
/// Word-level edit distance over the reference word count; words are maximal
/// runs between space tokens.
double wer(std::span<const Token> hyp, std::span<const Token> ref, std::optional<Token> space,
           bool* empty_ref_flag = nullptr);
std::vector<Sequence> split_words(std::span<const Token> seq, std::optional<Token> space);

struct EvalExample {
  Sequence x;
  Sequence y;
};

/// Corpus-level metrics: cer = sum(edits) / sum(|ref|), likewise for wer.
struct EvalMetrics {
  std::size_t beam = 0;
  double cer = 0.0;
  double wer = 0.0;
  std::size_t n_examples = 0;
  double mean_logprob = 0.0;     // of the decoded hypotheses
  double nll = 0.0;              // teacher-forced per-token negative log-likelihood
  double prefix_mismatch = 0.0;  // mean over examples, decoded vs reference
  std::size_t empty_references = 0;
};

/// Decoding cap used when max_len == 0: 2·|x| + 10.
inline std::size_t default_decode_cap(std::size_t input_len) { return 2 * input_len + 10; }

template <typename T>
EvalMetrics evaluate(const Seq2Seq<T>& model, std::span<const EvalExample> data, std::size_t beam,
                     std::size_t max_len, std::optional<Token> space);

/// One pass over the data, one EvalMetrics per beam width (width 1 decodes
/// greedily).
template <typename T>
std::vector<EvalMetrics> evaluate_sweep(const Seq2Seq<T>& model, std::span<const EvalExample> data,
                                        std::span<const std::size_t> beams, std::size_t max_len,
                                        std::optional<Token> space);

}  // namespace ocd

#pragma once

#include <span>
#include <vector>

#include "ocd/losses.hpp"
#include "ocd/model.hpp"
#include "ocd/rng.hpp"

namespace ocd {

/// A sequence sampled from the model. per_step_logprobs has |tokens| + 1
/// entries when eos was emitted, else |tokens|.
struct Rollout {
  Sequence tokens;
  bool ended_with_eos = false;
  StepLogProbs per_step_logprobs;
};

/// Linear ramp from p_start (step 0) to p_end (ramp_steps), clamped after.
struct Schedule {
  double p_start = 0.0;
  double p_end = 0.0;
  std::size_t ramp_steps = 0;

  void validate() const;
};

/// Ancestral sampling at temperature 1 until eos or max_len decoder steps.
template <typename T>
Rollout sample_rollout(const Seq2Seq<T>& model, std::span<const Token> x, std::size_t max_len, Rng& rng);
/// Same, recording into `pass` so the caller can backpropagate.
template <typename T>
Rollout sample_rollout(ForwardPass<T>& pass, std::size_t max_len, Rng& rng);

struct MixedPrefixPass {
  StepLogProbs logprobs;  // |target| + 1 steps
  Sequence prefix;        // conditioning tokens actually fed after bos
};

/// Decodes |target| + 1 steps. After each step the next conditioning token is
/// a model sample (content tokens only) with probability p_sample, else the
/// ground truth.
template <typename T>
MixedPrefixPass scheduled_prefix_pass(ForwardPass<T>& pass, std::span<const Token> target, double p_sample,
                                      Rng& rng);
template <typename T>
MixedPrefixPass scheduled_prefix_pass(const Seq2Seq<T>& model, std::span<const Token> x,
                                      std::span<const Token> target, double p_sample, Rng& rng);

/// Teacher forcing: feeds bos + target and returns |target| + 1 steps.
template <typename T>
StepLogProbs teacher_forced_pass(ForwardPass<T>& pass, std::span<const Token> target);

double sampling_probability(std::size_t step, const Schedule& schedule);

/// Fraction of positions up to the longer length where the tokens differ;
/// positions past the shorter sequence count as mismatches.
double prefix_mismatch(std::span<const Token> rollout, std::span<const Token> target);

}  // namespace ocd

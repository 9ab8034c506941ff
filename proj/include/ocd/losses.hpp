#pragma once

#include <span>
#include <vector>

#include "ocd/policy.hpp"

namespace ocd {

/// Per-step log-probability vectors over content tokens followed by eos.
using StepLogProbs = std::vector<std::vector<double>>;

struct LossReport {
  double total = 0.0;  // mean over supervised steps
  std::vector<double> per_step;
  std::size_t token_count = 0;

  double sum() const { return total * static_cast<double>(token_count); }
};

/// -sum_a target(a) * logp(a) per step. Throws when counts differ or a
/// log-probability vector does not normalize within 1e-6.
LossReport cross_entropy(std::span<const std::vector<double>> logprobs,
                         std::span<const std::vector<double>> targets);

/// d(scale * sum_t ce_t) / d logits_t = scale * (sum(target) * p_t - target).
StepLogProbs cross_entropy_logit_grad(std::span<const std::vector<double>> logprobs,
                                      std::span<const std::vector<double>> targets, double scale);

/// Teacher-forcing targets for `target` plus eos, smoothed with uniform mass
/// `label_smoothing`.
std::vector<std::vector<double>> mle_distributions(std::span<const Token> target, std::size_t content_size,
                                                   double label_smoothing = 0.0);

/// Distillation loss against optimal-completion targets (cross-entropy form).
LossReport ocd_loss(std::span<const std::vector<double>> rollout_logprobs, const PolicyTargets& targets);
LossReport mle_loss(std::span<const Token> target, std::span<const std::vector<double>> teacher_forced_logprobs,
                    double label_smoothing = 0.0);
/// Same as mle_loss with no smoothing; logits come from mixed-prefix decoding.
LossReport ss_loss(std::span<const Token> target, std::span<const std::vector<double>> mixed_prefix_logprobs);

/// Matching positions over the longer length; 1 for two empty sequences.
double hamming_accuracy(std::span<const Token> rollout, std::span<const Token> target);

}  // namespace ocd

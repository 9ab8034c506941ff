#include "ocd/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ocd {

namespace {

void check_shapes(std::span<const std::vector<double>> logprobs, std::span<const std::vector<double>> targets) {
  if (logprobs.size() != targets.size()) {
    throw Error("step count mismatch: " + std::to_string(logprobs.size()) + " log-probability steps vs " +
                std::to_string(targets.size()) + " targets");
  }
  for (std::size_t t = 0; t < logprobs.size(); ++t) {
    if (logprobs[t].size() != targets[t].size()) throw Error("vocabulary size mismatch at step " + std::to_string(t));
    double z = 0.0;
    for (double lp : logprobs[t]) z += std::exp(lp);
    if (std::abs(z - 1.0) > 1e-6) throw Error("log-probabilities at step " + std::to_string(t) + " do not normalize");
  }
}

}  // namespace

LossReport cross_entropy(std::span<const std::vector<double>> logprobs,
                         std::span<const std::vector<double>> targets) {
  check_shapes(logprobs, targets);
  LossReport r;
  r.token_count = logprobs.size();
  double sum = 0.0;
  for (std::size_t t = 0; t < logprobs.size(); ++t) {
    double loss = 0.0;
    for (std::size_t a = 0; a < targets[t].size(); ++a) {
      if (targets[t][a] != 0.0) loss -= targets[t][a] * logprobs[t][a];
    }
    r.per_step.push_back(loss);
    sum += loss;
  }
  r.total = r.token_count ? sum / static_cast<double>(r.token_count) : 0.0;
  return r;
}

StepLogProbs cross_entropy_logit_grad(std::span<const std::vector<double>> logprobs,
                                      std::span<const std::vector<double>> targets, double scale) {
  check_shapes(logprobs, targets);
  StepLogProbs grads(logprobs.size());
  for (std::size_t t = 0; t < logprobs.size(); ++t) {
    double mass = 0.0;
    for (double v : targets[t]) mass += v;
    grads[t].resize(logprobs[t].size());
    for (std::size_t a = 0; a < logprobs[t].size(); ++a) {
      grads[t][a] = scale * (mass * std::exp(logprobs[t][a]) - targets[t][a]);
    }
  }
  return grads;
}

std::vector<std::vector<double>> mle_distributions(std::span<const Token> target, std::size_t content_size,
                                                   double label_smoothing) {
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) throw Error("label smoothing must lie in [0, 1)");
  const std::size_t width = content_size + 1;
  const double floor = label_smoothing / static_cast<double>(width);
  std::vector<std::vector<double>> out;
  out.reserve(target.size() + 1);
  for (std::size_t t = 0; t <= target.size(); ++t) {
    std::vector<double> d(width, floor);
    const std::size_t gold = t < target.size() ? static_cast<std::size_t>(target[t]) : content_size;
    if (gold >= width) throw Error("target token out of range at step " + std::to_string(t));
    d[gold] += 1.0 - label_smoothing;
    out.push_back(std::move(d));
  }
  return out;
}

LossReport ocd_loss(std::span<const std::vector<double>> rollout_logprobs, const PolicyTargets& targets) {
  if (rollout_logprobs.size() != targets.steps()) {
    throw Error("step count mismatch: rollout has " + std::to_string(rollout_logprobs.size()) + " steps, targets " +
                std::to_string(targets.steps()));
  }
  std::vector<std::vector<double>> dists;
  for (std::size_t t = 0; t < targets.steps(); ++t) {
    dists.push_back(targets.distribution(t, rollout_logprobs[t].size() - 1));
  }
  return cross_entropy(rollout_logprobs, dists);
}

LossReport mle_loss(std::span<const Token> target, std::span<const std::vector<double>> teacher_forced_logprobs,
                    double label_smoothing) {
  if (teacher_forced_logprobs.size() != target.size() + 1) {
    throw Error("length mismatch: expected " + std::to_string(target.size() + 1) + " steps, got " +
                std::to_string(teacher_forced_logprobs.size()));
  }
  const auto dists = mle_distributions(target, teacher_forced_logprobs.front().size() - 1, label_smoothing);
  return cross_entropy(teacher_forced_logprobs, dists);
}

LossReport ss_loss(std::span<const Token> target, std::span<const std::vector<double>> mixed_prefix_logprobs) {
  return mle_loss(target, mixed_prefix_logprobs, 0.0);
}

double hamming_accuracy(std::span<const Token> rollout, std::span<const Token> target) {
  const std::size_t longest = std::max(rollout.size(), target.size());
  if (longest == 0) return 1.0;
  const std::size_t shortest = std::min(rollout.size(), target.size());
  std::size_t same = 0;
  for (std::size_t t = 0; t < shortest; ++t) same += rollout[t] == target[t];
  return static_cast<double>(same) / static_cast<double>(longest);
}

}  // namespace ocd

#include "ocd/rollout.hpp"

#include <algorithm>
#include <cmath>

namespace ocd {

void Schedule::validate() const {
  if (p_start < 0.0 || p_start > 1.0) throw Error("schedule.p_start must lie in [0, 1]");
  if (p_end < 0.0 || p_end > 1.0) throw Error("schedule.p_end must lie in [0, 1]");
}

namespace {

std::vector<double> probabilities(const std::vector<double>& logprobs) {
  std::vector<double> p(logprobs.size());
  std::transform(logprobs.begin(), logprobs.end(), p.begin(), [](double lp) { return std::exp(lp); });
  return p;
}

}  // namespace

template <typename T>
Rollout sample_rollout(ForwardPass<T>& pass, std::size_t max_len, Rng& rng) {
  if (max_len < 1) throw Error("sample_rollout: max_len must be >= 1");
  const auto& cfg = pass.config();
  Rollout out;
  Token prev = cfg.bos();
  for (std::size_t t = 0; t < max_len; ++t) {
    const auto& lp = pass.step(prev);
    out.per_step_logprobs.push_back(lp);
    const auto a = static_cast<Token>(rng.categorical(probabilities(lp)));
    if (a == cfg.eos()) {
      out.ended_with_eos = true;
      break;
    }
    out.tokens.push_back(a);
    prev = a;
  }
  return out;
}

template <typename T>
Rollout sample_rollout(const Seq2Seq<T>& model, std::span<const Token> x, std::size_t max_len, Rng& rng) {
  ForwardPass<T> pass(model, x);
  return sample_rollout(pass, max_len, rng);
}

template <typename T>
MixedPrefixPass scheduled_prefix_pass(ForwardPass<T>& pass, std::span<const Token> target, double p_sample,
                                      Rng& rng) {
  if (p_sample < 0.0 || p_sample > 1.0) throw Error("p_sample must lie in [0, 1]");
  const auto& cfg = pass.config();
  MixedPrefixPass out;
  Token prev = cfg.bos();
  for (std::size_t t = 0; t <= target.size(); ++t) {
    const auto& lp = pass.step(prev);
    out.logprobs.push_back(lp);
    if (t == target.size()) break;
    prev = target[t];
    if (rng.bernoulli(p_sample)) {
      // eos cannot be fed back as an input, so sample among content tokens.
      auto p = probabilities(lp);
      p.pop_back();
      prev = static_cast<Token>(rng.categorical(p));
    }
    out.prefix.push_back(prev);
  }
  return out;
}

template <typename T>
MixedPrefixPass scheduled_prefix_pass(const Seq2Seq<T>& model, std::span<const Token> x,
                                      std::span<const Token> target, double p_sample, Rng& rng) {
  ForwardPass<T> pass(model, x);
  return scheduled_prefix_pass(pass, target, p_sample, rng);
}

template <typename T>
StepLogProbs teacher_forced_pass(ForwardPass<T>& pass, std::span<const Token> target) {
  StepLogProbs out;
  out.push_back(pass.step(pass.config().bos()));
  for (Token t : target) out.push_back(pass.step(t));
  return out;
}

double sampling_probability(std::size_t step, const Schedule& schedule) {
  if (schedule.ramp_steps == 0 || step >= schedule.ramp_steps) return schedule.p_end;
  const double frac = static_cast<double>(step) / static_cast<double>(schedule.ramp_steps);
  return schedule.p_start + (schedule.p_end - schedule.p_start) * frac;
}

double prefix_mismatch(std::span<const Token> rollout, std::span<const Token> target) {
  const std::size_t longest = std::max(rollout.size(), target.size());
  if (longest == 0) return 0.0;
  const std::size_t shortest = std::min(rollout.size(), target.size());
  std::size_t diff = longest - shortest;
  for (std::size_t t = 0; t < shortest; ++t) diff += rollout[t] != target[t];
  return static_cast<double>(diff) / static_cast<double>(longest);
}

#define OCD_INSTANTIATE(T)                                                                                   \
  template Rollout sample_rollout<T>(ForwardPass<T>&, std::size_t, Rng&);                                  \
  template Rollout sample_rollout<T>(const Seq2Seq<T>&, std::span<const Token>, std::size_t, Rng&);        \
  template MixedPrefixPass scheduled_prefix_pass<T>(ForwardPass<T>&, std::span<const Token>, double, Rng&); \
  template MixedPrefixPass scheduled_prefix_pass<T>(const Seq2Seq<T>&, std::span<const Token>,             \
                                                    std::span<const Token>, double, Rng&);                 \
  template StepLogProbs teacher_forced_pass<T>(ForwardPass<T>&, std::span<const Token>);
OCD_INSTANTIATE(float)
OCD_INSTANTIATE(double)
#undef OCD_INSTANTIATE

}  // namespace ocd

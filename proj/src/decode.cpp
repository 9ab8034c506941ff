#include "ocd/decode.hpp"

#include <algorithm>
#include <cmath>

#include "ocd/edit_q.hpp"
#include "ocd/losses.hpp"
#include "ocd/rollout.hpp"

namespace ocd {

template <typename T>
BeamHypothesis greedy_decode(const Seq2Seq<T>& model, std::span<const Token> x, std::size_t max_len) {
  if (max_len < 1) throw Error("greedy_decode: max_len must be >= 1");
  const auto& cfg = model.config();
  const auto enc = model.encode(x);
  BeamHypothesis out;
  Vector<T> state = enc.summary;
  Token prev = cfg.bos();
  for (std::size_t t = 0; t < max_len; ++t) {
    auto step = model.decode_step(state, prev, enc);
    const auto best = std::max_element(step.logprobs.begin(), step.logprobs.end());
    const auto a = static_cast<Token>(best - step.logprobs.begin());
    out.logprob += *best;
    if (a == cfg.eos()) {
      out.finished = true;
      break;
    }
    out.tokens.push_back(a);
    state = std::move(step.state);
    prev = a;
  }
  return out;
}

namespace {

template <typename T>
struct LiveHypothesis {
  Sequence tokens;
  double score = 0.0;
  Vector<T> state;
};

struct Candidate {
  std::size_t parent;
  Token token;
  double score;
};

// Lexicographic order of a + [a_last] against b + [b_last]. Token ids put eos
// after every content token.
bool extended_less(const Sequence& a, Token a_last, const Sequence& b, Token b_last) {
  const std::size_t na = a.size() + 1;
  const std::size_t nb = b.size() + 1;
  for (std::size_t i = 0; i < std::min(na, nb); ++i) {
    const Token ai = i < a.size() ? a[i] : a_last;
    const Token bi = i < b.size() ? b[i] : b_last;
    if (ai != bi) return ai < bi;
  }
  return na < nb;
}

bool hypothesis_better(const BeamHypothesis& a, const BeamHypothesis& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(), b.tokens.begin(), b.tokens.end());
}

}  // namespace

template <typename T>
BeamHypothesis beam_search(const Seq2Seq<T>& model, const Encoding<T>& enc, std::size_t beam, std::size_t max_len) {
  if (beam < 1) throw Error("beam_search: beam must be >= 1");
  if (max_len < 1) throw Error("beam_search: max_len must be >= 1");
  const auto& cfg = model.config();
  const Token eos = cfg.eos();

  std::vector<LiveHypothesis<T>> live{{{}, 0.0, enc.summary}};
  std::vector<BeamHypothesis> pool;
  for (std::size_t t = 0; t < max_len && !live.empty(); ++t) {
    std::vector<Candidate> cands;
    std::vector<Vector<T>> next_states;
    next_states.reserve(live.size());
    for (std::size_t h = 0; h < live.size(); ++h) {
      const Token prev = live[h].tokens.empty() ? cfg.bos() : live[h].tokens.back();
      auto step = model.decode_step(live[h].state, prev, enc);
      for (std::size_t a = 0; a < step.logprobs.size(); ++a) {
        cands.push_back({h, static_cast<Token>(a), live[h].score + step.logprobs[a]});
      }
      next_states.push_back(std::move(step.state));
    }
    const auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      return extended_less(live[a.parent].tokens, a.token, live[b.parent].tokens, b.token);
    };
    const std::size_t keep = std::min(beam, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(), better);

    std::vector<LiveHypothesis<T>> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const auto& c = cands[k];
      if (c.token == eos) {
        pool.push_back({live[c.parent].tokens, c.score, true});
      } else {
        LiveHypothesis<T> h{live[c.parent].tokens, c.score, next_states[c.parent]};
        h.tokens.push_back(c.token);
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);

    // Scores only decrease with length, so a finished hypothesis at least as
    // good as every live one cannot be overtaken.
    if (!pool.empty() && !live.empty()) {
      const double best_finished =
          std::max_element(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.logprob < b.logprob; })
              ->logprob;
      const double best_live =
          std::max_element(live.begin(), live.end(), [](const auto& a, const auto& b) { return a.score < b.score; })->score;
      if (best_finished >= best_live) break;
    }
  }

  if (!pool.empty()) return *std::min_element(pool.begin(), pool.end(), hypothesis_better);
  std::vector<BeamHypothesis> open;
  for (auto& h : live) open.push_back({std::move(h.tokens), h.score, false});
  return *std::min_element(open.begin(), open.end(), hypothesis_better);
}

template <typename T>
BeamHypothesis beam_search(const Seq2Seq<T>& model, std::span<const Token> x, std::size_t beam, std::size_t max_len) {
  return beam_search(model, model.encode(x), beam, max_len);
}

double cer(std::span<const Token> hyp, std::span<const Token> ref, bool* empty_ref_flag) {
  if (ref.empty()) {
    if (empty_ref_flag) *empty_ref_flag = !hyp.empty();
    return static_cast<double>(hyp.size());
  }
  return static_cast<double>(edit_distance(hyp, ref)) / static_cast<double>(ref.size());
}

std::vector<Sequence> split_words(std::span<const Token> seq, std::optional<Token> space) {
  std::vector<Sequence> words;
  Sequence cur;
  for (Token t : seq) {
    if (space && t == *space) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(t);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

double wer(std::span<const Token> hyp, std::span<const Token> ref, std::optional<Token> space, bool* empty_ref_flag) {
  const auto hw = split_words(hyp, space);
  const auto rw = split_words(ref, space);
  if (rw.empty()) {
    if (empty_ref_flag) *empty_ref_flag = !hw.empty();
    return static_cast<double>(hw.size());
  }
  return static_cast<double>(levenshtein(hw, rw)) / static_cast<double>(rw.size());
}

template <typename T>
std::vector<EvalMetrics> evaluate_sweep(const Seq2Seq<T>& model, std::span<const EvalExample> data,
                                        std::span<const std::size_t> beams, std::size_t max_len,
                                        std::optional<Token> space) {
  if (data.empty()) throw Error("evaluate: dataset is empty");
  struct Totals {
    double char_edits = 0, chars = 0, word_edits = 0, words = 0, logprob = 0, mismatch = 0;
    std::size_t empty = 0;
  };
  std::vector<Totals> totals(beams.size());
  double nll_sum = 0.0;
  std::size_t nll_tokens = 0;

  for (const auto& ex : data) {
    {
      ForwardPass<T> pass(model, ex.x);
      const auto lp = teacher_forced_pass(pass, ex.y);
      const auto report = mle_loss(ex.y, lp, 0.0);
      nll_sum += report.sum();
      nll_tokens += report.token_count;
    }
    const auto enc = model.encode(ex.x);
    const std::size_t cap = max_len ? max_len : default_decode_cap(ex.x.size());
    const auto words_ref = split_words(ex.y, space);
    for (std::size_t b = 0; b < beams.size(); ++b) {
      const auto hyp = beams[b] == 1 ? greedy_decode(model, ex.x, cap) : beam_search(model, enc, beams[b], cap);
      auto& tot = totals[b];
      tot.char_edits += edit_distance(hyp.tokens, ex.y);
      tot.chars += static_cast<double>(ex.y.size());
      tot.word_edits += levenshtein(split_words(hyp.tokens, space), words_ref);
      tot.words += static_cast<double>(words_ref.size());
      tot.logprob += hyp.logprob;
      tot.mismatch += prefix_mismatch(hyp.tokens, ex.y);
      tot.empty += ex.y.empty() && !hyp.tokens.empty();
    }
  }

  std::vector<EvalMetrics> out;
  const auto n = static_cast<double>(data.size());
  for (std::size_t b = 0; b < beams.size(); ++b) {
    const auto& tot = totals[b];
    EvalMetrics m;
    m.beam = beams[b];
    m.cer = tot.char_edits / std::max(tot.chars, 1.0);
    m.wer = tot.word_edits / std::max(tot.words, 1.0);
    m.n_examples = data.size();
    m.mean_logprob = tot.logprob / n;
    m.nll = nll_tokens ? nll_sum / static_cast<double>(nll_tokens) : 0.0;
    m.prefix_mismatch = tot.mismatch / n;
    m.empty_references = tot.empty;
    out.push_back(m);
  }
  return out;
}

template <typename T>
EvalMetrics evaluate(const Seq2Seq<T>& model, std::span<const EvalExample> data, std::size_t beam,
                     std::size_t max_len, std::optional<Token> space) {
  const std::size_t beams[] = {beam};
  return evaluate_sweep(model, data, beams, max_len, space).front();
}

#define OCD_INSTANTIATE(T)                                                                                         \
  template BeamHypothesis greedy_decode<T>(const Seq2Seq<T>&, std::span<const Token>, std::size_t);              \
  template BeamHypothesis beam_search<T>(const Seq2Seq<T>&, std::span<const Token>, std::size_t, std::size_t);   \
  template BeamHypothesis beam_search<T>(const Seq2Seq<T>&, const Encoding<T>&, std::size_t, std::size_t);       \
  template EvalMetrics evaluate<T>(const Seq2Seq<T>&, std::span<const EvalExample>, std::size_t, std::size_t,     \
                                   std::optional<Token>);                                                         \
  template std::vector<EvalMetrics> evaluate_sweep<T>(const Seq2Seq<T>&, std::span<const EvalExample>,            \
                                                      std::span<const std::size_t>, std::size_t,                  \
                                                      std::optional<Token>);
OCD_INSTANTIATE(float)
OCD_INSTANTIATE(double)
#undef OCD_INSTANTIATE

}  // namespace ocd

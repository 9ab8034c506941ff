#include "ocd/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "ocd/checkpoint.hpp"
#include "ocd/edit_q.hpp"
#include "ocd/losses.hpp"
#include "ocd/policy.hpp"

namespace ocd {

std::string method_name(Method m) {
  switch (m) {
    case Method::kMle: return "mle";
    case Method::kSs: return "ss";
    case Method::kOcd: return "ocd";
    case Method::kOctShortest: return "oct_shortest";
    case Method::kOctWords: return "oct_words";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : {Method::kMle, Method::kSs, Method::kOcd, Method::kOctShortest, Method::kOctWords}) {
    if (method_name(m) == name) return m;
  }
  return std::nullopt;
}

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "invalid training config:";
  for (const auto& p : problems) out += "\n  " + p;
  return out;
}

// Reads j[key] into out when present, recording a typed error otherwise.
class FieldReader {
 public:
  FieldReader(const nlohmann::json& j, std::string prefix, std::vector<std::string>& problems)
      : j_(j), prefix_(std::move(prefix)), problems_(problems) {}

  void count(const char* key, std::size_t& out) {
    if (!j_.contains(key)) return;
    const auto& v = j_[key];
    if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      out = v.get<std::size_t>();
    } else {
      problems_.push_back(prefix_ + key + ": expected a non-negative integer");
    }
  }
  void seed(const char* key, std::uint64_t& out) {
    if (!j_.contains(key)) return;
    const auto& v = j_[key];
    if (v.is_number_integer()) {
      out = v.is_number_unsigned() ? v.get<std::uint64_t>() : static_cast<std::uint64_t>(v.get<std::int64_t>());
    } else {
      problems_.push_back(prefix_ + key + ": expected an integer");
    }
  }
  void real(const char* key, double& out) {
    if (!j_.contains(key)) return;
    if (j_[key].is_number()) {
      out = j_[key].get<double>();
    } else {
      problems_.push_back(prefix_ + key + ": expected a number");
    }
  }
  void flag(const char* key, bool& out) {
    if (!j_.contains(key)) return;
    if (j_[key].is_boolean()) {
      out = j_[key].get<bool>();
    } else {
      problems_.push_back(prefix_ + key + ": expected true or false");
    }
  }
  void text(const char* key, std::string& out) {
    if (!j_.contains(key)) return;
    if (j_[key].is_string()) {
      out = j_[key].get<std::string>();
    } else {
      problems_.push_back(prefix_ + key + ": expected a string");
    }
  }
  void reject_unknown(std::initializer_list<const char*> known) {
    for (const auto& [k, _] : j_.items()) {
      if (std::find_if(known.begin(), known.end(), [&](const char* s) { return k == s; }) == known.end()) {
        problems_.push_back(prefix_ + k + ": unknown field");
      }
    }
  }

 private:
  const nlohmann::json& j_;
  std::string prefix_;
  std::vector<std::string>& problems_;
};

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  std::vector<std::string> problems;
  TrainConfig c;
  if (!j.is_object()) throw ConfigError({"config: expected a JSON object"});

  FieldReader r(j, "", problems);
  r.reject_unknown({"method", "label_smoothing", "tau", "schedule", "steps", "batch_size", "lr", "plateau_patience",
                    "seed", "model", "eval_every", "beam", "train_eval_n", "train_data", "val_data", "vocab",
                    "out_dir"});
  if (j.contains("method")) {
    const auto m = j["method"].is_string() ? parse_method(j["method"].get<std::string>()) : std::nullopt;
    if (m) {
      c.method = *m;
    } else {
      problems.push_back("method: expected one of mle, ss, ocd, oct_shortest, oct_words");
    }
  }
  r.real("label_smoothing", c.label_smoothing);
  r.real("tau", c.tau);
  r.count("steps", c.steps);
  r.count("batch_size", c.batch_size);
  r.real("lr", c.lr);
  r.count("plateau_patience", c.plateau_patience);
  r.seed("seed", c.seed);
  r.count("eval_every", c.eval_every);
  r.count("beam", c.beam);
  r.count("train_eval_n", c.train_eval_n);
  r.text("train_data", c.train_data);
  r.text("val_data", c.val_data);
  r.text("vocab", c.vocab);
  r.text("out_dir", c.out_dir);

  c.model.seed = c.seed;
  if (j.contains("model")) {
    if (j["model"].is_object()) {
      FieldReader m(j["model"], "model.", problems);
      m.reject_unknown({"vocab_size", "embed_dim", "hidden_dim", "use_attention", "seed"});
      m.count("vocab_size", c.model.vocab_size);
      m.count("embed_dim", c.model.embed_dim);
      m.count("hidden_dim", c.model.hidden_dim);
      m.flag("use_attention", c.model.use_attention);
      m.seed("seed", c.model.seed);
    } else {
      problems.push_back("model: expected an object");
    }
  }
  if (j.contains("schedule") && !j["schedule"].is_null()) {
    if (j["schedule"].is_object()) {
      Schedule s;
      FieldReader sr(j["schedule"], "schedule.", problems);
      sr.reject_unknown({"p_start", "p_end", "ramp_steps"});
      sr.real("p_start", s.p_start);
      sr.real("p_end", s.p_end);
      sr.count("ramp_steps", s.ramp_steps);
      c.schedule = s;
    } else {
      problems.push_back("schedule: expected an object");
    }
  }

  const auto more = c.validate();
  problems.insert(problems.end(), more.begin(), more.end());
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

std::vector<std::string> TrainConfig::validate() const {
  std::vector<std::string> p;
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) p.push_back("label_smoothing: must lie in [0, 1)");
  if (tau < 0.0) p.push_back("tau: must be >= 0");
  if (steps < 1) p.push_back("steps: must be >= 1");
  if (batch_size < 1) p.push_back("batch_size: must be >= 1");
  if (!(lr > 0.0)) p.push_back("lr: must be > 0");
  if (eval_every < 1) p.push_back("eval_every: must be >= 1");
  if (beam < 1) p.push_back("beam: must be >= 1");
  if (model.embed_dim < 1) p.push_back("model.embed_dim: must be >= 1");
  if (model.hidden_dim < 1) p.push_back("model.hidden_dim: must be >= 1");
  if (method == Method::kSs && !schedule) p.push_back("schedule: required when method is ss");
  if (method != Method::kSs && schedule) p.push_back("schedule: only valid when method is ss");
  if (schedule) {
    if (schedule->p_start < 0.0 || schedule->p_start > 1.0) p.push_back("schedule.p_start: must lie in [0, 1]");
    if (schedule->p_end < 0.0 || schedule->p_end > 1.0) p.push_back("schedule.p_end: must lie in [0, 1]");
  }
  if (method == Method::kSs && tau > 0.0) p.push_back("tau: only used by ocd");
  return p;
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j{{"method", method_name(method)},
                   {"label_smoothing", label_smoothing},
                   {"tau", tau},
                   {"steps", steps},
                   {"batch_size", batch_size},
                   {"lr", lr},
                   {"plateau_patience", plateau_patience},
                   {"seed", seed},
                   {"model", model.to_json()},
                   {"eval_every", eval_every},
                   {"beam", beam},
                   {"train_eval_n", train_eval_n},
                   {"train_data", train_data},
                   {"val_data", val_data},
                   {"vocab", vocab},
                   {"out_dir", out_dir}};
  if (schedule) {
    j["schedule"] = {{"p_start", schedule->p_start}, {"p_end", schedule->p_end}, {"ramp_steps", schedule->ramp_steps}};
  }
  return j;
}

std::string format_metrics_row(const MetricsRow& row) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << row.step << ',' << row.split << ',' << row.loss << ',' << row.cer << ','
     << row.wer << ',' << row.prefix_mismatch << ',' << row.p_sample << ',' << row.beam;
  return os.str();
}

void write_metrics_csv(const std::filesystem::path& path, const nlohmann::json& config,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write metrics " + path.string());
  out << "# config: " << config.dump() << '\n' << kMetricsHeader << '\n';
  for (const auto& r : rows) out << format_metrics_row(r) << '\n';
}

std::vector<EvalExample> encode_records(const std::vector<DatasetRecord>& records, const Vocabulary& vocab) {
  std::vector<EvalExample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({vocab.encode(r.x), vocab.encode(r.y)});
  return out;
}

namespace {

struct ExampleWork {
  ForwardPass<float> pass;
  StepLogProbs logprobs;
  std::vector<std::vector<double>> targets;
};

std::vector<std::vector<double>> one_hot_targets(const std::vector<Token>& tokens, std::size_t content_size,
                                                 double smoothing) {
  std::vector<std::vector<double>> out;
  const double floor = smoothing / static_cast<double>(content_size + 1);
  for (Token t : tokens) {
    std::vector<double> d(content_size + 1, floor);
    d[t == kEos ? content_size : static_cast<std::size_t>(t)] += 1.0 - smoothing;
    out.push_back(std::move(d));
  }
  return out;
}

void shuffle(std::vector<std::size_t>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
}

}  // namespace

TrainResult train(TrainConfig cfg, const Vocabulary& vocab, const std::vector<DatasetRecord>& train_set,
                  const std::vector<DatasetRecord>& val_set) {
  if (auto problems = cfg.validate(); !problems.empty()) throw ConfigError(problems);
  if (train_set.empty()) throw Error("training set is empty");
  if (val_set.empty()) throw Error("validation set is empty");
  cfg.model.vocab_size = vocab.size();
  const std::size_t content = vocab.content_size();
  const auto space = vocab.space();

  const auto train_ex = encode_records(train_set, vocab);
  const auto val_ex = encode_records(val_set, vocab);
  const std::vector<EvalExample> train_probe(
      train_ex.begin(), train_ex.begin() + static_cast<std::ptrdiff_t>(std::min(cfg.train_eval_n, train_ex.size())));

  nlohmann::json effective = cfg.to_json();
  effective["vocabulary"] = vocab.to_json();

  auto model = Seq2Seq<float>::initialized(cfg.model);
  auto opt = OptimizerState<float>::zeros(cfg.model);
  AdamOptions adam;
  adam.lr = cfg.lr;
  auto grads = Params<float>::zeros(cfg.model);

  std::filesystem::path out_dir;
  if (!cfg.out_dir.empty()) {
    out_dir = cfg.out_dir;
    std::filesystem::create_directories(out_dir);
  }
  auto save = [&](const std::string& name, std::size_t step) {
    if (out_dir.empty()) return;
    Checkpoint ckpt{effective, model.params(), opt, static_cast<std::int64_t>(step)};
    save_checkpoint(ckpt, out_dir / name);
  };

  TrainResult result;
  std::vector<std::size_t> order(train_ex.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t epoch = 0;
  std::size_t cursor = 0;
  {
    Rng rng(derive_seed(cfg.seed, "data", {epoch}));
    shuffle(order, rng);
  }

  double window_loss = 0.0;
  double window_tokens = 0.0;
  double window_mismatch = 0.0;
  std::size_t window_examples = 0;
  std::size_t evals_without_gain = 0;

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    const double p_sample = cfg.method == Method::kSs ? sampling_probability(step - 1, *cfg.schedule) : 0.0;
    std::vector<ExampleWork> work;
    work.reserve(cfg.batch_size);
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        cursor = 0;
        ++epoch;
        Rng rng(derive_seed(cfg.seed, "data", {epoch}));
        shuffle(order, rng);
      }
      const auto& ex = train_ex[order[cursor++]];
      ExampleWork w{ForwardPass<float>(model, ex.x), {}, {}};
      double mismatch = 0.0;
      switch (cfg.method) {
        case Method::kMle:
          w.logprobs = teacher_forced_pass(w.pass, ex.y);
          w.targets = mle_distributions(ex.y, content, cfg.label_smoothing);
          break;
        case Method::kSs: {
          Rng rng(derive_seed(cfg.seed, "mixing", {step, b}));
          auto mixed = scheduled_prefix_pass(w.pass, ex.y, p_sample, rng);
          mismatch = prefix_mismatch(mixed.prefix, ex.y);
          w.logprobs = std::move(mixed.logprobs);
          w.targets = mle_distributions(ex.y, content, 0.0);
          break;
        }
        case Method::kOcd:
        case Method::kOctShortest:
        case Method::kOctWords: {
          Rng rng(derive_seed(cfg.seed, "rollout", {step, b}));
          auto rollout = sample_rollout(w.pass, 2 * ex.y.size() + 10, rng);
          mismatch = prefix_mismatch(rollout.tokens, ex.y);
          const auto table = q_values(rollout.tokens, ex.y);
          const std::size_t n = rollout.per_step_logprobs.size();
          if (cfg.method == Method::kOcd) {
            const auto targets = PolicyTargets::from_table(table, n, cfg.tau, content);
            for (std::size_t t = 0; t < n; ++t) w.targets.push_back(targets.distribution(t, content));
          } else {
            const auto strategy =
                cfg.method == Method::kOctShortest ? OctStrategy::kShortest : OctStrategy::kSameWords;
            std::vector<Token> picks;
            for (std::size_t t = 0; t < n; ++t) {
              picks.push_back(oct_select(table[t], ex.y, std::span(rollout.tokens).first(t), strategy, space));
            }
            w.targets = one_hot_targets(picks, content, cfg.label_smoothing);
          }
          w.logprobs = std::move(rollout.per_step_logprobs);
          break;
        }
      }
      window_mismatch += mismatch;
      ++window_examples;
      work.push_back(std::move(w));
    }

    double loss_sum = 0.0;
    std::size_t tokens = 0;
    for (const auto& w : work) {
      const auto report = cross_entropy(w.logprobs, w.targets);
      loss_sum += report.sum();
      tokens += report.token_count;
    }
    const double batch_loss = loss_sum / static_cast<double>(std::max<std::size_t>(tokens, 1));
    if (!std::isfinite(batch_loss)) throw Error("training diverged: non-finite loss at step " + std::to_string(step));
    result.step_losses.push_back(batch_loss);
    window_loss += loss_sum;
    window_tokens += static_cast<double>(tokens);

    grads.set_zero();
    const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(tokens, 1));
    for (const auto& w : work) w.pass.backward(cross_entropy_logit_grad(w.logprobs, w.targets, scale), grads);
    adam_step(model.params(), grads, opt, adam);
    if (!model.params().all_finite()) throw Error("training diverged: non-finite parameters at step " + std::to_string(step));

    if (step % cfg.eval_every == 0 || step == cfg.steps) {
      const auto tr = evaluate(model, train_probe, cfg.beam, 0, space);
      const auto va = evaluate(model, val_ex, cfg.beam, 0, space);
      result.rows.push_back({step, "train", window_loss / std::max(window_tokens, 1.0), tr.cer, tr.wer,
                             window_mismatch / static_cast<double>(std::max<std::size_t>(window_examples, 1)),
                             p_sample, cfg.beam});
      result.rows.push_back({step, "val", va.nll, va.cer, va.wer, va.prefix_mismatch, p_sample, cfg.beam});
      window_loss = window_tokens = window_mismatch = 0.0;
      window_examples = 0;

      if (va.cer < result.best_val_cer) {
        result.best_val_cer = va.cer;
        result.best_step = step;
        evals_without_gain = 0;
        save("best.ckpt.json", step);
      } else if (++evals_without_gain >= cfg.plateau_patience && !result.lr_dropped && cfg.plateau_patience > 0) {
        adam.lr *= 0.01;
        result.lr_dropped = true;
      }
      if (!out_dir.empty()) write_metrics_csv(out_dir / "metrics.csv", effective, result.rows);
    }
  }
  save("last.ckpt.json", cfg.steps);
  result.final_params = model.params();
  return result;
}

TrainResult train_from_config(const TrainConfig& config) {
  std::vector<std::string> problems;
  if (config.vocab.empty()) problems.push_back("vocab: path required");
  if (config.train_data.empty()) problems.push_back("train_data: path required");
  if (config.val_data.empty()) problems.push_back("val_data: path required");
  if (!problems.empty()) throw ConfigError(problems);
  const auto vocab = Vocabulary::load(config.vocab);
  const auto train_set = load_dataset(config.train_data, &vocab);
  const auto val_set = load_dataset(config.val_data, &vocab);
  return train(config, vocab, train_set, val_set);
}

}  // namespace ocd

// ocd: inspect optimal-completion targets, generate synthetic tasks, train,
// evaluate and run the oracle check.
//
// Exit codes: 0 success, 1 verification failure, 2 usage or config error.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ocd/checkpoint.hpp"
#include "ocd/decode.hpp"
#include "ocd/edit_q.hpp"
#include "ocd/oracle.hpp"
#include "ocd/tasks.hpp"
#include "ocd/train.hpp"
#include "ocd/vocab.hpp"

namespace {

constexpr int kExitVerification = 1;
constexpr int kExitUsage = 2;

std::string render(const ocd::Vocabulary& vocab, ocd::Token t) { return t == ocd::kEos ? "</s>" : vocab.symbol(t); }

int cmd_qvalues(const std::string& hyp_text, const std::string& ref_text, const std::string& vocab_path,
                const std::string& format) {
  ocd::Vocabulary vocab = !vocab_path.empty() ? ocd::Vocabulary::load(vocab_path)
                          : (hyp_text + ref_text).empty()
                              ? ocd::Vocabulary({"?"})
                              : ocd::Vocabulary::from_characters(hyp_text + ref_text);
  const auto hyp = vocab.encode(hyp_text);
  const auto ref = vocab.encode(ref_text);
  const auto table = ocd::q_values(hyp, ref);

  if (format == "json") {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < table.size(); ++i) {
      nlohmann::json optimal = nlohmann::json::array();
      for (ocd::Token t : table[i].optimal) optimal.push_back(render(vocab, t));
      if (table[i].eos) optimal.push_back("</s>");
      rows.push_back({{"prefix", vocab.decode(std::span(hyp).first(i))},
                      {"m", table[i].m},
                      {"optimal", optimal},
                      {"q", -table[i].m}});
    }
    std::cout << nlohmann::json{{"hyp", hyp_text}, {"ref", ref_text}, {"rows", rows}}.dump(2) << '\n';
    return 0;
  }

  std::cout << std::left << std::setw(16) << "prefix" << std::setw(5) << "m" << std::setw(20) << "optimal"
            << "Q\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    std::string prefix = vocab.decode(std::span(hyp).first(i));
    std::string optimal;
    for (ocd::Token t : ocd::hard_targets(table[i])) optimal += (optimal.empty() ? "" : ",") + render(vocab, t);
    std::cout << std::setw(16) << (prefix.empty() ? "\"\"" : prefix) << std::setw(5) << table[i].m << std::setw(20)
              << optimal << -table[i].m << '\n';
  }
  return 0;
}

ocd::Vocabulary default_vocab(std::size_t letters, bool space) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < letters; ++i) tokens.emplace_back(1, static_cast<char>('a' + i));
  return ocd::Vocabulary(tokens, space ? std::optional<std::string>(" ") : std::nullopt);
}

struct GenOptions {
  std::string task = "reverse";
  std::string vocab_path;
  std::size_t letters = 8;
  bool space = false;
  int min_len = 3;
  int max_len = 12;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::string out;
  std::string out_dir;
  std::size_t n_train = 2000;
  std::size_t n_val = 200;
  std::size_t n_test = 200;
};

int cmd_gen(const GenOptions& o) {
  const auto task = ocd::TaskSpec::parse(o.task);
  if (o.letters < 1 || o.letters > 26) throw ocd::Error("--letters must lie in [1, 26]");
  const bool space = o.space || task.kind == ocd::TaskKind::kWordReverse;
  const auto vocab = o.vocab_path.empty() ? default_vocab(o.letters, space) : ocd::Vocabulary::load(o.vocab_path);
  const ocd::LengthRange range{o.min_len, o.max_len};

  if (!o.out.empty()) {
    ocd::save_dataset(ocd::generate_dataset(task, o.n, range, vocab, o.seed), o.out);
    return 0;
  }
  if (o.out_dir.empty()) throw ocd::Error("gen needs --out or --out-dir");
  const std::filesystem::path dir(o.out_dir);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "vocab.json") << vocab.to_json().dump(2) << '\n';
  const std::pair<const char*, std::size_t> splits[] = {{"train", o.n_train}, {"val", o.n_val}, {"test", o.n_test}};
  for (const auto& [name, n] : splits) {
    const auto seed = ocd::derive_seed(o.seed, name);
    ocd::save_dataset(ocd::generate_dataset(task, n, range, vocab, seed), dir / (std::string(name) + ".jsonl"));
  }
  return 0;
}

int cmd_train(const std::string& config_path, const nlohmann::json& overrides) {
  nlohmann::json j = nlohmann::json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ocd::Error("cannot open config " + config_path);
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ocd::Error("config " + config_path + " is not valid JSON: " + e.what());
    }
  }
  j.merge_patch(overrides);
  const auto config = ocd::TrainConfig::from_json(j);
  const auto result = ocd::train_from_config(config);
  for (const auto& row : result.rows) std::cout << ocd::format_metrics_row(row) << '\n';
  std::cout << "best val cer " << result.best_val_cer << " at step " << result.best_step << '\n';
  return 0;
}

std::vector<std::size_t> parse_beam_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos || std::stoul(item) == 0) {
      throw ocd::Error("bad --beam-list entry '" + item + "'");
    }
    out.push_back(std::stoul(item));
  }
  if (out.empty()) throw ocd::Error("--beam-list is empty");
  return out;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path, const std::string& beam_list,
             const std::string& out_path, const std::string& vocab_path, std::size_t max_len) {
  const auto ckpt = ocd::load_checkpoint(ckpt_path);
  const auto model_cfg = ckpt.model_config();
  const auto vocab = !vocab_path.empty() ? ocd::Vocabulary::load(vocab_path)
                                         : ocd::Vocabulary::from_json(ckpt.config.at("vocabulary"));
  if (vocab.size() != model_cfg.vocab_size) {
    throw ocd::Error("vocabulary size " + std::to_string(vocab.size()) + " does not match checkpoint model (" +
                     std::to_string(model_cfg.vocab_size) + ")");
  }
  const ocd::Seq2Seq<float> model(model_cfg, ckpt.params);
  const auto data = ocd::encode_records(ocd::load_dataset(data_path, &vocab), vocab);
  const auto beams = parse_beam_list(beam_list);
  const auto metrics = ocd::evaluate_sweep(model, data, beams, max_len, vocab.space());

  std::vector<ocd::MetricsRow> rows;
  const auto split = std::filesystem::path(data_path).stem().string();
  for (const auto& m : metrics) {
    rows.push_back({static_cast<std::size_t>(ckpt.step), split, m.nll, m.cer, m.wer, m.prefix_mismatch, 0.0, m.beam});
  }
  std::cout << ocd::kMetricsHeader << '\n';
  for (const auto& r : rows) std::cout << ocd::format_metrics_row(r) << '\n';
  for (const auto& m : metrics) {
    if (m.empty_references) std::cerr << "warning: " << m.empty_references << " empty references scored as |hyp|/1\n";
  }
  if (!out_path.empty()) ocd::write_metrics_csv(out_path, ckpt.config, rows);
  return 0;
}

int cmd_oracle_check(std::size_t trials, std::size_t vocab_size, std::size_t max_len, std::uint64_t seed, bool json,
                     bool inject_fault) {
  ocd::QKernel kernel = ocd::q_values;
  if (inject_fault) {
    // Charges one extra edit for ending the sequence.
    kernel = [](std::span<const ocd::Token> hyp, std::span<const ocd::Token> ref) {
      auto table = ocd::q_values(hyp, ref);
      for (auto& row : table) {
        row.full_distance += 1;
        row.eos = false;
      }
      return table;
    };
  }
  const auto report = ocd::oracle_check(trials, vocab_size, max_len, seed, kernel);
  if (json) {
    std::cout << report.to_json().dump(2) << '\n';
  } else {
    std::cout << report.to_text();
  }
  return report.ok() ? 0 : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal completion distillation toolkit"};
  app.require_subcommand(1);

  std::string hyp;
  std::string ref;
  std::string vocab_path;
  std::string format = "table";
  auto* qv = app.add_subcommand("qvalues", "Print optimal Q-values for every prefix of a hypothesis");
  qv->add_option("hyp_pos", hyp, "Hypothesis (positional)");
  qv->add_option("ref_pos", ref, "Reference (positional)");
  qv->add_option("--hyp", hyp, "Hypothesis string");
  qv->add_option("--ref", ref, "Reference string");
  qv->add_option("--vocab", vocab_path, "Vocabulary JSON (default: characters of hyp and ref)");
  qv->add_option("--format", format, "table or json")->check(CLI::IsMember({"table", "json"}));

  GenOptions gen;
  auto* gn = app.add_subcommand("gen", "Generate a synthetic transduction dataset");
  gn->add_option("--task", gen.task, "copy | reverse | rot_k | rot_<n> | dedup | word_reverse");
  gn->add_option("--vocab", gen.vocab_path, "Vocabulary JSON (default: first --letters letters)");
  gn->add_option("--letters", gen.letters, "Letters in the default vocabulary");
  gn->add_flag("--space", gen.space, "Add a space token to the default vocabulary");
  gn->add_option("--min-len", gen.min_len, "Minimum length (per word for word_reverse)");
  gn->add_option("--max-len", gen.max_len, "Maximum length (per word for word_reverse)");
  gn->add_option("--seed", gen.seed, "Generation seed");
  gn->add_option("--n", gen.n, "Records to write with --out");
  gn->add_option("--out", gen.out, "Single JSONL output file");
  gn->add_option("--out-dir", gen.out_dir, "Directory for vocab.json and train/val/test splits");
  gn->add_option("--n-train", gen.n_train, "Train split size");
  gn->add_option("--n-val", gen.n_val, "Validation split size");
  gn->add_option("--n-test", gen.n_test, "Test split size");

  std::string config_path;
  nlohmann::json overrides = nlohmann::json::object();
  auto* tr = app.add_subcommand("train", "Train with mle, ss, ocd, oct_shortest or oct_words");
  tr->add_option("--config", config_path, "JSON config file");
  auto override_text = [&](const char* flag, const char* key, const char* help) {
    tr->add_option_function<std::string>(flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, help);
  };
  auto override_count = [&](const char* flag, const char* key, const char* help) {
    tr->add_option_function<std::uint64_t>(flag, [&overrides, key](std::uint64_t v) { overrides[key] = v; }, help);
  };
  auto override_real = [&](const char* flag, const char* key, const char* help) {
    tr->add_option_function<double>(flag, [&overrides, key](double v) { overrides[key] = v; }, help);
  };
  override_text("--method", "method", "Training method");
  override_text("--train-data", "train_data", "Training JSONL");
  override_text("--val-data", "val_data", "Validation JSONL");
  override_text("--vocab", "vocab", "Vocabulary JSON");
  override_text("--out-dir", "out_dir", "Output directory for checkpoints and metrics.csv");
  override_count("--steps", "steps", "Optimizer steps");
  override_count("--batch-size", "batch_size", "Examples per step");
  override_count("--seed", "seed", "Run seed");
  override_count("--eval-every", "eval_every", "Steps between evaluations");
  override_count("--beam", "beam", "Beam width for evaluation");
  override_count("--train-eval-n", "train_eval_n", "Training examples decoded at each evaluation");
  override_count("--plateau-patience", "plateau_patience", "Evaluations without gain before the 0.01 lr drop");
  override_real("--lr", "lr", "Learning rate");
  override_real("--tau", "tau", "OCD temperature (0 = hard targets)");
  override_real("--label-smoothing", "label_smoothing", "Label smoothing for mle and oct");
  tr->add_option_function<double>("--p-start", [&](double v) { overrides["schedule"]["p_start"] = v; }, "SS start probability");
  tr->add_option_function<double>("--p-end", [&](double v) { overrides["schedule"]["p_end"] = v; }, "SS end probability");
  tr->add_option_function<std::uint64_t>("--ramp-steps", [&](std::uint64_t v) { overrides["schedule"]["ramp_steps"] = v; },
                                         "SS ramp length");
  tr->add_option_function<std::uint64_t>("--hidden-dim", [&](std::uint64_t v) { overrides["model"]["hidden_dim"] = v; },
                                         "Hidden size");
  tr->add_option_function<std::uint64_t>("--embed-dim", [&](std::uint64_t v) { overrides["model"]["embed_dim"] = v; },
                                         "Embedding size");
  tr->add_flag_function("--attention", [&](std::int64_t) { overrides["model"]["use_attention"] = true; },
                        "Enable dot-product attention");

  std::string ckpt;
  std::string data;
  std::string beam_list = "16";
  std::string out;
  std::size_t eval_max_len = 0;
  auto* ev = app.add_subcommand("eval", "Corpus CER/WER of a checkpoint for one or more beam widths");
  ev->add_option("--ckpt", ckpt, "Checkpoint JSON")->required();
  ev->add_option("--data", data, "Dataset JSONL")->required();
  ev->add_option("--beam-list", beam_list, "Comma-separated beam widths (default 16)");
  ev->add_option("--out", out, "Metrics CSV path");
  ev->add_option("--vocab", vocab_path, "Vocabulary JSON (default: the one stored in the checkpoint)");
  ev->add_option("--max-len", eval_max_len, "Decoding cap (default 2*|x|+10)");

  std::size_t trials = 500;
  std::size_t oracle_vocab = 4;
  std::size_t oracle_len = 6;
  std::uint64_t oracle_seed = 1;
  bool oracle_json = false;
  bool inject_fault = false;
  auto* oc = app.add_subcommand("oracle-check", "Compare the Q kernel against brute-force oracles");
  oc->add_option("--trials", trials, "Random (hyp, ref) pairs");
  oc->add_option("--vocab", oracle_vocab, "Vocabulary size");
  oc->add_option("--max-len", oracle_len, "Maximum sequence length");
  oc->add_option("--seed", oracle_seed, "Seed");
  oc->add_flag("--json", oracle_json, "Print the report as JSON");
  oc->add_flag("--inject-fault", inject_fault, "Corrupt the kernel to exercise failure reporting")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*qv) return cmd_qvalues(hyp, ref, vocab_path, format);
    if (*gn) return cmd_gen(gen);
    if (*tr) return cmd_train(config_path, overrides);
    if (*ev) return cmd_eval(ckpt, data, beam_list, out, vocab_path, eval_max_len);
    if (*oc) return cmd_oracle_check(trials, oracle_vocab, oracle_len, oracle_seed, oracle_json, inject_fault);
  } catch (const ocd::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const ocd::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

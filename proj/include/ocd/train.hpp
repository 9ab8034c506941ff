#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocd/decode.hpp"
#include "ocd/model.hpp"
#include "ocd/rollout.hpp"
#include "ocd/tasks.hpp"

namespace ocd {

enum class Method { kMle, kSs, kOcd, kOctShortest, kOctWords };

std::string method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

struct TrainConfig {
  Method method = Method::kOcd;
  double label_smoothing = 0.0;
  double tau = 0.0;
  std::optional<Schedule> schedule;  // required iff method == ss
  std::size_t steps = 5000;
  std::size_t batch_size = 16;
  double lr = 3e-3;
  std::size_t plateau_patience = 4;
  std::uint64_t seed = 1;
  ModelConfig model;  // vocab_size is taken from the vocabulary
  std::size_t eval_every = 500;
  std::size_t beam = 16;
  std::size_t train_eval_n = 200;
  std::string train_data;
  std::string val_data;
  std::string vocab;
  std::string out_dir;

  /// Parses and validates; throws ConfigError listing every bad field.
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  std::vector<std::string> validate() const;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct MetricsRow {
  std::size_t step = 0;
  std::string split;
  double loss = 0.0;
  double cer = 0.0;
  double wer = 0.0;
  double prefix_mismatch = 0.0;
  double p_sample = 0.0;
  std::size_t beam = 0;
};

inline constexpr const char* kMetricsHeader = "step,split,loss,cer,wer,prefix_mismatch,p_sample,beam";
std::string format_metrics_row(const MetricsRow& row);
/// Writes a "# config: {...}" comment line, the header, then the rows.
void write_metrics_csv(const std::filesystem::path& path, const nlohmann::json& config,
                       const std::vector<MetricsRow>& rows);

struct TrainResult {
  std::vector<MetricsRow> rows;
  std::vector<double> step_losses;  // batch loss per optimizer step
  double best_val_cer = 1e300;
  std::size_t best_step = 0;
  bool lr_dropped = false;
  Params<float> final_params;
};

/// Encodes dataset records against the vocabulary.
std::vector<EvalExample> encode_records(const std::vector<DatasetRecord>& records, const Vocabulary& vocab);

/// Runs one training job. When config.out_dir is set, writes metrics.csv,
/// best.ckpt.json (best validation CER) and last.ckpt.json there.
TrainResult train(TrainConfig config, const Vocabulary& vocab, const std::vector<DatasetRecord>& train_set,
                  const std::vector<DatasetRecord>& val_set);

/// Loads vocabulary and datasets named in the config, then trains.
TrainResult train_from_config(const TrainConfig& config);

}  // namespace ocd

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocd/model.hpp"

namespace ocd {

inline constexpr int kCheckpointVersion = 1;

/// Versioned JSON checkpoint:
///   {"version":1, "config":{...}, "params":{name:{"shape":[r,c],"dtype":"f32","data":b64}},
///    "opt_state":{"m":{...}, "v":{...}}, "step":n}
/// Tensor data is row-major little-endian float32.
struct Checkpoint {
  nlohmann::json config;  // effective run config; config["model"] is a ModelConfig
  Params<float> params;
  OptimizerState<float> opt_state;
  std::int64_t step = 0;

  ModelConfig model_config() const { return ModelConfig::from_json(config.at("model")); }
};

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Rejects unknown versions and tensors whose shape disagrees with the config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace ocd

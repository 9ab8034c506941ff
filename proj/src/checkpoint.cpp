#include "ocd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <openssl/evp.h>

namespace ocd {

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw Error("base64 payload length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error("invalid base64 payload");
  // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

nlohmann::json tensor_to_json(const Matrix<float>& m) {
  std::vector<float> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  }
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(flat.data());
  return {{"shape", {m.rows(), m.cols()}},
          {"dtype", "f32"},
          {"data", base64_encode({bytes, flat.size() * sizeof(float)})}};
}

void tensor_from_json(const nlohmann::json& j, const std::string& name, Matrix<float>& m) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols()) {
    throw Error("tensor '" + name + "' has a shape that does not match the model config");
  }
  if (j.at("dtype").get<std::string>() != "f32") throw Error("tensor '" + name + "' is not f32");
  const auto bytes = base64_decode(j.at("data").get<std::string>());
  if (bytes.size() != static_cast<std::size_t>(m.size()) * sizeof(float)) {
    throw Error("tensor '" + name + "' has the wrong payload size");
  }
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c, ++k) std::memcpy(&m(r, c), bytes.data() + k * sizeof(float), sizeof(float));
  }
}

nlohmann::json params_to_json(const Params<float>& p) {
  nlohmann::json j = nlohmann::json::object();
  p.for_each([&](const std::string& name, const Matrix<float>& m) { j[name] = tensor_to_json(m); });
  return j;
}

void params_from_json(const nlohmann::json& j, Params<float>& p) {
  p.for_each([&](const std::string& name, Matrix<float>& m) {
    if (!j.contains(name)) throw Error("checkpoint is missing tensor '" + name + "'");
    tensor_from_json(j.at(name), name, m);
  });
}

}  // namespace

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt) {
  return {{"version", kCheckpointVersion},
          {"config", ckpt.config},
          {"params", params_to_json(ckpt.params)},
          {"opt_state", {{"m", params_to_json(ckpt.opt_state.m)}, {"v", params_to_json(ckpt.opt_state.v)}, {"step", ckpt.opt_state.step}}},
          {"step", ckpt.step}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  const int version = j.value("version", -1);
  if (version != kCheckpointVersion) {
    throw Error("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                std::to_string(kCheckpointVersion) + ")");
  }
  try {
    Checkpoint ckpt;
    ckpt.config = j.at("config");
    const auto cfg = ckpt.model_config();
    cfg.validate();
    ckpt.params = Params<float>::zeros(cfg);
    params_from_json(j.at("params"), ckpt.params);
    ckpt.opt_state = OptimizerState<float>::zeros(cfg);
    if (j.contains("opt_state")) {
      const auto& o = j.at("opt_state");
      params_from_json(o.at("m"), ckpt.opt_state.m);
      params_from_json(o.at("v"), ckpt.opt_state.v);
      ckpt.opt_state.step = o.value("step", std::int64_t{0});
    }
    ckpt.step = j.value("step", std::int64_t{0});
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    out << checkpoint_to_json(ckpt).dump() << '\n';
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint " + path.string() + " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace ocd

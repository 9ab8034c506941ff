#include <doctest.h>

#include <cstring>
#include <fstream>

#include "ocd/checkpoint.hpp"
#include "scratch.hpp"

namespace {

ocd::Checkpoint sample(bool attention) {
  ocd::ModelConfig c;
  c.vocab_size = 7;
  c.embed_dim = 3;
  c.hidden_dim = 5;
  c.use_attention = attention;
  c.seed = 4;
  ocd::Checkpoint ckpt;
  ckpt.config = {{"model", c.to_json()}, {"method", "ocd"}};
  ckpt.params = ocd::init_params<float>(c);
  ckpt.opt_state = ocd::OptimizerState<float>::zeros(c);
  ckpt.opt_state.m.out_b(2) = 0.25f;
  ckpt.opt_state.v.enc_u(1, 1) = 1e-7f;
  ckpt.opt_state.step = 11;
  ckpt.step = 42;
  return ckpt;
}

bool bitwise_equal(const ocd::Params<float>& a, const ocd::Params<float>& b) {
  const auto ta = a.tensors();
  const auto tb = b.tensors();
  for (std::size_t k = 0; k < ta.size(); ++k) {
    if (ta[k]->rows() != tb[k]->rows() || ta[k]->cols() != tb[k]->cols()) return false;
    if (std::memcmp(ta[k]->data(), tb[k]->data(), sizeof(float) * ta[k]->size()) != 0) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("checkpoint") {
  TEST_CASE("base64") {
    const std::string text = "any carnal pleas";
    for (std::size_t n = 0; n <= text.size(); ++n) {
      const std::vector<std::uint8_t> bytes(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(n));
      CHECK(ocd::base64_decode(ocd::base64_encode(bytes)) == bytes);
    }
    const std::vector<std::uint8_t> man{'M', 'a', 'n'};
    CHECK(ocd::base64_encode(man) == "TWFu");
    CHECK(ocd::base64_decode("TWE=") == std::vector<std::uint8_t>{'M', 'a'});
    CHECK_THROWS_AS(ocd::base64_decode("TWF"), ocd::Error);
  }

  TEST_CASE("round trip is bitwise") {
    const scratch::Dir dir("ckpt");
    for (bool attention : {false, true}) {
      const auto ckpt = sample(attention);
      ocd::save_checkpoint(ckpt, dir / "c.json");
      const auto back = ocd::load_checkpoint(dir / "c.json");
      CHECK(back.step == 42);
      CHECK(back.opt_state.step == 11);
      CHECK(back.config == ckpt.config);
      CHECK(back.model_config() == ckpt.model_config());
      CHECK(bitwise_equal(back.params, ckpt.params));
      CHECK(bitwise_equal(back.opt_state.m, ckpt.opt_state.m));
      CHECK(bitwise_equal(back.opt_state.v, ckpt.opt_state.v));
    }
  }

  TEST_CASE("document layout") {
    const auto j = ocd::checkpoint_to_json(sample(false));
    CHECK(j["version"] == 1);
    CHECK(j["step"] == 42);
    const auto& emb = j["params"]["embedding"];
    CHECK(emb["shape"] == nlohmann::json::array({7, 3}));
    CHECK(emb["dtype"] == "f32");
    CHECK(ocd::base64_decode(emb["data"].get<std::string>()).size() == 7 * 3 * 4);
    CHECK(j["opt_state"].contains("m"));
    CHECK(j["opt_state"].contains("v"));
  }

  TEST_CASE("bad documents are rejected") {
    auto j = ocd::checkpoint_to_json(sample(false));
    j["version"] = 2;
    CHECK_THROWS_WITH_AS(ocd::checkpoint_from_json(j), doctest::Contains("version"), ocd::Error);

    j = ocd::checkpoint_to_json(sample(false));
    j["params"]["output.b"]["shape"] = nlohmann::json::array({3, 1});
    CHECK_THROWS_AS(ocd::checkpoint_from_json(j), ocd::Error);

    j = ocd::checkpoint_to_json(sample(false));
    j["params"].erase("decoder.u");
    CHECK_THROWS_AS(ocd::checkpoint_from_json(j), ocd::Error);

    const scratch::Dir dir("ckpt_bad");
    std::ofstream(dir / "junk.json") << "{not json";
    CHECK_THROWS_AS(ocd::load_checkpoint(dir / "junk.json"), ocd::Error);
    CHECK_THROWS_AS(ocd::load_checkpoint(dir / "absent.json"), ocd::Error);
  }
}

#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scratch.hpp"

#ifndef OCD_CLI
#error "OCD_CLI must name the ocd executable"
#endif

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with the given argument string; stderr is discarded.
Run ocd_cli(const std::string& args) {
  const std::string cmd = std::string("'") + OCD_CLI + "' " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("qvalues table") {
    const auto r = ocd_cli("qvalues SATURDAY SUNDAY");
    REQUIRE(r.code == 0);
    const auto ls = lines(r.out);
    REQUIRE(ls.size() == 10);
    const char* expected[] = {"\"\" 0 S 0",         "S 0 U 0",          "SA 1 U,N -1",
                              "SAT 2 U,N,D -2",     "SATU 2 N -2",      "SATUR 3 N,D -3",
                              "SATURD 3 A -3",      "SATURDA 3 Y -3",   "SATURDAY 3 </s> -3"};
    for (std::size_t i = 0; i < 9; ++i) {
      std::istringstream is(ls[i + 1]);
      std::string a, b, c, d;
      is >> a >> b >> c >> d;
      CHECK(a + " " + b + " " + c + " " + d == expected[i]);
    }
  }

  TEST_CASE("qvalues json") {
    const auto r = ocd_cli("qvalues --hyp SATRAPY --ref SUNDAY --format json");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j["rows"].size() == 8);
    CHECK(j["rows"][2]["prefix"] == "SA");
    CHECK(j["rows"][2]["m"] == 1);
    CHECK(j["rows"][2]["optimal"] == nlohmann::json::array({"U", "N"}));
    CHECK(j["rows"][6]["optimal"] == nlohmann::json::array({"Y", "</s>"}));
    CHECK(j["rows"][7]["optimal"] == nlohmann::json::array({"</s>"}));

    const auto single = nlohmann::json::parse(ocd_cli("qvalues --hyp '' --ref A --format json").out);
    REQUIRE(single["rows"].size() == 1);
    CHECK(single["rows"][0]["optimal"] == nlohmann::json::array({"A"}));
    CHECK(single["rows"][0]["m"] == 0);
  }

  TEST_CASE("qvalues rejects unknown characters") {
    const scratch::Dir dir("cli_vocab");
    std::ofstream(dir / "v.json") << R"({"tokens":["a","b"]})";
    CHECK(ocd_cli("qvalues --hyp ab --ref ba --vocab " + q(dir / "v.json")).code == 0);
    CHECK(ocd_cli("qvalues --hyp az --ref ba --vocab " + q(dir / "v.json")).code == 2);
    CHECK(ocd_cli("qvalues --hyp a --ref b --format xml").code == 2);
  }

  TEST_CASE("gen") {
    const scratch::Dir dir("cli_gen");
    REQUIRE(ocd_cli("gen --task reverse --n 10 --seed 7 --out " + q(dir / "a.jsonl")).code == 0);
    REQUIRE(ocd_cli("gen --task reverse --n 10 --seed 7 --out " + q(dir / "b.jsonl")).code == 0);
    CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
    CHECK(lines(slurp(dir / "a.jsonl")).size() == 10);

    REQUIRE(ocd_cli("gen --task word_reverse --n 10 --seed 7 --out " + q(dir / "w.jsonl")).code == 0);
    CHECK(slurp(dir / "w.jsonl").find(' ') != std::string::npos);

    CHECK(ocd_cli("gen --task sort --n 10 --out " + q(dir / "x.jsonl")).code == 2);
    CHECK(ocd_cli("gen --task reverse --min-len 5 --max-len 2 --n 3 --out " + q(dir / "x.jsonl")).code == 2);

    REQUIRE(ocd_cli("gen --task copy --out-dir " + q(dir / "split") + " --n-train 20 --n-val 5 --n-test 5").code == 0);
    CHECK(lines(slurp(dir / "split" / "train.jsonl")).size() == 20);
    CHECK(lines(slurp(dir / "split" / "val.jsonl")).size() == 5);
    CHECK(std::filesystem::exists(dir / "split" / "vocab.json"));
  }

  TEST_CASE("oracle-check") {
    const auto ok = ocd_cli("oracle-check --trials 500 --vocab 4 --max-len 6 --seed 1");
    CHECK(ok.code == 0);
    CHECK(ok.out.find("0 mismatches") != std::string::npos);
    CHECK(ocd_cli("oracle-check --trials 0").code == 0);
    const auto bad = ocd_cli("oracle-check --trials 20 --inject-fault");
    CHECK(bad.code == 1);
    CHECK(bad.out.find("first counterexample") != std::string::npos);
    const auto j = nlohmann::json::parse(ocd_cli("oracle-check --trials 10 --json").out);
    CHECK(j["ok"] == true);
    CHECK(ocd_cli("oracle-check --trials lots").code == 2);
  }

  TEST_CASE("train and eval") {
    const scratch::Dir dir("cli_train");
    REQUIRE(ocd_cli("gen --task reverse --letters 4 --min-len 2 --max-len 4 --seed 3 --n-train 40 --n-val 10 "
                    "--n-test 10 --out-dir " + q(dir / "data"))
                .code == 0);
    std::ofstream(dir / "cfg.json") << nlohmann::json{{"method", "ocd"},
                                                      {"steps", 20},
                                                      {"batch_size", 4},
                                                      {"eval_every", 10},
                                                      {"beam", 2},
                                                      {"train_eval_n", 5},
                                                      {"model", {{"hidden_dim", 8}, {"embed_dim", 4}}},
                                                      {"train_data", (dir / "data" / "train.jsonl").string()},
                                                      {"val_data", (dir / "data" / "val.jsonl").string()},
                                                      {"vocab", (dir / "data" / "vocab.json").string()}}
                                           .dump();
    const std::string base = "train --config " + q(dir / "cfg.json");
    REQUIRE(ocd_cli(base + " --out-dir " + q(dir / "r1")).code == 0);
    REQUIRE(ocd_cli(base + " --out-dir " + q(dir / "r1b")).code == 0);
    auto strip = [](const std::string& csv) { return csv.substr(csv.find('\n') + 1); };
    const auto csv = slurp(dir / "r1" / "metrics.csv");
    CHECK(strip(csv) == strip(slurp(dir / "r1b" / "metrics.csv")));
    CHECK(lines(csv).size() == 2 + 4);
    const auto header = nlohmann::json::parse(lines(csv)[0].substr(std::string("# config: ").size()));
    CHECK(header["method"] == "ocd");
    CHECK(header["model"]["hidden_dim"] == 8);

    // Command-line values win over the file.
    REQUIRE(ocd_cli(base + " --method mle --steps 10 --out-dir " + q(dir / "r2")).code == 0);
    const auto csv2 = slurp(dir / "r2" / "metrics.csv");
    CHECK(csv2.find("\"method\":\"mle\"") != std::string::npos);
    CHECK(lines(csv2).size() == 2 + 2);

    const auto bad = ocd_cli(base + " --method ss --out-dir " + q(dir / "r3"));
    CHECK(bad.code == 2);
    CHECK(ocd_cli(base + " --method nope --out-dir " + q(dir / "r3")).code == 2);

    const auto ckpt = q(dir / "r1" / "best.ckpt.json");
    const auto sweep = ocd_cli("eval --ckpt " + ckpt + " --data " + q(dir / "data" / "test.jsonl") +
                               " --beam-list 1,2,4,8,16 --out " + q(dir / "eval.csv"));
    REQUIRE(sweep.code == 0);
    const auto rows = lines(sweep.out);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == "step,split,loss,cer,wer,prefix_mismatch,p_sample,beam");
    CHECK(rows[1].substr(rows[1].rfind(',') + 1) == "1");
    CHECK(rows[5].substr(rows[5].rfind(',') + 1) == "16");
    CHECK(lines(slurp(dir / "eval.csv")).size() == 7);

    auto doc = nlohmann::json::parse(slurp(dir / "r1" / "best.ckpt.json"));
    doc["version"] = 9;
    std::ofstream(dir / "v9.json") << doc.dump();
    CHECK(ocd_cli("eval --ckpt " + q(dir / "v9.json") + " --data " + q(dir / "data" / "test.jsonl")).code == 2);
  }
}

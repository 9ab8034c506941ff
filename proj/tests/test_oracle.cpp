#include <doctest.h>

#include "ocd/oracle.hpp"
#include "ocd/rng.hpp"

using ocd::Sequence;

namespace {
Sequence chars(std::string_view s) { return {s.begin(), s.end()}; }
}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("suffix oracle examples") {
    CHECK(ocd::oracle_q_suffix(chars("SA"), 'N', chars("SUNDAY")) == -1);
    CHECK(ocd::oracle_q_suffix(chars("SA"), 'U', chars("SUNDAY")) == -1);
    CHECK(ocd::oracle_q_suffix(chars("SUNDAY"), ocd::kEos, chars("SUNDAY")) == 0);
  }

  TEST_CASE("exhaustive oracle examples") {
    const Sequence ab{0, 1};
    for (std::size_t n = 0; n <= 2; ++n) {
      const Sequence prefix = n == 0 ? Sequence{} : n == 1 ? Sequence{1} : Sequence{1, 0};
      for (ocd::Token a : {0, 1, ocd::kEos}) {
        CHECK(ocd::oracle_q_exhaustive(prefix, a, ab, 2, 3) == ocd::oracle_q_suffix(prefix, a, ab));
      }
    }
    CHECK(ocd::oracle_q_exhaustive({}, 0, ab, 3) == 0);
    CHECK(ocd::oracle_q_exhaustive({}, 2, ab, 3) == -1);
    CHECK_THROWS_AS(ocd::oracle_q_exhaustive({}, 0, Sequence(12, 0), 5), ocd::Error);
  }

  TEST_CASE("oracle values span the two-valued gap for content tokens") {
    ocd::Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
      Sequence hyp(rng.below(5)), r(rng.below(5));
      for (auto& t : hyp) t = static_cast<ocd::Token>(rng.below(3));
      for (auto& t : r) t = static_cast<ocd::Token>(rng.below(3));
      int best = -1000;
      std::vector<int> values;
      for (ocd::Token a : {0, 1, 2, ocd::kEos}) {
        values.push_back(ocd::oracle_q_suffix(hyp, a, r));
        best = std::max(best, values.back());
      }
      for (std::size_t k = 0; k < 3; ++k) CHECK((values[k] == best || values[k] == best - 1));
      CHECK(values[3] <= best);
    }
  }

  TEST_CASE("oracle check") {
    const auto report = ocd::oracle_check(100, 3, 5, 1);
    CHECK(report.ok());
    CHECK(report.comparisons > 0);
    CHECK_FALSE(report.first.has_value());

    const auto empty = ocd::oracle_check(0, 4, 6, 1);
    CHECK(empty.ok());
    CHECK(empty.comparisons == 0);

    const auto again = ocd::oracle_check(100, 3, 5, 1);
    CHECK(again.comparisons == report.comparisons);
    CHECK(report.to_json() == again.to_json());
  }

  TEST_CASE("a broken kernel is caught") {
    const ocd::QKernel off_by_one = [](std::span<const ocd::Token> h, std::span<const ocd::Token> r) {
      auto t = ocd::q_values(h, r);
      for (auto& row : t) ++row.m;
      return t;
    };
    const auto report = ocd::oracle_check(20, 3, 4, 2, off_by_one);
    CHECK_FALSE(report.ok());
    REQUIRE(report.first.has_value());
    CHECK(report.to_text().find("first counterexample") != std::string::npos);
    CHECK(report.to_json()["ok"] == false);

    const ocd::QKernel wrong_set = [](std::span<const ocd::Token> h, std::span<const ocd::Token> r) {
      auto t = ocd::q_values(h, r);
      for (auto& row : t) row.eos = !row.eos;
      return t;
    };
    CHECK_FALSE(ocd::oracle_check(20, 3, 4, 2, wrong_set).ok());
  }
}

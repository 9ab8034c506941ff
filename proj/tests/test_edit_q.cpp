#include <doctest.h>

#include <set>

#include "ocd/edit_q.hpp"
#include "ocd/rng.hpp"
#include "reference.hpp"

using ocd::Sequence;

namespace {

Sequence chars(std::string_view s) { return {s.begin(), s.end()}; }

std::set<ocd::Token> as_set(const ocd::QRow& row) {
  std::set<ocd::Token> out(row.optimal.begin(), row.optimal.end());
  if (row.eos) out.insert(ocd::kEos);
  return out;
}

std::set<ocd::Token> chars_set(std::string_view s, bool eos = false) {
  std::set<ocd::Token> out(s.begin(), s.end());
  if (eos) out.insert(ocd::kEos);
  return out;
}

Sequence random_seq(ocd::Rng& rng, int v, std::size_t max_len) {
  Sequence s(rng.below(max_len + 1));
  for (auto& t : s) t = static_cast<ocd::Token>(rng.below(static_cast<std::size_t>(v)));
  return s;
}

}  // namespace

TEST_SUITE("edit_q") {
  TEST_CASE("edit distance examples") {
    CHECK(ocd::edit_distance(chars("SATRAPY"), chars("SUNDAY")) == 4);
    CHECK(ocd::edit_distance(chars("SUNDAY"), chars("SUNDAY")) == 0);
    CHECK(ocd::edit_distance(chars(""), chars("SUNDAY")) == 6);
    CHECK(ocd::levenshtein(std::string("kitten"), std::string("sitting")) == 3);
  }

  TEST_CASE("prefix table rows") {
    const auto t1 = ocd::prefix_distance_table(chars("SATRAPY"), chars("SUNDAY"));
    const auto sa = t1.row(2);
    CHECK(std::vector<int>(sa.begin(), sa.end()) == std::vector<int>{2, 1, 1, 2, 3, 3, 4});
    const auto t2 = ocd::prefix_distance_table(chars("SATURDAY"), chars("SUNDAY"));
    const auto sat = t2.row(3);
    CHECK(std::vector<int>(sat.begin(), sat.end()) == std::vector<int>{3, 2, 2, 2, 3, 4, 4});
    const auto empty = ocd::prefix_distance_table({}, {});
    CHECK(empty.rows() == 1);
    CHECK(empty.cols() == 1);
    CHECK(empty.at(0, 0) == 0);
  }

  TEST_CASE("SATURDAY against SUNDAY") {
    const auto table = ocd::q_values(chars("SATURDAY"), chars("SUNDAY"));
    REQUIRE(table.size() == 9);
    const std::vector<std::set<ocd::Token>> sets{chars_set("S"),  chars_set("U"),  chars_set("UN"),
                                                 chars_set("UND"), chars_set("N"), chars_set("ND"),
                                                 chars_set("A"),  chars_set("Y"),  chars_set("", true)};
    const std::vector<int> q{0, 0, -1, -2, -2, -3, -3, -3, -3};
    for (std::size_t i = 0; i < table.size(); ++i) {
      CAPTURE(i);
      CHECK(as_set(table[i]) == sets[i]);
      CHECK(-table[i].m == q[i]);
      for (auto a : sets[i]) CHECK(table[i].q(a) == q[i]);
    }
  }

  TEST_CASE("SATRAPY against SUNDAY") {
    const auto table = ocd::q_values(chars("SATRAPY"), chars("SUNDAY"));
    REQUIRE(table.size() == 8);
    const std::vector<std::set<ocd::Token>> sets{chars_set("S"),    chars_set("U"), chars_set("UN"),
                                                 chars_set("UND"),  chars_set("UNDA"), chars_set("Y"),
                                                 chars_set("Y", true), chars_set("", true)};
    const std::vector<int> m{0, 0, 1, 2, 3, 3, 4, 4};
    for (std::size_t i = 0; i < table.size(); ++i) {
      CAPTURE(i);
      CHECK(as_set(table[i]) == sets[i]);
      CHECK(table[i].m == m[i]);
    }
  }

  TEST_CASE("BA against AB") {
    const Sequence hyp{1, 0}, r{0, 1};  // A = 0, B = 1
    const auto table = ocd::q_values(hyp, r);
    REQUIRE(table.size() == 3);
    CHECK(as_set(table[0]) == std::set<ocd::Token>{0});
    CHECK(table[0].m == 0);
    CHECK(as_set(table[1]) == std::set<ocd::Token>{0, 1, ocd::kEos});
    CHECK(table[1].m == 1);
    CHECK(as_set(table[2]) == std::set<ocd::Token>{1});
    CHECK(table[2].m == 1);
  }

  TEST_CASE("empty reference asks for eos at every row") {
    const auto table = ocd::q_values(chars("abc"), {});
    REQUIRE(table.size() == 4);
    for (std::size_t i = 0; i < table.size(); ++i) {
      CHECK(table[i].m == static_cast<int>(i));
      CHECK(table[i].optimal.empty());
      CHECK(table[i].eos);
    }
  }

  TEST_CASE("eos carries the full distance") {
    const auto table = ocd::q_values({}, chars("ABCDE"));
    CHECK(table[0].m == 0);
    CHECK_FALSE(table[0].eos);
    CHECK(table[0].q(ocd::kEos) == -5);
    CHECK(table[0].q('Z') == -1);
  }

  TEST_CASE("batch matches single calls") {
    CHECK(ocd::q_values_batch({}).empty());
    const std::vector<std::pair<Sequence, Sequence>> one{{chars("SATURDAY"), chars("SUNDAY")}};
    const auto single = ocd::q_values_batch(one);
    REQUIRE(single.size() == 1);
    const auto direct = ocd::q_values(one[0].first, one[0].second);
    REQUIRE(single[0].size() == direct.size());
    for (std::size_t i = 0; i < direct.size(); ++i) {
      CHECK(single[0][i].m == direct[i].m);
      CHECK(as_set(single[0][i]) == as_set(direct[i]));
    }

    ocd::Rng rng(11);
    std::vector<std::pair<Sequence, Sequence>> pairs;
    for (int k = 0; k < 500; ++k) pairs.emplace_back(random_seq(rng, 4, 6), random_seq(rng, 4, 6));
    const auto batch = ocd::q_values_batch(pairs);
    REQUIRE(batch.size() == pairs.size());
    int diffs = 0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto t = ocd::q_values(pairs[k].first, pairs[k].second);
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i].m != batch[k][i].m || as_set(t[i]) != as_set(batch[k][i]) ||
            t[i].full_distance != batch[k][i].full_distance) {
          ++diffs;
        }
      }
    }
    CHECK(diffs == 0);
  }

  TEST_CASE("table and kernel agree with the reference distance") {
    ocd::Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
      const Sequence hyp = random_seq(rng, 3, 7);
      const Sequence r = random_seq(rng, 3, 7);
      const auto table = ocd::prefix_distance_table(hyp, r);
      const auto q = ocd::q_values(hyp, r);
      for (std::size_t i = 0; i <= hyp.size(); ++i) {
        const Sequence hp = ref::prefix(hyp, i);
        CHECK(q[i].m == ref::row_min(hp, r));
        CHECK(q[i].full_distance == ref::distance(hp, r));
        for (std::size_t j = 0; j <= r.size(); ++j) {
          CHECK(table.at(i, j) == ref::distance(hp, ref::prefix(r, j)));
        }
      }
    }
  }

  TEST_CASE("distance table invariants") {
    ocd::Rng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
      const Sequence hyp = random_seq(rng, 4, 10);
      const Sequence r = random_seq(rng, 4, 10);
      const auto t = ocd::prefix_distance_table(hyp, r);
      for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t j = 0; j < t.cols(); ++j) {
          const int c = t.at(i, j);
          CHECK(c >= std::abs(static_cast<int>(i) - static_cast<int>(j)));
          if (i == 0) CHECK(c == static_cast<int>(j));
          if (j == 0) CHECK(c == static_cast<int>(i));
          if (i > 0) CHECK(std::abs(c - t.at(i - 1, j)) <= 1);
          if (j > 0) CHECK(std::abs(c - t.at(i, j - 1)) <= 1);
        }
      }
    }
  }

  TEST_CASE("symmetry and triangle inequality") {
    ocd::Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
      const Sequence a = random_seq(rng, 4, 10), b = random_seq(rng, 4, 10), c = random_seq(rng, 4, 10);
      CHECK(ocd::edit_distance(a, b) == ocd::edit_distance(b, a));
      CHECK(ocd::edit_distance(a, c) <= ocd::edit_distance(a, b) + ocd::edit_distance(b, c));
    }
  }

  TEST_CASE("row invariants on random pairs") {
    ocd::Rng rng(8);
    for (int trial = 0; trial < 500; ++trial) {
      const int v = 2 + static_cast<int>(rng.below(5));
      const Sequence hyp = random_seq(rng, v, 12);
      const Sequence r = random_seq(rng, v, 12);
      const auto table = ocd::q_values(hyp, r);
      REQUIRE(table.size() == hyp.size() + 1);
      CHECK(table[0].m == 0);
      for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& row = table[i];
        CHECK((!row.optimal.empty() || row.eos));
        for (auto a : row.optimal) CHECK(std::find(r.begin(), r.end(), a) != r.end());
        for (int a = 0; a < v; ++a) {
          const int q = row.q(a);
          CHECK((q == -row.m || q == -row.m - 1));
        }
        CHECK((row.eos ? row.q(ocd::kEos) == -row.m : row.q(ocd::kEos) <= -row.m - 1));
        if (i + 1 < table.size()) {
          const int step = table[i + 1].m - row.m;
          CHECK((step == 0 || step == 1));
          CHECK(table[i + 1].m == -row.q(hyp[i]));
        }
      }
    }
  }

  TEST_CASE("prefixes of the reference get the next reference token") {
    ocd::Rng rng(9);
    for (int trial = 0; trial < 300; ++trial) {
      const Sequence r = random_seq(rng, 4, 10);
      const Sequence hyp = ref::prefix(r, rng.below(r.size() + 1));
      const auto table = ocd::q_values(hyp, r);
      for (std::size_t i = 0; i < table.size(); ++i) {
        CHECK(table[i].m == 0);
        if (i < r.size()) {
          CHECK(table[i].optimal == std::vector<ocd::Token>{r[i]});
          CHECK_FALSE(table[i].eos);
        } else {
          CHECK(table[i].optimal.empty());
          CHECK(table[i].eos);
        }
      }
    }
  }

  TEST_CASE("dense rows") {
    const auto table = ocd::q_values(Sequence{1, 0}, Sequence{0, 1});
    CHECK(table[1].dense(3) == std::vector<double>{-1, -1, -2, -1});
    CHECK(table[0].dense(2) == std::vector<double>{0, -1, -2});
  }
}

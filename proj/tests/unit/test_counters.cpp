#include <random>

#include "doctest.h"
#include "ktrace/counters.hpp"
#include "oracles.hpp"

using namespace ktrace;

namespace {

QMatrix make_qmatrix(std::vector<std::vector<int>> rows, int num_skills) {
  QMatrix qm;
  qm.rows = std::move(rows);
  qm.num_skills = num_skills;
  return qm;
}

StudentSequence make_seq(std::vector<std::pair<int, int>> steps) {
  StudentSequence seq{0, {}};
  for (auto [item, outcome] : steps)
    seq.steps.push_back(Step{item, static_cast<std::int8_t>(outcome)});
  return seq;
}

}  // namespace

TEST_SUITE("counters") {

TEST_CASE("prefix counts exclude the current step") {
  // Items A=0 (skill 1), B=1 (skill 1), C=2 (skills 1,2).
  QMatrix qm = make_qmatrix({{1}, {1}, {1, 2}}, 3);
  StudentSequence seq = make_seq({{0, 1}, {1, 0}, {2, 1}});
  CounterTable table = compute_counters(seq, qm);

  CHECK(table.wins(3, 1) == 1);
  CHECK(table.fails(3, 1) == 1);
  CHECK(table.wins(3, 2) == 0);
  CHECK(table.fails(3, 2) == 0);
  // The step-3 outcome itself is not counted anywhere at step 3.
  CHECK(table.wins(3, 1) + table.fails(3, 1) == 2);
}

TEST_CASE("step 1 is all zero") {
  QMatrix qm = make_qmatrix({{0}, {1}}, 2);
  StudentSequence seq = make_seq({{0, 1}, {1, 1}});
  CounterTable table = compute_counters(seq, qm);
  CHECK(table.snapshot(1).empty());
  for (int k = 0; k < 2; ++k) {
    CHECK(table.wins(1, k) == 0);
    CHECK(table.fails(1, k) == 0);
  }
}

TEST_CASE("missing Q-matrix row names the item") {
  QMatrix qm = make_qmatrix({{0}}, 1);
  StudentSequence seq = make_seq({{0, 1}, {5, 1}});
  try {
    compute_counters(seq, qm);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("5") != std::string::npos);
  }
}

TEST_CASE("matches the brute-force recount") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 40; ++rep) {
    const int num_skills = 1 + static_cast<int>(rng() % 10);
    const int num_items = 1 + static_cast<int>(rng() % 8);
    std::vector<std::vector<int>> rows(num_items);
    for (auto& row : rows) {
      row.push_back(static_cast<int>(rng() % num_skills));
      if (num_skills > 1 && (rng() & 1)) {
        int extra = static_cast<int>(rng() % num_skills);
        if (extra != row[0]) row.push_back(extra);
      }
    }
    QMatrix qm = make_qmatrix(rows, num_skills);

    const int T = 1 + static_cast<int>(rng() % 50);
    StudentSequence seq{0, {}};
    for (int t = 0; t < T; ++t)
      seq.steps.push_back(Step{static_cast<int>(rng() % num_items),
                               static_cast<std::int8_t>(rng() & 1)});

    CounterTable table = compute_counters(seq, qm);
    for (int t = 1; t <= T; ++t)
      for (int k = 0; k < num_skills; ++k) {
        CHECK(table.wins(t, k) == oracles::recount_wins(seq, qm, t, k));
        CHECK(table.fails(t, k) == oracles::recount_fails(seq, qm, t, k));
      }
  }
}

TEST_CASE("conservation: totals grow by one exactly on assessed skills") {
  std::mt19937_64 rng(22);
  QMatrix qm = make_qmatrix({{0}, {1}, {0, 2}, {2}}, 3);
  StudentSequence seq{0, {}};
  for (int t = 0; t < 30; ++t)
    seq.steps.push_back(
        Step{static_cast<int>(rng() % 4), static_cast<std::int8_t>(rng() & 1)});
  CounterTable table = compute_counters(seq, qm);
  for (int t = 1; t < 30; ++t) {
    auto assessed = qm.skills_of(seq.steps[t - 1].item);
    for (int k = 0; k < 3; ++k) {
      const int before = table.wins(t, k) + table.fails(t, k);
      const int after = table.wins(t + 1, k) + table.fails(t + 1, k);
      const bool hit =
          std::find(assessed.begin(), assessed.end(), k) != assessed.end();
      CHECK(after - before == (hit ? 1 : 0));
    }
  }
}

TEST_CASE("exclusivity: flipping outcome at t never changes counters at <= t") {
  std::mt19937_64 rng(23);
  QMatrix qm = make_qmatrix({{0}, {1}, {0, 1}}, 2);
  StudentSequence seq{0, {}};
  for (int t = 0; t < 20; ++t)
    seq.steps.push_back(
        Step{static_cast<int>(rng() % 3), static_cast<std::int8_t>(rng() & 1)});
  CounterTable base = compute_counters(seq, qm);

  for (int flip = 1; flip <= 20; ++flip) {
    StudentSequence mutated = seq;
    mutated.steps[flip - 1].outcome = mutated.steps[flip - 1].outcome ? 0 : 1;
    CounterTable changed = compute_counters(mutated, qm);
    for (int t = 1; t <= flip; ++t)
      for (int k = 0; k < 2; ++k) {
        CHECK(changed.wins(t, k) == base.wins(t, k));
        CHECK(changed.fails(t, k) == base.fails(t, k));
      }
  }
}

TEST_CASE("feature assembly: the count-model regressors") {
  // Skill 1 with W=2, F=1 visible at step 4.
  QMatrix qm = make_qmatrix({{1}}, 3);
  StudentSequence seq = make_seq({{0, 1}, {0, 1}, {0, 0}, {0, 1}});
  CounterTable table = compute_counters(seq, qm);
  FeatureLayout layout{5, 3};

  auto entries = assemble_features(4, 0, qm, table,
                                   MetadataSpec::parse("swf"), layout);
  REQUIRE(entries.size() == 3);
  CHECK(entries[0].index == layout.skill_offset() + 1);
  CHECK(entries[0].value == 1.0);
  CHECK(entries[1].index == layout.wins_offset() + 1);
  CHECK(entries[1].value == 2.0);
  CHECK(entries[2].index == layout.fails_offset() + 1);
  CHECK(entries[2].value == 1.0);
}

TEST_CASE("feature assembly: item one-hot only") {
  QMatrix qm = make_qmatrix({{0}, {0}, {0}, {0}, {0}, {0}, {0}, {0}}, 1);
  StudentSequence seq = make_seq({{7, 1}});
  CounterTable table = compute_counters(seq, qm);
  FeatureLayout layout{8, 1};
  auto entries =
      assemble_features(1, 7, qm, table, MetadataSpec::parse("i"), layout);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].index == 7);
  CHECK(entries[0].value == 1.0);
}

TEST_CASE("feature assembly: two-skill item enumerates all blocks") {
  QMatrix qm = make_qmatrix({{1, 2}}, 3);
  StudentSequence seq = make_seq({{0, 1}, {0, 0}, {0, 1}});
  CounterTable table = compute_counters(seq, qm);
  FeatureLayout layout{4, 3};
  auto entries = assemble_features(3, 0, qm, table,
                                   MetadataSpec::parse("iswf"), layout);
  // item + 2 skills + 2 wins + 2 fails (all counts nonzero at step 3)
  REQUIRE(entries.size() == 7);
  CHECK(entries[0].index == 0);
  CHECK(entries[1].index == layout.skill_offset() + 1);
  CHECK(entries[2].index == layout.skill_offset() + 2);
  CHECK(entries[3].value == 1.0);  // wins skill 1
  CHECK(entries[5].value == 1.0);  // fails skill 1

  // Sparsity bound: never more than 1 + 3*|KC|.
  for (int t = 1; t <= 3; ++t) {
    auto e = assemble_features(t, 0, qm, table, MetadataSpec::parse("iswf"), layout);
    CHECK(e.size() <= 1 + 3 * qm.skills_of(0).size());
  }
}

TEST_CASE("metadata n-gram parsing") {
  CHECK(MetadataSpec::parse("iswf").ngram() == "iswf");
  CHECK(MetadataSpec::parse("swf").ngram() == "swf");
  CHECK(MetadataSpec::parse("i").ngram() == "i");
  CHECK_THROWS_AS(MetadataSpec::parse(""), ConfigError);
  CHECK_THROWS_AS(MetadataSpec::parse("x"), ConfigError);
  CHECK_THROWS_AS(MetadataSpec::parse("si"), ConfigError);
  CHECK_THROWS_AS(MetadataSpec::parse("ii"), ConfigError);
}

}  // TEST_SUITE

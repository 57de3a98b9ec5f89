// tests/test_eval.cpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <catch_amalgamated.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "eegrec/eval.hpp"
#include "eegrec/util.hpp"
#include "oracles.hpp"

using namespace eegrec;

namespace {

std::vector<std::string> random_tokens(Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> vocab{"x", "y", "z"};
  std::vector<std::string> out;
  const std::size_t len = rng.index(max_len + 1);
  for (std::size_t i = 0; i < len; ++i) out.push_back(vocab[rng.index(vocab.size())]);
  return out;
}

}  // namespace

TEST_CASE("edit distance on identical and one-sided sequences") {
  const std::vector<std::string> abc{"a", "b", "c"};
  const auto same = eval::edit_distance(abc, abc);
  CHECK(same.substitutions == 0);
  CHECK(same.deletions == 0);
  CHECK(same.insertions == 0);

  const auto ins = eval::edit_distance({}, abc);
  CHECK(ins.total() == 3);
  CHECK(ins.insertions == 3);

  const auto del = eval::edit_distance(abc, {});
  CHECK(del.total() == 3);
  CHECK(del.deletions == 3);
}

TEST_CASE("the cat sat against the bat costs one substitution and one deletion") {
  const auto counts = eval::edit_distance(eval::split_words("the cat sat"),
                                          eval::split_words("the bat"));
  CHECK(counts.substitutions == 1);
  CHECK(counts.deletions == 1);
  CHECK(counts.insertions == 0);
  CHECK(counts.total() == 2);
}

TEST_CASE("equal-cost alignments prefer substitutions") {
  // a -> b can be one substitution or delete + insert; the split must report
  // the substitution.
  const auto counts = eval::edit_distance<std::string>({"a"}, {"b"});
  CHECK(counts.substitutions == 1);
  CHECK(counts.deletions == 0);
  CHECK(counts.insertions == 0);
}

TEST_CASE("edit distance totals match the recursive oracle") {
  Rng rng(90210);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_tokens(rng, 6);
    const auto b = random_tokens(rng, 6);
    CAPTURE(trial, a.size(), b.size());
    REQUIRE(eval::edit_distance(a, b).total() == oracles::edit_distance_recursive(a, b));
  }
}

TEST_CASE("edit distance is a metric on token sequences") {
  Rng rng(1848);
  for (int trial = 0; trial < 60; ++trial) {
    const auto a = random_tokens(rng, 5);
    const auto b = random_tokens(rng, 5);
    const auto c = random_tokens(rng, 5);
    const auto ab = eval::edit_distance(a, b);
    const auto ba = eval::edit_distance(b, a);
    // Swapping the arguments swaps deletions and insertions.
    CHECK(ab.total() == ba.total());
    CHECK(ab.deletions == ba.insertions);
    CHECK(ab.insertions == ba.deletions);
    CHECK(ab.substitutions == ba.substitutions);
    // Triangle inequality.
    CHECK(eval::edit_distance(a, c).total() <=
          ab.total() + eval::edit_distance(b, c).total());
    // Identity of indiscernibles.
    CHECK((eval::edit_distance(a, a).total() == 0));
  }
}

TEST_CASE("tokenization splits on runs of whitespace and keeps characters verbatim") {
  CHECK(eval::split_words("the  cat  sat") == std::vector<std::string>{"the", "cat", "sat"});
  CHECK(eval::split_words("  a ") == std::vector<std::string>{"a"});
  CHECK(eval::split_words("").empty());
  CHECK(eval::split_chars("a b") == std::vector<char>{'a', ' ', 'b'});
}

TEST_CASE("corpus WER matches the pinned example") {
  CHECK(eval::wer({{"the cat sat", "the bat"}}) ==
        Catch::Approx(200.0 / 3.0).margin(1e-9));
  CHECK(eval::wer({{"the cat sat", "the cat sat"}}) == 0.0);
}

TEST_CASE("corpus WER pools errors and words across sentences") {
  const eval::ScorePair p1{"the cat sat", "the bat"};   // 2 errors / 3 words
  const eval::ScorePair p2{"a dog", "a dog ran"};       // 1 error / 2 words
  const double pooled = eval::wer({p1, p2});
  CHECK(pooled == Catch::Approx(100.0 * 3.0 / 5.0).margin(1e-9));

  // The sentence-mean variant averages the per-sentence rates instead.
  const double mean = eval::wer_sentence_mean({p1, p2});
  CHECK(mean == Catch::Approx((200.0 / 3.0 + 50.0) / 2.0).margin(1e-9));
}

TEST_CASE("WER can exceed one hundred percent") {
  CHECK(eval::wer({{"a", "b c d"}}) == Catch::Approx(300.0).margin(1e-9));
}

TEST_CASE("WER rejects degenerate corpora") {
  CHECK_THROWS_AS(eval::wer({}), ParameterError);
  CHECK_THROWS_AS(eval::wer({{"", ""}}), ParameterError);
  CHECK_THROWS_AS(eval::wer_sentence_mean({{"", "x"}}), ParameterError);
  CHECK_THROWS_AS(eval::cer({}), ParameterError);
}

TEST_CASE("CER counts characters including spaces") {
  CHECK(eval::cer({{"ab", "ad"}}) == Catch::Approx(50.0).margin(1e-9));
  // Deleting the space is one edit over three reference characters.
  CHECK(eval::cer({{"a b", "ab"}}) == Catch::Approx(100.0 / 3.0).margin(1e-9));
  CHECK(eval::cer({{"abc", "abc"}}) == 0.0);
}

TEST_CASE("vocabulary sweep counts match hand tallies") {
  const std::vector<eval::SweepItem> items{
      {"the cat", "the cat", 2},
      {"a dog", "a hog", 7},
      {"the cat", "the bat", 12},
  };
  const auto report = eval::vocab_sweep(items, {5, 10, 15, 20, 25, 30});
  REQUIRE(report.rows.size() == 6);

  const auto& r5 = report.rows[0];
  CHECK(r5.k == 5);
  CHECK(r5.present);
  CHECK(r5.total_sentences == 1);
  CHECK(r5.unique_sentences == 1);
  CHECK(r5.total_words == 2);
  CHECK(r5.unique_words == 2);
  CHECK(r5.letters == 6);  // letters exclude the space
  CHECK(r5.wer == 0.0);
  CHECK(r5.cer == 0.0);

  const auto& r10 = report.rows[1];
  CHECK(r10.total_sentences == 2);
  CHECK(r10.unique_sentences == 2);
  CHECK(r10.total_words == 4);
  CHECK(r10.unique_words == 4);
  CHECK(r10.letters == 10);
  CHECK(r10.wer == Catch::Approx(25.0).margin(1e-9));
  CHECK(r10.cer == Catch::Approx(100.0 / 12.0).margin(1e-9));

  const auto& r15 = report.rows[2];
  CHECK(r15.total_sentences == 3);
  CHECK(r15.unique_sentences == 2);  // the cat appears twice
  CHECK(r15.total_words == 6);
  CHECK(r15.unique_words == 4);
  CHECK(r15.letters == 16);
  CHECK(r15.wer == Catch::Approx(100.0 / 3.0).margin(1e-9));
  CHECK(r15.cer == Catch::Approx(200.0 / 19.0).margin(1e-9));

  // The ladder saturates once every item is inside the subset.
  for (std::size_t i = 2; i < report.rows.size(); ++i) {
    CHECK(report.rows[i].total_sentences == 3);
    CHECK(report.rows[i].wer == Catch::Approx(r15.wer).margin(1e-12));
  }
  const std::vector<int> ladder{5, 10, 15, 20, 25, 30};
  for (std::size_t i = 0; i < ladder.size(); ++i) CHECK(report.rows[i].k == ladder[i]);
}

TEST_CASE("subsets with no sentences warn instead of failing") {
  const std::vector<eval::SweepItem> items{{"late sentence", "late sentence", 9}};
  std::ostringstream warnings;
  const auto report = eval::vocab_sweep(items, {1, 10}, &warnings);
  REQUIRE(report.rows.size() == 2);
  CHECK_FALSE(report.rows[0].present);
  CHECK(report.rows[1].present);
  CHECK(warnings.str().find("sentence_id <= 1") != std::string::npos);
}

TEST_CASE("vocabulary sweep validates the ladder") {
  CHECK_THROWS_AS(eval::vocab_sweep({}, {}), ParameterError);
  CHECK_THROWS_AS(eval::vocab_sweep({}, {0}), ParameterError);
}

TEST_CASE("the CSV report renders counts and two-decimal rates") {
  const std::vector<eval::SweepItem> items{
      {"the cat", "the cat", 2},
      {"a dog", "a hog", 7},
      {"the cat", "the bat", 12},
  };
  std::ostringstream out;
  eval::write_sweep_csv(out, eval::vocab_sweep(items, {5, 10, 15}));
  CHECK(out.str() ==
        "k,total_sentences,unique_sentences,total_words,unique_words,letters,wer,cer\n"
        "5,1,1,2,2,6,0.00,0.00\n"
        "10,2,2,4,4,10,25.00,8.33\n"
        "15,3,2,6,4,16,33.33,10.53\n");
}

TEST_CASE("absent subsets keep their CSV line with empty fields") {
  const std::vector<eval::SweepItem> items{{"late", "late", 9}};
  std::ostringstream out;
  eval::write_sweep_csv(out, eval::vocab_sweep(items, {1, 10}));
  CHECK(out.str() ==
        "k,total_sentences,unique_sentences,total_words,unique_words,letters,wer,cer\n"
        "1,,,,,,,\n"
        "10,1,1,1,1,4,0.00,0.00\n");
}

TEST_CASE("rates round to two decimals in reports") {
  eval::SweepReport report;
  eval::SweepRow row;
  row.k = 30;
  row.present = true;
  row.total_sentences = 1;
  row.unique_sentences = 1;
  row.total_words = 175;
  row.unique_words = 1;
  row.letters = 1;
  row.wer = 100.0 * 131.0 / 175.0;  // 74.857...
  row.cer = 50.0;
  report.rows.push_back(row);
  std::ostringstream out;
  eval::write_sweep_csv(out, report);
  CHECK(out.str().find("74.86") != std::string::npos);
  CHECK(out.str().find("50.00") != std::string::npos);
}

TEST_CASE("the text table mirrors the CSV content") {
  const std::vector<eval::SweepItem> items{{"the cat", "the bat", 3}};
  std::ostringstream out;
  eval::write_sweep_table(out, eval::vocab_sweep(items, {2, 5}));
  const std::string text = out.str();
  CHECK(text.find("wer_mean") != std::string::npos);
  CHECK(text.find("50.00") != std::string::npos);  // 1 error over 2 words
  CHECK(text.find('-') != std::string::npos);      // absent k=2 row
}

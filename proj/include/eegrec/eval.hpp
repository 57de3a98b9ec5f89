// include/eegrec/eval.hpp

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

#pragma once

#include <algorithm>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "eegrec/errors.hpp"

namespace eegrec {
namespace eval {

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;

  std::size_t total() const { return substitutions + deletions + insertions; }
};

// Levenshtein alignment with unit costs. Ties are resolved in favor of the
// diagonal move (match/substitution), then deletion, so the split of an equal
// total into sub/del/ins is deterministic.
template <typename Token>
EditCounts edit_distance(const std::vector<Token>& ref, const std::vector<Token>& hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<EditCounts> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j].insertions = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = EditCounts{0, i, 0};
    for (std::size_t j = 1; j <= m; ++j) {
      EditCounts diag = prev[j - 1];
      if (!(ref[i - 1] == hyp[j - 1])) ++diag.substitutions;
      EditCounts del = prev[j];
      ++del.deletions;
      EditCounts ins = cur[j - 1];
      ++ins.insertions;
      EditCounts best = diag;
      if (del.total() < best.total()) best = del;
      if (ins.total() < best.total()) best = ins;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

inline std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

inline std::vector<char> split_chars(const std::string& text) {
  return std::vector<char>(text.begin(), text.end());
}

struct ScorePair {
  std::string ref;
  std::string hyp;
};

// Corpus-level word error rate in percent: total edits over total reference
// words across all pairs.
inline double wer(const std::vector<ScorePair>& pairs) {
  require_param(!pairs.empty(), "wer: empty reference corpus");
  std::size_t errors = 0, ref_words = 0;
  for (const auto& p : pairs) {
    const auto ref = split_words(p.ref);
    errors += edit_distance(ref, split_words(p.hyp)).total();
    ref_words += ref.size();
  }
  require_param(ref_words > 0, "wer: reference corpus has no words");
  return 100.0 * static_cast<double>(errors) / static_cast<double>(ref_words);
}

// Mean of per-sentence word error rates, in percent.
inline double wer_sentence_mean(const std::vector<ScorePair>& pairs) {
  require_param(!pairs.empty(), "wer: empty reference corpus");
  double sum = 0.0;
  for (const auto& p : pairs) {
    const auto ref = split_words(p.ref);
    require_param(!ref.empty(), "wer: empty reference sentence");
    sum += 100.0 * static_cast<double>(edit_distance(ref, split_words(p.hyp)).total()) /
           static_cast<double>(ref.size());
  }
  return sum / static_cast<double>(pairs.size());
}

// Corpus-level character error rate in percent; spaces count as characters.
inline double cer(const std::vector<ScorePair>& pairs) {
  require_param(!pairs.empty(), "cer: empty reference corpus");
  std::size_t errors = 0, ref_chars = 0;
  for (const auto& p : pairs) {
    const auto ref = split_chars(p.ref);
    errors += edit_distance(ref, split_chars(p.hyp)).total();
    ref_chars += ref.size();
  }
  require_param(ref_chars > 0, "cer: reference corpus has no characters");
  return 100.0 * static_cast<double>(errors) / static_cast<double>(ref_chars);
}

// One scored sentence tagged with its corpus sentence number, used to build
// the nested evaluation subsets.
struct SweepItem {
  std::string ref;
  std::string hyp;
  int sentence_id = 0;
};

struct SweepRow {
  int k = 0;                      // sentences 1..k are in the subset
  bool present = false;           // false when no test item fell in the subset
  std::size_t total_sentences = 0;
  std::size_t unique_sentences = 0;
  std::size_t total_words = 0;
  std::size_t unique_words = 0;
  std::size_t letters = 0;        // non-space characters in the references
  double wer = 0.0;
  double cer = 0.0;
  double wer_mean = 0.0;          // per-sentence mean
};

struct SweepReport {
  std::vector<SweepRow> rows;
};

// Scores nested subsets restricted to sentence_id <= k for each ladder value.
// Empty subsets produce a row with present = false (and a warning on the
// stream, if given) rather than an error.
inline SweepReport vocab_sweep(const std::vector<SweepItem>& items,
                               const std::vector<int>& ladder = {5, 10, 15, 20, 25, 30},
                               std::ostream* warnings = nullptr) {
  require_param(!ladder.empty(), "vocab sweep: empty subset ladder");
  SweepReport report;
  for (int k : ladder) {
    require_param(k >= 1, "vocab sweep: subset sizes must be >= 1");
    SweepRow row;
    row.k = k;
    std::vector<ScorePair> pairs;
    std::set<std::string> sentences;
    std::set<std::string> words;
    for (const auto& item : items) {
      if (item.sentence_id > k) continue;
      pairs.push_back({item.ref, item.hyp});
      sentences.insert(item.ref);
      for (const auto& w : split_words(item.ref)) {
        words.insert(w);
        row.total_words += w.size() ? 1 : 0;
        row.letters += w.size();
      }
    }
    if (pairs.empty()) {
      if (warnings)
        *warnings << "vocab sweep: no test sentences with sentence_id <= " << k << "\n";
      report.rows.push_back(row);
      continue;
    }
    row.present = true;
    row.total_sentences = pairs.size();
    row.unique_sentences = sentences.size();
    row.unique_words = words.size();
    row.wer = wer(pairs);
    row.cer = cer(pairs);
    row.wer_mean = wer_sentence_mean(pairs);
    report.rows.push_back(row);
  }
  return report;
}

// CSV report; absent subsets keep their line with empty metric fields.
inline void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  out << "k,total_sentences,unique_sentences,total_words,unique_words,letters,wer,cer\n";
  for (const auto& r : report.rows) {
    out << r.k << ',';
    if (!r.present) {
      out << ",,,,,,\n";
      continue;
    }
    out << r.total_sentences << ',' << r.unique_sentences << ',' << r.total_words << ','
        << r.unique_words << ',' << r.letters << ',' << std::fixed << std::setprecision(2)
        << r.wer << ',' << r.cer << "\n";
    out.unsetf(std::ios_base::floatfield);
  }
}

// Human-readable table with the per-sentence mean WER alongside the corpus
// WER.
inline void write_sweep_table(std::ostream& out, const SweepReport& report) {
  out << std::left << std::setw(5) << "k" << std::right << std::setw(10) << "sents"
      << std::setw(10) << "uniq_s" << std::setw(10) << "words" << std::setw(10) << "uniq_w"
      << std::setw(10) << "letters" << std::setw(10) << "wer" << std::setw(10) << "wer_mean"
      << std::setw(10) << "cer" << "\n";
  for (const auto& r : report.rows) {
    out << std::left << std::setw(5) << r.k << std::right;
    if (!r.present) {
      out << std::setw(10) << "-" << std::setw(10) << "-" << std::setw(10) << "-"
          << std::setw(10) << "-" << std::setw(10) << "-" << std::setw(10) << "-"
          << std::setw(10) << "-" << std::setw(10) << "-" << "\n";
      continue;
    }
    out << std::setw(10) << r.total_sentences << std::setw(10) << r.unique_sentences
        << std::setw(10) << r.total_words << std::setw(10) << r.unique_words << std::setw(10)
        << r.letters << std::setw(10) << std::fixed << std::setprecision(2) << r.wer
        << std::setw(10) << r.wer_mean << std::setw(10) << r.cer << "\n";
    out.unsetf(std::ios_base::floatfield);
  }
}

}  // namespace eval
}  // namespace eegrec

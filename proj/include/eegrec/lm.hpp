// include/eegrec/lm.hpp

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
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "eegrec/alphabet.hpp"
#include "eegrec/errors.hpp"
#include "eegrec/io.hpp"

namespace eegrec {
namespace lm {

// Character n-gram model with interpolated absolute discounting. Outcomes are
// the alphabet symbols plus a sentence-end marker; contexts are the preceding
// characters, left-padded with '^' at the sentence start. Every distribution
// backs off through the shorter-context chain down to a uniform base, so all
// outcomes keep nonzero probability.
class CharLm {
 public:
  static constexpr char kStartPad = '^';

  CharLm(Alphabet alphabet, int order, double discount)
      : alphabet_(std::move(alphabet)), order_(order), discount_(discount) {
    require_param(order_ >= 1, "lm: order must be >= 1");
    require_param(discount_ > 0.0 && discount_ < 1.0, "lm: discount must be in (0, 1)");
    require_param(alphabet_.index_of(kStartPad) < 0,
                  "lm: alphabet must not contain the padding symbol");
  }

  int order() const { return order_; }
  double discount() const { return discount_; }
  const Alphabet& alphabet() const { return alphabet_; }
  int num_outcomes() const { return alphabet_.size() + 1; }  // symbols + end marker
  int end_index() const { return alphabet_.size(); }
  std::size_t context_count() const { return table_.size(); }

  // Base model with no corpus: uniform over symbols + end marker.
  static CharLm uniform(const Alphabet& alphabet, int order = 4, double discount = 0.75) {
    CharLm lm(alphabet, order, discount);
    lm.table_[""] = std::vector<double>(
        static_cast<std::size_t>(lm.num_outcomes()),
        -std::log(static_cast<double>(lm.num_outcomes())));
    return lm;
  }

  static CharLm train(const std::vector<std::string>& corpus, const Alphabet& alphabet,
                      int order = 4, double discount = 0.75) {
    CharLm lm(alphabet, order, discount);
    require_data(!corpus.empty(), "lm: empty training corpus");

    // Raw counts per context length; context keys carry at most order-1
    // preceding characters, oldest first.
    std::vector<std::map<std::string, std::map<int, std::int64_t>>> counts(
        static_cast<std::size_t>(order));
    for (const std::string& sentence : corpus) {
      require_data(!sentence.empty(), "lm: empty sentence in corpus");
      for (char c : sentence)
        if (alphabet.index_of(c) < 0)
          throw DataError(std::string("lm: character '") + c + "' in \"" + sentence +
                          "\" is not in the alphabet");
      const std::string padded = std::string(static_cast<std::size_t>(order - 1), kStartPad) +
                                 sentence;
      // One outcome per character plus the end marker after the last one.
      for (std::size_t pos = 0; pos <= sentence.size(); ++pos) {
        const int outcome = pos < sentence.size() ? alphabet.index_of(sentence[pos])
                                                  : lm.end_index();
        for (int len = 0; len < order; ++len) {
          const std::string ctx =
              padded.substr(pos + static_cast<std::size_t>(order - 1 - len),
                            static_cast<std::size_t>(len));
          counts[static_cast<std::size_t>(len)][ctx][outcome] += 1;
        }
      }
    }

    // Build distributions bottom-up so each context can interpolate with its
    // already-finished backoff.
    const int v = lm.num_outcomes();
    const double base = 1.0 / static_cast<double>(v);
    std::map<std::string, std::vector<double>> probs;  // linear space while building
    for (int len = 0; len < order; ++len) {
      for (const auto& [ctx, outcome_counts] : counts[static_cast<std::size_t>(len)]) {
        std::int64_t total = 0;
        for (const auto& [_, n] : outcome_counts) total += n;
        const double distinct = static_cast<double>(outcome_counts.size());
        const double backoff_mass =
            discount * distinct / static_cast<double>(total);
        const std::vector<double>* lower = nullptr;
        if (len > 0) {
          const auto it = probs.find(ctx.substr(1));
          require_data(it != probs.end(), "lm: missing backoff context");
          lower = &it->second;
        }
        std::vector<double> p(static_cast<std::size_t>(v), 0.0);
        for (int k = 0; k < v; ++k) {
          const auto it = outcome_counts.find(k);
          const double cnt = it != outcome_counts.end() ? static_cast<double>(it->second) : 0.0;
          const double head = std::max(cnt - discount, 0.0) / static_cast<double>(total);
          const double tail = lower ? (*lower)[static_cast<std::size_t>(k)] : base;
          p[static_cast<std::size_t>(k)] = head + backoff_mass * tail;
        }
        probs[ctx] = std::move(p);
      }
    }

    for (auto& [ctx, p] : probs) {
      std::vector<double> logp(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) logp[i] = std::log(p[i]);
      lm.table_[ctx] = std::move(logp);
    }
    return lm;
  }

  // log P(next | history). `history` is the full preceding text of the
  // sentence; `next` is a symbol index or end_index() for the sentence end.
  double next_log_prob(const std::string& history, int next) const {
    require_param(next >= 0 && next < num_outcomes(), "lm: outcome index out of range");
    return distribution_for(history)[static_cast<std::size_t>(next)];
  }

  double next_log_prob(const std::string& history, char next) const {
    const int idx = alphabet_.index_of(next);
    require_param(idx >= 0, std::string("lm: character '") + next + "' not in alphabet");
    return next_log_prob(history, idx);
  }

  // Sum of per-character conditionals; optionally includes the end marker.
  double sequence_log_prob(const std::string& text, bool include_end = false) const {
    double total = 0.0;
    for (std::size_t i = 0; i < text.size(); ++i)
      total += next_log_prob(text.substr(0, i), text[i]);
    if (include_end) total += next_log_prob(text, end_index());
    return total;
  }

  void save(const std::string& path) const {
    BinWriter w(path);
    w.magic("CLM4", 1);
    w.str(alphabet_.symbols());
    w.u32(static_cast<std::uint32_t>(order_));
    w.f64(discount_);
    w.u64(table_.size());
    for (const auto& [ctx, logp] : table_) {  // std::map gives sorted, stable order
      w.str(ctx);
      w.f64_array(logp.data(), logp.size());
    }
    w.close();
  }

  static CharLm load(const std::string& path) {
    BinReader r(path);
    r.expect_magic("CLM4", 1, "character language model");
    const std::string symbols = r.str();
    const int order = static_cast<int>(r.u32());
    const double discount = r.f64();
    CharLm lm(Alphabet(symbols), order, discount);
    const std::uint64_t n = r.u64();
    const std::size_t v = static_cast<std::size_t>(lm.num_outcomes());
    for (std::uint64_t i = 0; i < n; ++i) {
      std::string ctx = r.str();
      std::vector<double> logp(v);
      r.f64_array(logp.data(), v);
      lm.table_[std::move(ctx)] = std::move(logp);
    }
    require_data(lm.table_.count("") == 1, "language model: missing root context");
    return lm;
  }

  // Exposed for the normalization property test.
  const std::map<std::string, std::vector<double>>& table() const { return table_; }

 private:
  // Longest stored suffix of the padded history wins; the root context ""
  // always exists after train()/uniform().
  const std::vector<double>& distribution_for(const std::string& history) const {
    std::string ctx = std::string(static_cast<std::size_t>(order_ - 1), kStartPad) + history;
    if (ctx.size() > static_cast<std::size_t>(order_ - 1))
      ctx.erase(0, ctx.size() - static_cast<std::size_t>(order_ - 1));
    while (true) {
      const auto it = table_.find(ctx);
      if (it != table_.end()) return it->second;
      if (ctx.empty()) throw DataError("lm: no root context (model not trained)");
      ctx.erase(0, 1);
    }
  }

  Alphabet alphabet_;
  int order_;
  double discount_;
  std::map<std::string, std::vector<double>> table_;
};

}  // namespace lm
}  // namespace eegrec

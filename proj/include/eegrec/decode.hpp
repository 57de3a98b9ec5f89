// include/eegrec/decode.hpp

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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "eegrec/alphabet.hpp"
#include "eegrec/errors.hpp"
#include "eegrec/lm.hpp"
#include "eegrec/util.hpp"

namespace eegrec {
namespace decode {

// Best-path decoding: per-frame argmax (ties go to the lowest class index),
// then collapse repeats and remove blanks.
inline std::string greedy_decode(const Eigen::MatrixXd& lattice, const Alphabet& alphabet) {
  require_param(static_cast<int>(lattice.cols()) == alphabet.num_classes(),
                "greedy_decode: lattice width must match alphabet");
  const int blank = alphabet.blank();
  std::string out;
  int prev = blank;
  for (Eigen::Index t = 0; t < lattice.rows(); ++t) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(lattice.cols()); ++k)
      if (lattice(t, k) > lattice(t, best)) best = k;
    if (best != blank && best != prev) out.push_back(alphabet.symbol(best));
    prev = best;
  }
  return out;
}

struct BeamConfig {
  int beam_width = 25;
  double lm_weight = 0.5;       // shallow-fusion weight on the LM log-prob
  double insertion_bonus = 0.1; // per-character additive bonus
  int nbest = 1;

  void validate() const {
    require_param(beam_width >= 1, "beam search: beam width must be >= 1");
    require_param(nbest >= 1, "beam search: nbest must be >= 1");
    require_param(lm_weight >= 0.0, "beam search: lm weight must be >= 0");
  }
};

struct Hypothesis {
  std::string text;
  double fused_score;    // log P_ctc + lm_weight * log P_lm + bonus * |text|
  double log_prob;       // acoustic log P_ctc(prefix)
  double lm_log_prob;    // log P_lm(prefix), 0 when no LM is used
};

// CTC prefix beam search with optional character-LM shallow fusion. Each
// prefix keeps separate blank-ending and symbol-ending path masses; prefixes
// are ranked by fused score with lexicographic tie-breaking, which makes the
// result deterministic. Pass lm = nullptr for pure acoustic decoding.
inline std::vector<Hypothesis> beam_search(const Eigen::MatrixXd& lattice,
                                           const Alphabet& alphabet, const lm::CharLm* lm,
                                           const BeamConfig& cfg) {
  cfg.validate();
  require_param(static_cast<int>(lattice.cols()) == alphabet.num_classes(),
                "beam search: lattice width must match alphabet");
  require_param(lattice.rows() > 0, "beam search: empty lattice");
  if (lm != nullptr)
    require_param(lm->alphabet().symbols() == alphabet.symbols(),
                  "beam search: language model alphabet mismatch");
  const int blank = alphabet.blank();
  const int symbols = alphabet.size();

  struct Entry {
    double p_blank = kNegInf;     // log mass of paths ending in blank
    double p_symbol = kNegInf;    // log mass of paths ending in the last symbol
    double lm_log_prob = 0.0;
  };
  const auto fused = [&](const std::string& text, const Entry& e) {
    return logaddexp(e.p_blank, e.p_symbol) + cfg.lm_weight * e.lm_log_prob +
           cfg.insertion_bonus * static_cast<double>(text.size());
  };

  // The live beam is a sorted vector so all accumulation happens in a fixed
  // order.
  std::vector<std::pair<std::string, Entry>> beam;
  beam.emplace_back(std::string(), Entry{0.0, kNegInf, 0.0});

  for (Eigen::Index t = 0; t < lattice.rows(); ++t) {
    std::unordered_map<std::string, Entry> next;
    next.reserve(beam.size() * static_cast<std::size_t>(symbols + 1));
    for (const auto& [prefix, entry] : beam) {
      const double p_total = logaddexp(entry.p_blank, entry.p_symbol);

      // Blank keeps the prefix and seals the current symbol run.
      Entry& same = next.try_emplace(prefix, Entry{kNegInf, kNegInf, entry.lm_log_prob})
                        .first->second;
      same.p_blank = logaddexp(same.p_blank, lattice(t, blank) + p_total);
      // Re-emitting the final symbol without an intervening blank extends the
      // run, so the prefix is unchanged.
      if (!prefix.empty()) {
        const int last = alphabet.index_of(prefix.back());
        same.p_symbol = logaddexp(same.p_symbol, lattice(t, last) + entry.p_symbol);
      }

      for (int k = 0; k < symbols; ++k) {
        std::string extended = prefix;
        extended.push_back(alphabet.symbol(k));
        // A repeated symbol needs a blank in between, so only blank-ending
        // mass may extend with it.
        const double source =
            (!prefix.empty() && alphabet.index_of(prefix.back()) == k) ? entry.p_blank
                                                                       : p_total;
        if (source == kNegInf) continue;
        auto [it, created] = next.try_emplace(std::move(extended), Entry{});
        if (created)
          it->second.lm_log_prob =
              entry.lm_log_prob +
              (lm != nullptr && cfg.lm_weight > 0.0 ? lm->next_log_prob(prefix, k) : 0.0);
        it->second.p_symbol = logaddexp(it->second.p_symbol, lattice(t, k) + source);
      }
    }

    beam.assign(next.begin(), next.end());
    std::sort(beam.begin(), beam.end(), [&](const auto& a, const auto& b) {
      const double fa = fused(a.first, a.second);
      const double fb = fused(b.first, b.second);
      if (fa != fb) return fa > fb;
      return a.first < b.first;
    });
    if (static_cast<int>(beam.size()) > cfg.beam_width)
      beam.resize(static_cast<std::size_t>(cfg.beam_width));
  }

  std::vector<Hypothesis> out;
  out.reserve(std::min<std::size_t>(beam.size(), static_cast<std::size_t>(cfg.nbest)));
  for (const auto& [prefix, entry] : beam) {
    if (static_cast<int>(out.size()) >= cfg.nbest) break;
    out.push_back({prefix, fused(prefix, entry), logaddexp(entry.p_blank, entry.p_symbol),
                   entry.lm_log_prob});
  }
  return out;
}

inline std::string beam_decode(const Eigen::MatrixXd& lattice, const Alphabet& alphabet,
                               const lm::CharLm* lm, const BeamConfig& cfg) {
  return beam_search(lattice, alphabet, lm, cfg).front().text;
}

}  // namespace decode
}  // namespace eegrec

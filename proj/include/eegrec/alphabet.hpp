// include/eegrec/alphabet.hpp

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

#include <array>
#include <string>
#include <vector>

#include "eegrec/errors.hpp"

namespace eegrec {

// Character inventory of the recognizer. Class indices are the symbol
// positions; the CTC blank takes the final index (so the standard set
// a-z + space + apostrophe gives 29 classes in total).
class Alphabet {
 public:
  explicit Alphabet(std::string symbols) : symbols_(std::move(symbols)) {
    require_param(!symbols_.empty(), "alphabet must be non-empty");
    lookup_.fill(-1);
    for (int i = 0; i < static_cast<int>(symbols_.size()); ++i) {
      const auto c = static_cast<unsigned char>(symbols_[i]);
      require_param(lookup_[c] == -1, "alphabet: duplicate symbol");
      lookup_[c] = i;
    }
  }

  static Alphabet standard() { return Alphabet("abcdefghijklmnopqrstuvwxyz '"); }

  int size() const { return static_cast<int>(symbols_.size()); }  // without blank
  int num_classes() const { return size() + 1; }
  int blank() const { return size(); }

  const std::string& symbols() const { return symbols_; }
  char symbol(int index) const { return symbols_.at(static_cast<std::size_t>(index)); }

  // -1 if the character is not in the alphabet.
  int index_of(char c) const { return lookup_[static_cast<unsigned char>(c)]; }

  std::vector<int> encode(const std::string& text) const {
    std::vector<int> out;
    out.reserve(text.size());
    for (char c : text) {
      const int idx = index_of(c);
      if (idx < 0)
        throw ParameterError(std::string("character '") + c + "' not in alphabet");
      out.push_back(idx);
    }
    return out;
  }

  std::string decode(const std::vector<int>& indices) const {
    std::string out;
    out.reserve(indices.size());
    for (int i : indices) {
      require_param(i >= 0 && i < size(), "symbol index out of range");
      out.push_back(symbols_[static_cast<std::size_t>(i)]);
    }
    return out;
  }

 private:
  Alphabet() = default;
  std::string symbols_;
  std::array<int, 256> lookup_{};
};

}  // namespace eegrec

// hyctc/tokenizer.hpp

// Copyright 2026  The hyctc Authors
//
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

// Word vocabulary with count thresholding, and the two character
// inventories used by the character head.
//
// Character unit ids are laid out so that the 83-unit set extends the
// 28-unit set without renumbering:
//
//    0        blank
//    1        space
//    2..27    a..z
//   28..53    A..Z    word-initial letters (83-unit set only)
//   54..73    20 double-letter units, most frequent in the lexicon first
//   74..82    's 't 'd 'm 've 're 'll 'n '
//
// The double-letter slots are ranked by count in the lexicon the set is
// built from; ties and unused slots fall back to kDoubleLetterOrder. The
// serialized JSON of a built set is the frozen inventory.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyctc/ctc.hpp"
#include "hyctc/error.hpp"

namespace hyctc {

using Transcript = std::vector<std::string>;

inline constexpr std::string_view kBlankToken = "<blk>";
inline constexpr std::string_view kOovToken = "<OOV>";
inline constexpr std::string_view kSilenceToken = "<sil>";

/// Lowercases ASCII letters and folds typographic apostrophes to '\''.
inline std::string NormalizeWord(std::string_view word) {
  if (word == kOovToken || word == kSilenceToken) return std::string(word);
  std::string out;
  out.reserve(word.size());
  for (size_t i = 0; i < word.size(); ++i) {
    const auto c = static_cast<unsigned char>(word[i]);
    // U+2018, U+2019 (E2 80 98/99) and U+02BC (CA BC).
    if (c == 0xE2 && i + 2 < word.size() && static_cast<unsigned char>(word[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(word[i + 2]) == 0x98 ||
         static_cast<unsigned char>(word[i + 2]) == 0x99)) {
      out.push_back('\'');
      i += 2;
    } else if (c == 0xCA && i + 1 < word.size() && static_cast<unsigned char>(word[i + 1]) == 0xBC) {
      out.push_back('\'');
      i += 1;
    } else {
      out.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  return out;
}

inline Transcript SplitTranscript(std::string_view text) {
  Transcript words;
  std::istringstream ss{std::string(text)};
  std::string w;
  while (ss >> w) words.push_back(NormalizeWord(w));
  return words;
}

inline std::string JoinTranscript(const Transcript& words) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out.push_back(' ');
    out += words[i];
  }
  return out;
}

/// One word per line; `#` starts a comment; blank lines ignored.
inline std::vector<std::string> ParseLexicon(std::istream& is) {
  std::vector<std::string> words;
  std::string line;
  while (std::getline(is, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string w;
    if (ss >> w) words.push_back(NormalizeWord(w));
  }
  return words;
}

inline std::vector<std::string> LoadLexicon(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open lexicon " + path);
  return ParseLexicon(is);
}

inline void SaveLexicon(const std::string& path, const std::vector<std::string>& words) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::kIo, "cannot open " + path + " for writing");
  for (const auto& w : words) os << w << '\n';
}

// ---------------------------------------------------------------------------

class WordVocab {
 public:
  static constexpr TokenId kBlankId = 0;
  static constexpr TokenId kOovId = 1;
  static constexpr TokenId kSilenceId = 2;
  static constexpr int kVersion = 1;

  /// Keeps every surface word seen at least `min_count` times. Ids of kept
  /// words follow lexicographic order after the three special tokens.
  static WordVocab Build(std::span<const Transcript> corpus, int min_count) {
    if (min_count < 1) throw Error(ErrorKind::kInvalidInput, "min_count must be >= 1");
    std::map<std::string, int> counts;
    for (const auto& utt : corpus)
      for (const auto& w : utt)
        if (w != kSilenceToken && w != kOovToken) ++counts[w];
    if (counts.empty()) throw Error(ErrorKind::kInvalidInput, "cannot build a vocabulary from an empty corpus");
    WordVocab v;
    v.min_count_ = min_count;
    for (const auto& [w, n] : counts)
      if (n >= min_count) v.Add(w);
    return v;
  }

  TokenId Lookup(std::string_view word) const {
    if (word == kSilenceToken) return kSilenceId;
    auto it = index_.find(std::string(word));
    return it == index_.end() ? kOovId : it->second;
  }
  bool Contains(std::string_view word) const { return index_.count(std::string(word)) > 0; }
  const std::string& Word(TokenId id) const { return words_.at(id); }
  int size() const { return static_cast<int>(words_.size()); }
  int min_count() const { return min_count_; }
  const std::vector<std::string>& words() const { return words_; }

  LabelSequence Encode(const Transcript& text) const {
    LabelSequence ids;
    ids.reserve(text.size());
    for (const auto& w : text) ids.push_back(Lookup(w));
    return ids;
  }

  nlohmann::json ToJson() const {
    nlohmann::json j;
    j["format"] = "hyctc-word-vocab";
    j["version"] = kVersion;
    j["min_count"] = min_count_;
    auto& arr = j["words"] = nlohmann::json::array();
    for (size_t i = 0; i < words_.size(); ++i) arr.push_back({{"id", i}, {"word", words_[i]}});
    return j;
  }

  static WordVocab FromJson(const nlohmann::json& j) {
    if (j.value("format", "") != "hyctc-word-vocab")
      throw Error(ErrorKind::kFormat, "not a word vocabulary document");
    if (j.value("version", 0) != kVersion) throw Error(ErrorKind::kVersion, "unsupported vocabulary version");
    WordVocab v;
    v.words_.clear();
    v.index_.clear();
    v.min_count_ = j.at("min_count").get<int>();
    for (const auto& e : j.at("words")) {
      if (e.at("id").get<size_t>() != v.words_.size())
        throw Error(ErrorKind::kFormat, "vocabulary ids must be dense and ordered");
      v.words_.push_back(e.at("word").get<std::string>());
    }
    if (v.words_.size() < 3 || v.words_[kBlankId] != kBlankToken || v.words_[kOovId] != kOovToken ||
        v.words_[kSilenceId] != kSilenceToken)
      throw Error(ErrorKind::kFormat, "vocabulary special tokens are missing or misplaced");
    for (size_t i = 3; i < v.words_.size(); ++i) v.index_[v.words_[i]] = static_cast<TokenId>(i);
    return v;
  }

 private:
  WordVocab() : words_{std::string(kBlankToken), std::string(kOovToken), std::string(kSilenceToken)} {}

  void Add(const std::string& w) {
    index_[w] = static_cast<TokenId>(words_.size());
    words_.push_back(w);
  }

  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
  int min_count_ = 1;
};

// ---------------------------------------------------------------------------

enum class CharSetVariant { kCs28, kCs83 };

enum class UnitKind { kBlank, kSpace, kLetter, kInitial, kDouble, kApostrophe };

inline constexpr int kNumDoubleUnits = 20;
/// Fallback ranking for double-letter slots, roughly English frequency.
inline constexpr std::string_view kDoubleLetterOrder = "lesotfrnpcmdgbzaiukhvwyxjq";
inline constexpr std::array<std::string_view, 9> kApostropheUnits = {
    "'s", "'t", "'d", "'m", "'ve", "'re", "'ll", "'n", "'"};

class CharSet {
 public:
  static constexpr TokenId kBlankId = 0;
  static constexpr TokenId kSpaceId = 1;
  static constexpr int kVersion = 1;

  static CharSet Cs28() {
    CharSet cs;
    cs.variant_ = CharSetVariant::kCs28;
    cs.AddBase();
    cs.Index();
    return cs;
  }

  /// Builds the 83-unit set, ranking double letters by their count in
  /// `lexicon`. Every lexicon word must consist of letters and apostrophes.
  static CharSet Cs83(std::span<const std::string> lexicon) {
    std::map<char, int> double_counts;
    for (const auto& raw : lexicon) {
      const std::string w = NormalizeWord(raw);
      for (char c : w)
        if (!(c >= 'a' && c <= 'z') && c != '\'')
          throw Error(ErrorKind::kInvalidInput, "word '" + raw + "' has a character outside the 83-unit set");
      // Position 0 is always the word-initial unit, so pairs start at 1.
      for (size_t i = 1; i + 1 < w.size();) {
        if (w[i] == w[i + 1] && w[i] != '\'') {
          ++double_counts[w[i]];
          i += 2;
        } else {
          ++i;
        }
      }
    }
    std::vector<char> letters(kDoubleLetterOrder.begin(), kDoubleLetterOrder.end());
    std::stable_sort(letters.begin(), letters.end(),
                     [&](char a, char b) { return double_counts[a] > double_counts[b]; });

    CharSet cs;
    cs.variant_ = CharSetVariant::kCs83;
    cs.AddBase();
    for (char c = 'a'; c <= 'z'; ++c)
      cs.units_.push_back({std::string(1, static_cast<char>(std::toupper(c))), UnitKind::kInitial});
    for (int i = 0; i < kNumDoubleUnits; ++i) cs.units_.push_back({std::string(2, letters[i]), UnitKind::kDouble});
    for (auto a : kApostropheUnits) cs.units_.push_back({std::string(a), UnitKind::kApostrophe});
    cs.Index();
    return cs;
  }

  CharSetVariant variant() const { return variant_; }
  std::string_view variant_name() const { return variant_ == CharSetVariant::kCs28 ? "cs28" : "cs83"; }
  int size() const { return static_cast<int>(units_.size()); }
  TokenId blank_id() const { return kBlankId; }
  TokenId space_id() const { return kSpaceId; }
  const std::string& UnitText(TokenId id) const { return units_.at(id).text; }
  UnitKind Kind(TokenId id) const { return units_.at(id).kind; }

  /// Unit ids for a single word. The 83-unit set marks the first letter
  /// with its word-initial unit, then segments the rest greedily by
  /// longest match.
  std::vector<TokenId> EncodeWord(std::string_view raw) const {
    const std::string w = NormalizeWord(raw);
    if (w.empty()) throw Error(ErrorKind::kInvalidInput, "cannot encode an empty word");
    std::vector<TokenId> ids;
    size_t pos = 0;
    if (variant_ == CharSetVariant::kCs83 && w[0] >= 'a' && w[0] <= 'z') {
      ids.push_back(initial_index_.at(w[0]));
      pos = 1;
    }
    while (pos < w.size()) {
      TokenId match = -1;
      size_t len = std::min<size_t>(max_unit_len_, w.size() - pos);
      for (; len > 0; --len) {
        auto it = index_.find(w.substr(pos, len));
        if (it != index_.end()) {
          match = it->second;
          break;
        }
      }
      if (match < 0)
        throw Error(ErrorKind::kInvalidInput,
                    "word '" + std::string(raw) + "' is not representable in " + std::string(variant_name()));
      ids.push_back(match);
      pos += len;
    }
    return ids;
  }

  bool CanEncode(std::string_view word) const {
    try {
      EncodeWord(word);
      return true;
    } catch (const Error&) {
      return false;
    }
  }

  /// Words separated by single space units. Silence markers carry no
  /// character units and are skipped.
  std::vector<TokenId> Encode(const Transcript& text) const {
    std::vector<TokenId> ids;
    bool first = true;
    for (const auto& w : text) {
      if (w == kSilenceToken) continue;
      if (!first) ids.push_back(kSpaceId);
      auto word_ids = EncodeWord(w);
      ids.insert(ids.end(), word_ids.begin(), word_ids.end());
      first = false;
    }
    return ids;
  }

  std::string DecodeWord(std::span<const TokenId> ids) const {
    std::string w;
    for (TokenId id : ids) {
      CheckDecodable(id);
      if (id == kSpaceId) throw Error(ErrorKind::kInvalidInput, "space inside a word");
      const Unit& u = units_[id];
      if (u.kind == UnitKind::kInitial)
        w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(u.text[0]))));
      else
        w += u.text;
    }
    return w;
  }

  /// Splits on space units; leading, trailing and repeated spaces produce
  /// no empty words. Blank is rejected: collapse first.
  Transcript Decode(std::span<const TokenId> ids) const {
    Transcript words;
    std::vector<TokenId> cur;
    for (TokenId id : ids) {
      CheckDecodable(id);
      if (id == kSpaceId) {
        if (!cur.empty()) words.push_back(DecodeWord(cur));
        cur.clear();
      } else {
        cur.push_back(id);
      }
    }
    if (!cur.empty()) words.push_back(DecodeWord(cur));
    return words;
  }

  nlohmann::json ToJson() const {
    nlohmann::json j;
    j["format"] = "hyctc-charset";
    j["version"] = kVersion;
    j["variant"] = std::string(variant_name());
    auto& arr = j["units"] = nlohmann::json::array();
    for (size_t i = 0; i < units_.size(); ++i)
      arr.push_back({{"id", i}, {"text", units_[i].text}, {"kind", KindName(units_[i].kind)}});
    return j;
  }

  static CharSet FromJson(const nlohmann::json& j) {
    if (j.value("format", "") != "hyctc-charset") throw Error(ErrorKind::kFormat, "not a charset document");
    if (j.value("version", 0) != kVersion) throw Error(ErrorKind::kVersion, "unsupported charset version");
    CharSet cs;
    const auto variant = j.at("variant").get<std::string>();
    if (variant == "cs28") cs.variant_ = CharSetVariant::kCs28;
    else if (variant == "cs83") cs.variant_ = CharSetVariant::kCs83;
    else throw Error(ErrorKind::kFormat, "unknown charset variant " + variant);
    for (const auto& e : j.at("units")) {
      if (e.at("id").get<size_t>() != cs.units_.size())
        throw Error(ErrorKind::kFormat, "charset ids must be dense and ordered");
      cs.units_.push_back({e.at("text").get<std::string>(), KindFromName(e.at("kind").get<std::string>())});
    }
    const size_t expected = cs.variant_ == CharSetVariant::kCs28 ? 28 : 83;
    if (cs.units_.size() != expected) throw Error(ErrorKind::kFormat, "charset has the wrong number of units");
    cs.Index();
    return cs;
  }

 private:
  struct Unit {
    std::string text;
    UnitKind kind;
  };

  static std::string KindName(UnitKind k) {
    switch (k) {
      case UnitKind::kBlank: return "blank";
      case UnitKind::kSpace: return "space";
      case UnitKind::kLetter: return "letter";
      case UnitKind::kInitial: return "initial";
      case UnitKind::kDouble: return "double";
      case UnitKind::kApostrophe: return "apostrophe";
    }
    return "letter";
  }

  static UnitKind KindFromName(const std::string& s) {
    if (s == "blank") return UnitKind::kBlank;
    if (s == "space") return UnitKind::kSpace;
    if (s == "letter") return UnitKind::kLetter;
    if (s == "initial") return UnitKind::kInitial;
    if (s == "double") return UnitKind::kDouble;
    if (s == "apostrophe") return UnitKind::kApostrophe;
    throw Error(ErrorKind::kFormat, "unknown unit kind " + s);
  }

  void AddBase() {
    units_.push_back({std::string(kBlankToken), UnitKind::kBlank});
    units_.push_back({" ", UnitKind::kSpace});
    for (char c = 'a'; c <= 'z'; ++c) units_.push_back({std::string(1, c), UnitKind::kLetter});
  }

  void Index() {
    index_.clear();
    initial_index_.clear();
    max_unit_len_ = 1;
    for (size_t i = 0; i < units_.size(); ++i) {
      const Unit& u = units_[i];
      if (u.kind == UnitKind::kBlank || u.kind == UnitKind::kSpace) continue;
      if (u.kind == UnitKind::kInitial) {
        initial_index_[static_cast<char>(std::tolower(static_cast<unsigned char>(u.text[0])))] =
            static_cast<TokenId>(i);
        continue;
      }
      index_[u.text] = static_cast<TokenId>(i);
      max_unit_len_ = std::max(max_unit_len_, u.text.size());
    }
  }

  void CheckDecodable(TokenId id) const {
    if (id < 0 || id >= size()) throw Error(ErrorKind::kInvalidInput, "unit id " + std::to_string(id) + " out of range");
    if (id == kBlankId) throw Error(ErrorKind::kInvalidInput, "blank in unit sequence; collapse before decoding");
  }

  CharSetVariant variant_ = CharSetVariant::kCs28;
  std::vector<Unit> units_;
  std::unordered_map<std::string, TokenId> index_;
  std::map<char, TokenId> initial_index_;
  size_t max_unit_len_ = 1;
};

inline CharSet MakeCharSet(std::string_view name, std::span<const std::string> lexicon) {
  if (name == "cs28") return CharSet::Cs28();
  if (name == "cs83") return CharSet::Cs83(lexicon);
  throw Error(ErrorKind::kInvalidInput, "unknown charset '" + std::string(name) + "' (expected cs28 or cs83)");
}

}  // namespace hyctc

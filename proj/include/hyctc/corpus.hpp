// hyctc/corpus.hpp

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

// Deterministic synthetic speech-like corpora.
//
// Every character has a fixed random unit-vector prototype. A word is
// rendered as its characters' prototypes, each held for a sampled number of
// frames, with pause frames (zero vectors) between words and i.i.d. Gaussian
// noise on every frame. Because the rendering is character compositional, a
// character model can in principle decode words it never saw in training.
//
// Three splits are produced: train, test (with forced-rare words at a
// configurable rate) and hotword (each utterance carries one word that never
// occurs in train).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyctc/error.hpp"
#include "hyctc/matrix.hpp"
#include "hyctc/tokenizer.hpp"

namespace hyctc {

struct CorpusConfig {
  std::vector<std::string> lexicon;
  std::vector<double> weights;          // unigram weights per lexicon word; empty: Zipf over lexicon order
  double zipf_exponent = 0.5;
  std::vector<std::string> oov_target_words;  // subset of lexicon, held to rare_count in train
  int rare_count = 3;                   // exact train occurrences of each forced-rare word
  int tail_words = 0;                   // distinct nonce words added to train only
  int tail_count = 1;                   // train occurrences of each nonce word
  std::string tail_letters = "uniform";  // nonce spelling: "uniform" letters or lexicon "bigram" chain
  double test_oov_rate = 0.08;          // chance a test word slot holds a forced-rare word
  std::vector<std::string> hotwords;    // never in train; one per hotword-split utterance
  int hotword_utterances = 20;
  std::vector<std::pair<std::string, std::string>> homophones;  // (word, rendered as)
  int train_utterances = 600;
  int test_utterances = 150;
  int min_words = 2;
  int max_words = 5;
  int min_frames_per_char = 2;
  int max_frames_per_char = 3;
  int min_gap_frames = 1;
  int max_gap_frames = 2;
  int edge_frames = 0;                  // extra pause frames at both utterance ends
  double silence_marker_prob = 0.0;     // chance of a <sil> marker between two words
  double noise = 0.3;                   // sigma
  double hotword_noise = -1.0;          // sigma of the hotword split; negative: same as noise
  int proto_dim = 12;
  std::uint64_t seed = 1;

  void Validate() const {
    if (lexicon.empty()) throw Error(ErrorKind::kInvalidInput, "corpus lexicon is empty");
    if (!weights.empty() && weights.size() != lexicon.size())
      throw Error(ErrorKind::kInvalidInput, "weights must align with the lexicon");
    for (double w : weights)
      if (!(w > 0)) throw Error(ErrorKind::kInvalidInput, "word frequencies must be positive");
    if (!(noise >= 0)) throw Error(ErrorKind::kInvalidInput, "noise sigma must be >= 0");
    if (proto_dim < 1 || min_words < 1 || max_words < min_words || min_frames_per_char < 1 ||
        max_frames_per_char < min_frames_per_char || min_gap_frames < 0 || max_gap_frames < min_gap_frames ||
        edge_frames < 0 || train_utterances < 0 || test_utterances < 0 || hotword_utterances < 0 || rare_count < 0 ||
        tail_words < 0 || tail_count < 0)
      throw Error(ErrorKind::kInvalidInput, "inconsistent corpus size parameters");
    if (tail_letters != "uniform" && tail_letters != "bigram")
      throw Error(ErrorKind::kInvalidInput, "tail_letters must be 'uniform' or 'bigram'");
    if (test_oov_rate < 0 || test_oov_rate > 1 || silence_marker_prob < 0 || silence_marker_prob > 1)
      throw Error(ErrorKind::kInvalidInput, "rates must lie in [0, 1]");
    const std::set<std::string> lex(lexicon.begin(), lexicon.end());
    for (const auto& w : oov_target_words)
      if (!lex.count(w)) throw Error(ErrorKind::kInvalidInput, "oov target '" + w + "' is not in the lexicon");
    for (const auto& w : hotwords)
      if (lex.count(w)) throw Error(ErrorKind::kInvalidInput, "hotword '" + w + "' must not be in the training lexicon");
    auto check_word = [](const std::string& w) {
      if (w.empty()) throw Error(ErrorKind::kInvalidInput, "empty lexicon word");
      for (char c : w)
        if (!(c >= 'a' && c <= 'z') && c != '\'')
          throw Error(ErrorKind::kInvalidInput, "word '" + w + "' has a character with no prototype");
    };
    for (const auto& w : lexicon) check_word(w);
    for (const auto& w : hotwords) check_word(w);
    for (const auto& [a, b] : homophones) {
      check_word(a);
      check_word(b);
    }
    std::size_t regular = lexicon.size() - std::set<std::string>(oov_target_words.begin(), oov_target_words.end()).size();
    if (regular == 0 && (train_utterances > 0 || test_utterances > 0))
      throw Error(ErrorKind::kInvalidInput, "lexicon has no regular (non-rare) words");
  }
};

inline void to_json(nlohmann::json& j, const CorpusConfig& c) {
  j = {{"lexicon", c.lexicon},
       {"weights", c.weights},
       {"zipf_exponent", c.zipf_exponent},
       {"oov_target_words", c.oov_target_words},
       {"rare_count", c.rare_count},
       {"tail_words", c.tail_words},
       {"tail_count", c.tail_count},
       {"tail_letters", c.tail_letters},
       {"test_oov_rate", c.test_oov_rate},
       {"hotwords", c.hotwords},
       {"hotword_utterances", c.hotword_utterances},
       {"homophones", c.homophones},
       {"train_utterances", c.train_utterances},
       {"test_utterances", c.test_utterances},
       {"min_words", c.min_words},
       {"max_words", c.max_words},
       {"min_frames_per_char", c.min_frames_per_char},
       {"max_frames_per_char", c.max_frames_per_char},
       {"min_gap_frames", c.min_gap_frames},
       {"max_gap_frames", c.max_gap_frames},
       {"edge_frames", c.edge_frames},
       {"silence_marker_prob", c.silence_marker_prob},
       {"noise", c.noise},
       {"hotword_noise", c.hotword_noise},
       {"proto_dim", c.proto_dim},
       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, CorpusConfig& c) {
  CorpusConfig d;
  c.lexicon = j.value("lexicon", d.lexicon);
  for (auto& w : c.lexicon) w = NormalizeWord(w);
  c.weights = j.value("weights", d.weights);
  c.zipf_exponent = j.value("zipf_exponent", d.zipf_exponent);
  c.oov_target_words = j.value("oov_target_words", d.oov_target_words);
  c.rare_count = j.value("rare_count", d.rare_count);
  c.tail_words = j.value("tail_words", d.tail_words);
  c.tail_count = j.value("tail_count", d.tail_count);
  c.tail_letters = j.value("tail_letters", d.tail_letters);
  c.test_oov_rate = j.value("test_oov_rate", d.test_oov_rate);
  c.hotwords = j.value("hotwords", d.hotwords);
  c.hotword_utterances = j.value("hotword_utterances", d.hotword_utterances);
  c.homophones = j.value("homophones", d.homophones);
  c.train_utterances = j.value("train_utterances", d.train_utterances);
  c.test_utterances = j.value("test_utterances", d.test_utterances);
  c.min_words = j.value("min_words", d.min_words);
  c.max_words = j.value("max_words", d.max_words);
  c.min_frames_per_char = j.value("min_frames_per_char", d.min_frames_per_char);
  c.max_frames_per_char = j.value("max_frames_per_char", d.max_frames_per_char);
  c.min_gap_frames = j.value("min_gap_frames", d.min_gap_frames);
  c.max_gap_frames = j.value("max_gap_frames", d.max_gap_frames);
  c.edge_frames = j.value("edge_frames", d.edge_frames);
  c.silence_marker_prob = j.value("silence_marker_prob", d.silence_marker_prob);
  c.noise = j.value("noise", d.noise);
  c.hotword_noise = j.value("hotword_noise", d.hotword_noise);
  c.proto_dim = j.value("proto_dim", d.proto_dim);
  c.seed = j.value("seed", d.seed);
}

struct Utterance {
  std::string id;
  Matrix features;  // frames x proto_dim
  Transcript transcript;
};

struct Corpus {
  CorpusConfig config;
  std::vector<Utterance> train;
  std::vector<Utterance> test;
  std::vector<Utterance> hotword;
};

/// Index of a character's prototype: a..z -> 0..25, apostrophe -> 26.
inline int PrototypeIndex(char c) { return c == '\'' ? 26 : c - 'a'; }

/// 27 random unit vectors (letters and apostrophe), fixed by the seed.
inline Matrix CharacterPrototypes(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix p(27, dim);
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) p(r, c) = normal(rng);
    p.row(r).normalize();
  }
  return p;
}

class CorpusGenerator {
 public:
  explicit CorpusGenerator(const CorpusConfig& config)
      : config_(config), rng_(config.seed), protos_(CharacterPrototypes(config.proto_dim, config.seed)) {
    config_.Validate();
    const std::set<std::string> rare(config_.oov_target_words.begin(), config_.oov_target_words.end());
    std::vector<double> regular_weights;
    int rank = 0;
    for (size_t i = 0; i < config_.lexicon.size(); ++i) {
      const auto& w = config_.lexicon[i];
      if (rare.count(w)) continue;
      regular_.push_back(w);
      ++rank;
      regular_weights.push_back(config_.weights.empty() ? 1.0 / std::pow(rank, config_.zipf_exponent)
                                                        : config_.weights[i]);
    }
    if (!regular_.empty()) regular_dist_ = std::discrete_distribution<size_t>(regular_weights.begin(), regular_weights.end());
    for (const auto& [word, as] : config_.homophones) rendered_as_[word] = as;
  }

  Corpus Generate() {
    Corpus c;
    c.config = config_;
    std::vector<Transcript> train(config_.train_utterances);
    for (auto& t : train) t = RegularWords();
    // Forced-rare and nonce words: exact insertion counts at random slots.
    auto scatter = [&](const std::string& w, int count) {
      for (int k = 0; k < count && !train.empty(); ++k) {
        auto& utt = train[Uniform(0, static_cast<int>(train.size()) - 1)];
        utt.insert(utt.begin() + Uniform(0, static_cast<int>(utt.size())), w);
      }
    };
    for (const auto& w : config_.oov_target_words) scatter(w, config_.rare_count);
    for (const auto& w : NonceWords()) scatter(w, config_.tail_count);
    for (size_t i = 0; i < train.size(); ++i) c.train.push_back(Render("train-" + Pad(i), AddSilence(train[i])));

    std::bernoulli_distribution oov_slot(config_.test_oov_rate);
    for (int i = 0; i < config_.test_utterances; ++i) {
      Transcript t = RegularWords();
      if (!config_.oov_target_words.empty())
        for (auto& w : t)
          if (oov_slot(rng_))
            w = config_.oov_target_words[Uniform(0, static_cast<int>(config_.oov_target_words.size()) - 1)];
      c.test.push_back(Render("test-" + Pad(i), AddSilence(t)));
    }
    if (!config_.hotwords.empty()) {
      for (int i = 0; i < config_.hotword_utterances; ++i) {
        Transcript t = RegularWords();
        const auto& hw = config_.hotwords[i % config_.hotwords.size()];
        t.insert(t.begin() + Uniform(0, static_cast<int>(t.size())), hw);
        c.hotword.push_back(Render("hot-" + Pad(i), t, config_.hotword_noise < 0 ? config_.noise : config_.hotword_noise));
      }
    }
    return c;
  }

  /// Renders a transcript to feature frames at the configured sigma.
  Utterance Render(const std::string& id, const Transcript& words) { return Render(id, words, config_.noise); }

  Utterance Render(const std::string& id, const Transcript& words, double sigma) {
    std::vector<Eigen::RowVectorXd> frames;
    const Eigen::RowVectorXd pause = Eigen::RowVectorXd::Zero(config_.proto_dim);
    auto gap = [&](int n) {
      for (int k = 0; k < n; ++k) frames.push_back(pause);
    };
    gap(config_.edge_frames + Uniform(config_.min_gap_frames, config_.max_gap_frames));
    for (size_t i = 0; i < words.size(); ++i) {
      if (i > 0) gap(Uniform(config_.min_gap_frames, config_.max_gap_frames));
      if (words[i] == kSilenceToken) {
        gap(Uniform(3, 5));
        continue;
      }
      auto it = rendered_as_.find(words[i]);
      const std::string& spelled = it == rendered_as_.end() ? words[i] : it->second;
      for (char ch : spelled) {
        const int n = Uniform(config_.min_frames_per_char, config_.max_frames_per_char);
        for (int k = 0; k < n; ++k) frames.push_back(protos_.row(PrototypeIndex(ch)));
      }
    }
    gap(config_.edge_frames + Uniform(config_.min_gap_frames, config_.max_gap_frames));
    if (frames.empty()) frames.push_back(pause);

    Utterance u;
    u.id = id;
    u.transcript = words;
    u.features.resize(static_cast<Eigen::Index>(frames.size()), config_.proto_dim);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (size_t t = 0; t < frames.size(); ++t) {
      u.features.row(static_cast<Eigen::Index>(t)) = frames[t];
      // Drawn even at sigma 0 so the random stream does not depend on sigma.
      for (int d = 0; d < config_.proto_dim; ++d) u.features(static_cast<Eigen::Index>(t), d) += sigma * normal(rng_);
    }
    return u;
  }

  const Matrix& prototypes() const { return protos_; }

 private:
  int Uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Transcript RegularWords() {
    Transcript t(Uniform(config_.min_words, config_.max_words));
    for (auto& w : t) w = regular_[regular_dist_(rng_)];
    return t;
  }

  // Letter strings of length 4..8, distinct from every configured word. With
  // "bigram", letters follow a smoothed letter bigram chain of the lexicon.
  std::vector<std::string> NonceWords() {
    std::set<std::string> taken(config_.lexicon.begin(), config_.lexicon.end());
    taken.insert(config_.hotwords.begin(), config_.hotwords.end());
    std::vector<std::discrete_distribution<int>> next;  // row 26 is the word start
    if (config_.tail_letters == "bigram") {
      std::vector<std::vector<double>> counts(27, std::vector<double>(26, 0.1));
      for (const auto& w : config_.lexicon) {
        int prev = 26;
        for (char ch : w) {
          if (ch < 'a' || ch > 'z') continue;
          counts[prev][ch - 'a'] += 1.0;
          prev = ch - 'a';
        }
      }
      for (const auto& row : counts) next.emplace_back(row.begin(), row.end());
    }
    std::vector<std::string> out;
    while (static_cast<int>(out.size()) < config_.tail_words) {
      std::string w(Uniform(4, 8), 'a');
      int prev = 26;
      for (char& ch : w) {
        const int k = next.empty() ? Uniform(0, 25) : next[prev](rng_);
        ch = static_cast<char>('a' + k);
        prev = k;
      }
      if (taken.insert(w).second) out.push_back(w);
    }
    return out;
  }

  Transcript AddSilence(const Transcript& t) {
    if (config_.silence_marker_prob <= 0) return t;
    std::bernoulli_distribution coin(config_.silence_marker_prob);
    Transcript out;
    for (size_t i = 0; i < t.size(); ++i) {
      if (i > 0 && coin(rng_)) out.push_back(std::string(kSilenceToken));
      out.push_back(t[i]);
    }
    return out;
  }

  static std::string Pad(size_t i) {
    std::string s = std::to_string(i);
    return std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
  }

  CorpusConfig config_;
  std::mt19937_64 rng_;
  Matrix protos_;
  std::vector<std::string> regular_;
  std::discrete_distribution<size_t> regular_dist_;
  std::map<std::string, std::string> rendered_as_;
};

inline Corpus GenerateCorpus(const CorpusConfig& config) { return CorpusGenerator(config).Generate(); }

inline std::vector<Transcript> Transcripts(std::span<const Utterance> utts) {
  std::vector<Transcript> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back(u.transcript);
  return out;
}

/// Word counts (silence markers excluded).
inline std::map<std::string, int> WordFrequencies(std::span<const Utterance> utts) {
  std::map<std::string, int> counts;
  for (const auto& u : utts)
    for (const auto& w : u.transcript)
      if (w != kSilenceToken) ++counts[w];
  return counts;
}

/// Every distinct word in the transcripts, sorted: the valid-word list.
inline std::vector<std::string> CorpusLexicon(std::span<const Utterance> utts) {
  std::vector<std::string> out;
  for (const auto& [w, n] : WordFrequencies(utts)) out.push_back(w);
  return out;
}

// ---------------------------------------------------------------------------
// On-disk layout:
//   corpus.json     {"format": "hyctc-corpus", "version": 1, "config": {...}}
//   manifest.jsonl  one {"id", "split", "transcript", "features"} per line
//   features/*.bin  matrix containers

inline constexpr int kCorpusVersion = 1;

inline void SaveCorpus(const Corpus& corpus, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "features");
  {
    std::ofstream os(dir / "corpus.json");
    if (!os) throw Error(ErrorKind::kIo, "cannot write " + (dir / "corpus.json").string());
    nlohmann::json j{{"format", "hyctc-corpus"}, {"version", kCorpusVersion}, {"config", corpus.config}};
    os << j.dump(2) << '\n';
  }
  std::ofstream manifest(dir / "manifest.jsonl");
  if (!manifest) throw Error(ErrorKind::kIo, "cannot write " + (dir / "manifest.jsonl").string());
  auto emit = [&](const std::vector<Utterance>& utts, const char* split) {
    for (const auto& u : utts) {
      const std::string rel = "features/" + u.id + ".bin";
      SaveMatrixFile((dir / rel).string(), u.features);
      nlohmann::json line{{"id", u.id}, {"split", split}, {"transcript", JoinTranscript(u.transcript)}, {"features", rel}};
      manifest << line.dump() << '\n';
    }
  };
  emit(corpus.train, "train");
  emit(corpus.test, "test");
  emit(corpus.hotword, "hotword");
}

inline Corpus LoadCorpus(const std::filesystem::path& dir) {
  std::ifstream is(dir / "corpus.json");
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + (dir / "corpus.json").string());
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("corrupt corpus header: ") + e.what());
  }
  if (header.value("format", "") != "hyctc-corpus") throw Error(ErrorKind::kFormat, "not a corpus directory");
  if (header.value("version", 0) != kCorpusVersion)
    throw Error(ErrorKind::kVersion, "corpus version " + std::to_string(header.value("version", 0)) + " unsupported");
  Corpus c;
  c.config = header.at("config").get<CorpusConfig>();
  std::ifstream manifest(dir / "manifest.jsonl");
  if (!manifest) throw Error(ErrorKind::kIo, "cannot open " + (dir / "manifest.jsonl").string());
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, std::string("corrupt manifest line: ") + e.what());
    }
    Utterance u;
    u.id = j.at("id").get<std::string>();
    u.transcript = SplitTranscript(j.at("transcript").get<std::string>());
    u.features = LoadMatrixFile((dir / j.at("features").get<std::string>()).string());
    const auto split = j.at("split").get<std::string>();
    if (split == "train") c.train.push_back(std::move(u));
    else if (split == "test") c.test.push_back(std::move(u));
    else if (split == "hotword") c.hotword.push_back(std::move(u));
    else throw Error(ErrorKind::kFormat, "unknown split " + split);
  }
  return c;
}

}  // namespace hyctc

// hyctc/pipeline.hpp

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

// Experiment glue shared by the command-line tool, the acceptance binary and
// the samples: one declarative config, example construction, per-mode
// decoding and the comparison tables.

#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyctc/corpus.hpp"
#include "hyctc/eval.hpp"
#include "hyctc/hybrid_decoder.hpp"
#include "hyctc/lexicon_graph.hpp"
#include "hyctc/model.hpp"
#include "hyctc/tokenizer.hpp"
#include "hyctc/train.hpp"

namespace hyctc {

struct ExperimentConfig {
  std::uint64_t seed = 7;  // copied into the corpus, model and trainer seeds
  CorpusConfig corpus;
  ModelConfig model;       // input_dim and vocabulary sizes are filled from data
  TrainHyper word_train;
  TrainHyper char_train;
  int min_count = 10;
  std::string charset = "cs28";
  int beam_width = kDefaultBeamWidth;
  CharDecodeMode hybrid_char_mode = CharDecodeMode::kConstrained;

  void ApplySeed(std::uint64_t s) {
    seed = s;
    corpus.seed = s;
    model.seed = s;
    word_train.seed = s;
    char_train.seed = s + 1;
  }

  void Validate() const {
    corpus.Validate();
    if (min_count < 1) throw Error(ErrorKind::kInvalidInput, "min_count must be >= 1");
    if (beam_width < 1) throw Error(ErrorKind::kInvalidInput, "beam_width must be >= 1");
    if (charset != "cs28" && charset != "cs83") throw Error(ErrorKind::kInvalidInput, "charset must be cs28 or cs83");
    if (model.row_conv_context < 0) throw Error(ErrorKind::kInvalidInput, "row_conv_context must be >= 0");
  }
};

inline std::string CharDecodeModeName(CharDecodeMode m) {
  return m == CharDecodeMode::kMaxOutput ? "max" : "constrained";
}

inline CharDecodeMode CharDecodeModeFromName(const std::string& s) {
  if (s == "max") return CharDecodeMode::kMaxOutput;
  if (s == "constrained") return CharDecodeMode::kConstrained;
  throw Error(ErrorKind::kInvalidInput, "unknown character decode mode " + s);
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"seed", c.seed},
       {"corpus", c.corpus},
       {"model", c.model},
       {"word_train", c.word_train},
       {"char_train", c.char_train},
       {"min_count", c.min_count},
       {"charset", c.charset},
       {"beam_width", c.beam_width},
       {"hybrid_char_mode", CharDecodeModeName(c.hybrid_char_mode)}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  ExperimentConfig d;
  c.corpus = j.value("corpus", d.corpus);
  c.model = j.value("model", d.model);
  c.word_train = j.value("word_train", d.word_train);
  c.char_train = j.value("char_train", d.char_train);
  c.min_count = j.value("min_count", d.min_count);
  c.charset = j.value("charset", d.charset);
  c.beam_width = j.value("beam_width", d.beam_width);
  c.hybrid_char_mode = CharDecodeModeFromName(j.value("hybrid_char_mode", CharDecodeModeName(d.hybrid_char_mode)));
  c.ApplySeed(j.value("seed", d.seed));
}

/// Desk-scale defaults: a 62-word command lexicon with 12 forced-rare words
/// and one hot-word that never occurs in training.
inline ExperimentConfig DefaultExperimentConfig() {
  ExperimentConfig c;
  c.corpus.lexicon = {"play",    "artist",  "call",    "how",     "much",  "money",    "one",      "what",
                      "time",    "is",      "it",      "the",     "weather", "today",  "set",      "alarm",
                      "for",     "seven",   "tomorrow", "show",   "me",    "my",       "calendar", "open",
                      "music",   "next",    "song",    "send",    "message", "to",     "mom",      "find",
                      "coffee",  "near",    "turn",    "on",      "lights", "off",     "read",     "news",
                      "stop",    "timer",   "book",    "table",   "tonight", "april",  "kitty",    "why",
                      "does",    "cost",    "ratatat", "costco",  "azusa", "matthews", "jill",     "kellogg",
                      "margin",  "purr",    "zebra",   "quartz",  "volvo", "nimbus"};
  c.corpus.oov_target_words = {"ratatat", "costco", "azusa", "matthews", "jill",   "kellogg",
                               "margin",  "purr",   "zebra", "quartz",   "volvo", "nimbus"};
  c.corpus.hotwords = {"margera"};
  c.corpus.rare_count = 8;
  c.corpus.train_utterances = 1500;
  c.corpus.test_utterances = 150;
  c.corpus.min_frames_per_char = 3;
  c.corpus.max_frames_per_char = 4;
  c.corpus.edge_frames = 6;
  c.corpus.noise = 0.15;
  c.corpus.tail_words = 2000;
  c.corpus.tail_letters = "bigram";
  c.model.hidden_dim = 48;
  c.model.head_hidden_dim = 48;
  c.model.num_shared_layers = 1;
  c.model.frame_stack = 4;
  c.model.frame_shift = 2;
  c.word_train.epochs = 15;
  c.word_train.optimizer = "adam";
  c.word_train.learning_rate = 0.01;
  c.char_train = c.word_train;
  c.ApplySeed(7);
  return c;
}

/// The valid-word list: every distinct word of the training transcripts.
inline std::vector<std::string> ValidWords(const Corpus& corpus) { return CorpusLexicon(corpus.train); }

inline WordVocab BuildWordVocab(const Corpus& corpus, int min_count) {
  return WordVocab::Build(Transcripts(corpus.train), min_count);
}

inline ModelConfig ResolveModelConfig(const ExperimentConfig& c, const WordVocab& vocab, const CharSet& charset) {
  ModelConfig m = c.model;
  m.input_dim = c.corpus.proto_dim;
  m.word_vocab_size = vocab.size();
  m.char_vocab_size = charset.size();
  return m;
}

/// Per-dimension mean and inverse standard deviation over every frame of
/// `utts`; a constant dimension keeps unit scale.
inline void FitInputNormalization(HybridModel& model, std::span<const Utterance> utts) {
  const int d = model.config().input_dim;
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d), sq = Eigen::RowVectorXd::Zero(d);
  double n = 0;
  for (const auto& u : utts) {
    sum += u.features.colwise().sum();
    sq += u.features.array().square().matrix().colwise().sum();
    n += static_cast<double>(u.features.rows());
  }
  if (n == 0) throw Error(ErrorKind::kInvalidInput, "no frames to estimate input normalization");
  const Eigen::RowVectorXd mean = sum / n;
  Eigen::RowVectorXd inv_std(d);
  for (int k = 0; k < d; ++k) {
    const double var = sq(k) / n - mean(k) * mean(k);
    inv_std(k) = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
  }
  model.SetInputNormalization(mean, inv_std);
}

inline std::vector<TrainExample> WordExamples(std::span<const Utterance> utts, const WordVocab& vocab) {
  std::vector<TrainExample> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back({u.features, vocab.Encode(u.transcript)});
  return out;
}

inline std::vector<TrainExample> CharExamples(std::span<const Utterance> utts, const CharSet& charset) {
  std::vector<TrainExample> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back({u.features, charset.Encode(u.transcript)});
  return out;
}

/// Builds a fresh model, fits the input normalization on the training split
/// and runs the word stage.
inline HybridModel TrainWordModel(const ExperimentConfig& cfg, const Corpus& corpus, const WordVocab& vocab,
                                  const CharSet& charset, TrainStats* stats = nullptr,
                                  const ProgressFn& progress = {}) {
  HybridModel model(ResolveModelConfig(cfg, vocab, charset));
  FitInputNormalization(model, corpus.train);
  auto s = TrainWordStage(model, WordExamples(corpus.train, vocab), cfg.word_train, progress);
  if (stats) *stats = std::move(s);
  return model;
}

/// Char stage on top of a word-stage model; the shared stack stays frozen.
inline void TrainCharModel(HybridModel& model, const ExperimentConfig& cfg, const Corpus& corpus,
                           const CharSet& charset, TrainStats* stats = nullptr, const ProgressFn& progress = {}) {
  auto s = TrainCharStage(model, CharExamples(corpus.train, charset), cfg.char_train, progress);
  if (stats) *stats = std::move(s);
}

inline HybridConfig DecodeSettings(const ExperimentConfig& cfg) { return {cfg.hybrid_char_mode, cfg.beam_width}; }

// ---------------------------------------------------------------------------
// Decoding.

enum class DecodeMode { kWordOnly, kCharMax, kCharConstrained, kHybrid };

inline constexpr DecodeMode kAllDecodeModes[] = {DecodeMode::kWordOnly, DecodeMode::kCharMax,
                                                 DecodeMode::kCharConstrained, DecodeMode::kHybrid};

inline std::string DecodeModeName(DecodeMode m) {
  switch (m) {
    case DecodeMode::kWordOnly: return "word-only";
    case DecodeMode::kCharMax: return "char-max";
    case DecodeMode::kCharConstrained: return "char-constrained";
    case DecodeMode::kHybrid: return "hybrid";
  }
  return "word-only";
}

inline DecodeMode DecodeModeFromName(const std::string& s) {
  for (DecodeMode m : kAllDecodeModes)
    if (DecodeModeName(m) == s) return m;
  throw Error(ErrorKind::kInvalidInput, "unknown decode mode " + s);
}

struct DecodeRecord {
  std::string id;
  Transcript word_only;               // empty for the char-only modes
  std::optional<Transcript> chars;    // character-head words, when decoded
  Transcript final_words;
  std::vector<OovEvent> oov_events;
};

inline void to_json(nlohmann::json& j, const WordSpan& s) { j = {{"word", s.word}, {"start", s.start}, {"end", s.end}}; }

inline void to_json(nlohmann::json& j, const DecodeRecord& r) {
  j = nlohmann::json::object();
  j["id"] = r.id;
  j["word_only"] = JoinTranscript(r.word_only);
  j["char"] = r.chars ? nlohmann::json(JoinTranscript(*r.chars)) : nlohmann::json(nullptr);
  j["final"] = JoinTranscript(r.final_words);
  auto& events = j["oov_events"] = nlohmann::json::array();
  for (const auto& e : r.oov_events)
    events.push_back({{"oov", e.oov},
                      {"replacement", e.replacement ? nlohmann::json(*e.replacement) : nlohmann::json(nullptr)},
                      {"overlap", e.overlap}});
}

struct Decoder {
  const HybridModel& model;
  const WordVocab& vocab;
  const CharTrie& trie;
  HybridConfig hybrid;

  DecodeRecord operator()(const Utterance& u, DecodeMode mode) const {
    DecodeRecord r;
    r.id = u.id;
    switch (mode) {
      case DecodeMode::kWordOnly: {
        const auto out = model.Forward(u.features, Head::kWord);
        const auto greedy = GreedyDecode(*out.word);
        r.word_only = WordsOf(WordSpansFromWords(ExtractSegments(greedy.alignment, out.word->blank_id()), vocab));
        r.final_words = r.word_only;
        break;
      }
      case DecodeMode::kCharMax:
      case DecodeMode::kCharConstrained: {
        const auto out = model.Forward(u.features, Head::kChar);
        HybridConfig c = hybrid;
        c.char_mode = mode == DecodeMode::kCharMax ? CharDecodeMode::kMaxOutput : CharDecodeMode::kConstrained;
        r.chars = WordsOf(DecodeChars(*out.chars, trie, c));
        r.final_words = *r.chars;
        break;
      }
      case DecodeMode::kHybrid: {
        const auto out = model.Forward(u.features, Head::kBoth);
        auto h = HybridDecode(*out.word, *out.chars, trie, vocab, hybrid);
        r.word_only = std::move(h.word_only);
        if (h.char_spans) r.chars = WordsOf(*h.char_spans);
        r.final_words = std::move(h.words);
        r.oov_events = std::move(h.oov_events);
        break;
      }
    }
    return r;
  }

  std::vector<DecodeRecord> Run(std::span<const Utterance> utts, DecodeMode mode) const {
    std::vector<DecodeRecord> out;
    out.reserve(utts.size());
    for (const auto& u : utts) out.push_back((*this)(u, mode));
    return out;
  }
};

inline std::vector<Transcript> FinalWords(std::span<const DecodeRecord> records) {
  std::vector<Transcript> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.final_words);
  return out;
}

/// Tab-separated "id<TAB>words" lines; identical hypotheses give identical bytes.
inline void WriteHypotheses(std::ostream& os, std::span<const DecodeRecord> records) {
  for (const auto& r : records) os << r.id << '\t' << JoinTranscript(r.final_words) << '\n';
}

// ---------------------------------------------------------------------------
// Comparison across decoding modes.

struct ModeComparison {
  WerReport word_only;
  OovAttribution attribution;  // of the word-only output
  WerReport char_max;
  WerReport char_constrained;
  WerReport hybrid_max;
  WerReport hybrid;
  std::optional<double> recovery_rate;      // hybrid with constrained char decoding
  std::optional<double> recovery_rate_max;  // hybrid with max output char decoding
};

inline ModeComparison CompareModes(const Decoder& decoder, std::span<const Utterance> utts) {
  const auto refs = Transcripts(utts);
  auto score = [&](DecodeMode mode, CharDecodeMode char_mode) {
    Decoder d = decoder;
    d.hybrid.char_mode = char_mode;
    return FinalWords(d.Run(utts, mode));
  };
  ModeComparison c;
  const auto word_only = score(DecodeMode::kWordOnly, decoder.hybrid.char_mode);
  c.attribution = OovAttributedWer(refs, word_only);
  c.word_only = c.attribution.baseline;
  c.char_max = Wer(refs, score(DecodeMode::kCharMax, CharDecodeMode::kMaxOutput));
  c.char_constrained = Wer(refs, score(DecodeMode::kCharConstrained, CharDecodeMode::kConstrained));
  c.hybrid_max = Wer(refs, score(DecodeMode::kHybrid, CharDecodeMode::kMaxOutput));
  c.hybrid = Wer(refs, score(DecodeMode::kHybrid, CharDecodeMode::kConstrained));
  c.recovery_rate = RecoveryRate(c.attribution, c.hybrid);
  c.recovery_rate_max = RecoveryRate(c.attribution, c.hybrid_max);
  return c;
}

struct HotwordScore {
  std::string word;
  int occurrences = 0;
  int before = 0;  // correctly emitted with the original valid-word list
  int after = 0;   // correctly emitted once the hot-word is added

  double before_rate() const { return occurrences ? static_cast<double>(before) / occurrences : 0.0; }
  double after_rate() const { return occurrences ? static_cast<double>(after) / occurrences : 0.0; }
};

/// Hybrid decoding of `utts` before and after each hot-word joins the trie.
inline std::vector<HotwordScore> ScoreHotwords(const Decoder& decoder, std::span<const Utterance> utts,
                                               std::span<const std::string> hotwords) {
  const CharTrie extended = AddWords(decoder.trie, hotwords);
  const Decoder after{decoder.model, decoder.vocab, extended, decoder.hybrid};
  const auto before_out = decoder.Run(utts, DecodeMode::kHybrid);
  const auto after_out = after.Run(utts, DecodeMode::kHybrid);
  std::vector<HotwordScore> scores;
  for (const auto& w : hotwords) {
    HotwordScore s{w};
    for (size_t i = 0; i < utts.size(); ++i) {
      s.occurrences += static_cast<int>(std::count(utts[i].transcript.begin(), utts[i].transcript.end(), w));
      s.before += MatchedOccurrences(utts[i].transcript, before_out[i].final_words, w);
      s.after += MatchedOccurrences(utts[i].transcript, after_out[i].final_words, w);
    }
    scores.push_back(s);
  }
  return scores;
}

inline std::string FormatRate(const std::optional<double>& r) {
  if (!r) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << *r;
  return os.str();
}

inline void WriteComparisonMarkdown(std::ostream& os, const ModeComparison& c, std::span<const HotwordScore> hot) {
  const SystemRow word_rows[] = {{"CTC (word), word-only", c.word_only}};
  WriteWerTable(os, "Word-based CTC", word_rows);
  os << std::fixed << std::setprecision(2);
  os << "OOV-attributed WER: " << 100.0 * c.attribution.contribution() << "% of " << 100.0 * c.word_only.wer()
     << "% (oracle " << 100.0 * c.attribution.oracle_wer() << "%)\n\n";
  os.unsetf(std::ios::floatfield);
  const SystemRow char_rows[] = {{"CTC (char), max output", c.char_max},
                                 {"CTC (char), valid-word graph", c.char_constrained}};
  WriteWerTable(os, "Character-based CTC", char_rows);
  const SystemRow hybrid_rows[] = {{"CTC (word)", c.word_only},
                                   {"hybrid, char max output", c.hybrid_max},
                                   {"hybrid, char valid-word graph", c.hybrid}};
  WriteWerTable(os, "Hybrid CTC", hybrid_rows);
  os << "recovery_rate (valid-word graph): " << FormatRate(c.recovery_rate) << "\n";
  os << "recovery_rate (max output): " << FormatRate(c.recovery_rate_max) << "\n\n";
  if (!hot.empty()) {
    os << "**Hot-words**\n\n| Word | Occurrences | Before add | After add |\n|---|---:|---:|---:|\n";
    for (const auto& h : hot) os << "| " << h.word << " | " << h.occurrences << " | " << h.before << " | " << h.after << " |\n";
    os << '\n';
  }
}

inline void WriteComparisonCsv(std::ostream& os, const ModeComparison& c) {
  const SystemRow rows[] = {{"word-only", c.word_only},       {"word-only-oracle", c.attribution.oracle},
                            {"char-max", c.char_max},         {"char-constrained", c.char_constrained},
                            {"hybrid-max", c.hybrid_max},     {"hybrid", c.hybrid}};
  WriteWerCsv(os, rows);
  os << "recovery_rate," << FormatRate(c.recovery_rate) << ",,,,\n";
  os << "recovery_rate_max," << FormatRate(c.recovery_rate_max) << ",,,,\n";
}

}  // namespace hyctc

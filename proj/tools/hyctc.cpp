// tools/hyctc.cpp

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

// Command-line driver. Every subcommand reads and writes artifacts under
// --out-dir and refreshes out-dir/manifest.json:
//
//   gen-corpus     corpus/
//   build-vocab    vocab.json charset.json valid_words.txt
//   train-word     word.ckpt train_word.csv
//   train-char     model.ckpt train_char.csv
//   add-hotwords   hotwords.txt
//   decode         decode/<split>.<mode>.jsonl decode/<split>.<mode>.hyp
//   eval           eval/<split>.<mode>.json
//   report         report.md report.csv
//
// Failures print one JSON object on stderr and exit with status 2.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "hyctc/hyctc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace hyctc {
namespace {

constexpr int kExitError = 2;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> beam;
  std::optional<int> min_count;
  std::optional<std::string> charset;
  std::optional<int> row_conv_context;
  std::string out_dir = "run";
  std::string mode = "hybrid";
  std::string split = "test";
  std::vector<std::string> hotwords;
};

std::string Sha256File(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorKind::kIo, "sha256 unavailable");
  }
  std::vector<char> buf(1 << 16);
  while (is) {
    is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<size_t>(is.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

json ReadJson(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

void WriteText(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  os << text;
  if (!os) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

void WriteJson(const fs::path& path, const json& j) { WriteText(path, j.dump(2) + "\n"); }

class Run {
 public:
  explicit Run(const Options& opt) : opt_(opt), dir_(opt.out_dir) {
    fs::create_directories(dir_);
    const fs::path saved = dir_ / "config.json";
    if (!opt.config_path.empty()) cfg_ = ReadJson(opt.config_path).get<ExperimentConfig>();
    else if (fs::exists(saved)) cfg_ = ReadJson(saved).get<ExperimentConfig>();
    else cfg_ = DefaultExperimentConfig();
    if (opt.seed) cfg_.ApplySeed(*opt.seed);
    if (opt.beam) cfg_.beam_width = *opt.beam;
    if (opt.min_count) cfg_.min_count = *opt.min_count;
    if (opt.charset) cfg_.charset = *opt.charset;
    if (opt.row_conv_context) cfg_.model.row_conv_context = *opt.row_conv_context;
    cfg_.Validate();
    WriteJson(saved, cfg_);
  }

  const ExperimentConfig& config() const { return cfg_; }
  fs::path Path(const std::string& rel) const { return dir_ / rel; }

  Corpus LoadCorpusArtifact() const { return LoadCorpus(Require("corpus")); }
  WordVocab LoadVocab() const { return WordVocab::FromJson(ReadJson(Require("vocab.json"))); }
  CharSet LoadCharSet() const { return CharSet::FromJson(ReadJson(Require("charset.json"))); }
  std::vector<std::string> LoadValidWords() const { return LoadLexicon(Require("valid_words.txt").string()); }

  std::vector<std::string> LoadHotwords() const {
    const fs::path p = Path("hotwords.txt");
    return fs::exists(p) ? LoadLexicon(p.string()) : std::vector<std::string>{};
  }

  // The final model when both stages ran; otherwise the word-stage model.
  HybridModel LoadModel(bool need_char) const {
    if (fs::exists(Path("model.ckpt"))) return HybridModel::Load(Path("model.ckpt").string());
    if (need_char) Require("model.ckpt");
    return HybridModel::Load(Require("word.ckpt").string());
  }

  std::vector<Utterance> Split(const Corpus& c) const {
    if (opt_.split == "train") return c.train;
    if (opt_.split == "test") return c.test;
    if (opt_.split == "hotword") return c.hotword;
    throw Error(ErrorKind::kInvalidInput, "unknown split " + opt_.split + " (expected train, test or hotword)");
  }

  fs::path Require(const std::string& rel) const {
    const fs::path p = Path(rel);
    if (!fs::exists(p)) throw Error(ErrorKind::kIo, "missing artifact " + p.string() + "; run the earlier stage first");
    return p;
  }

  // Records the stage outputs and rehashes every artifact under out-dir.
  void Commit(const std::string& stage, const std::vector<std::string>& outputs) const {
    const fs::path mpath = Path("manifest.json");
    json m = fs::exists(mpath) ? ReadJson(mpath) : json::object();
    m["format"] = "hyctc-run-manifest";
    m["version"] = 1;
    m["config"] = cfg_;
    m["seeds"] = {{"experiment", cfg_.seed},
                  {"corpus", cfg_.corpus.seed},
                  {"model", cfg_.model.seed},
                  {"word_train", cfg_.word_train.seed},
                  {"char_train", cfg_.char_train.seed}};
    auto hashes = HashTree();
    json stage_entry = json::object();
    for (const auto& out : outputs)
      for (const auto& [rel, sha] : hashes)
        if (rel == out || rel.rfind(out + "/", 0) == 0) stage_entry[rel] = sha;
    m["stages"][stage] = {{"outputs", stage_entry}};
    m["artifacts"] = json::object();
    for (const auto& [rel, sha] : hashes) m["artifacts"][rel] = sha;
    WriteJson(mpath, m);
  }

 private:
  std::map<std::string, std::string> HashTree() const {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir_)) {
      if (!e.is_regular_file()) continue;
      const std::string rel = fs::relative(e.path(), dir_).generic_string();
      if (rel == "manifest.json") continue;
      out[rel] = Sha256File(e.path());
    }
    return out;
  }

  Options opt_;
  fs::path dir_;
  ExperimentConfig cfg_;
};

CharTrie DecodeTrie(const Run& run, const CharSet& cs) {
  auto words = run.LoadValidWords();
  const auto hot = run.LoadHotwords();
  words.insert(words.end(), hot.begin(), hot.end());
  return BuildTrie(words, cs);
}

void GenCorpus(const Run& run) {
  const Corpus c = GenerateCorpus(run.config().corpus);
  fs::remove_all(run.Path("corpus"));
  SaveCorpus(c, run.Path("corpus"));
  std::cout << "corpus: " << c.train.size() << " train, " << c.test.size() << " test, " << c.hotword.size()
            << " hotword utterances\n";
  run.Commit("gen-corpus", {"corpus"});
}

void BuildVocab(const Run& run) {
  const Corpus c = run.LoadCorpusArtifact();
  const auto vocab = BuildWordVocab(c, run.config().min_count);
  const auto valid = ValidWords(c);
  const auto cs = MakeCharSet(run.config().charset, valid);
  WriteJson(run.Path("vocab.json"), vocab.ToJson());
  WriteJson(run.Path("charset.json"), cs.ToJson());
  SaveLexicon(run.Path("valid_words.txt").string(), valid);
  std::cout << "word vocabulary " << vocab.size() << " (min_count " << run.config().min_count << "), "
            << valid.size() << " valid words, charset " << run.config().charset << " (" << cs.size() << " units)\n";
  run.Commit("build-vocab", {"vocab.json", "charset.json", "valid_words.txt"});
}

ProgressFn PrintEpochs(const std::string& stage) {
  return [stage](int epoch, double loss) {
    std::cout << stage << " epoch " << epoch + 1 << " loss " << std::setprecision(6) << loss << '\n';
  };
}

void TrainWord(const Run& run) {
  const Corpus c = run.LoadCorpusArtifact();
  TrainStats stats;
  const auto model = TrainWordModel(run.config(), c, run.LoadVocab(), run.LoadCharSet(), &stats, PrintEpochs("word"));
  model.Save(run.Path("word.ckpt").string());
  std::ostringstream csv;
  stats.WriteCsv(csv);
  WriteText(run.Path("train_word.csv"), csv.str());
  // A new word stage invalidates any earlier char stage.
  fs::remove(run.Path("model.ckpt"));
  fs::remove(run.Path("train_char.csv"));
  run.Commit("train-word", {"word.ckpt", "train_word.csv"});
}

void TrainChar(const Run& run) {
  const Corpus c = run.LoadCorpusArtifact();
  auto model = HybridModel::Load(run.Require("word.ckpt").string());
  TrainStats stats;
  TrainCharModel(model, run.config(), c, run.LoadCharSet(), &stats, PrintEpochs("char"));
  model.Save(run.Path("model.ckpt").string());
  std::ostringstream csv;
  stats.WriteCsv(csv);
  WriteText(run.Path("train_char.csv"), csv.str());
  run.Commit("train-char", {"model.ckpt", "train_char.csv"});
}

void AddHotwordsCmd(const Run& run, const std::vector<std::string>& requested) {
  std::vector<std::string> words = requested.empty() ? run.config().corpus.hotwords : requested;
  std::set<std::string> merged;
  for (const auto& w : run.LoadHotwords()) merged.insert(w);
  const auto cs = run.LoadCharSet();
  for (const auto& w : words) {
    const std::string n = NormalizeWord(w);
    if (!cs.CanEncode(n)) throw Error(ErrorKind::kInvalidInput, "hot-word '" + w + "' is not encodable");
    merged.insert(n);
  }
  SaveLexicon(run.Path("hotwords.txt").string(), std::vector<std::string>(merged.begin(), merged.end()));
  std::cout << merged.size() << " hot-words in the valid-word list\n";
  run.Commit("add-hotwords", {"hotwords.txt"});
}

std::string DecodeStem(const Options& opt) { return opt.split + "." + opt.mode; }

void DecodeCmd(const Run& run, const Options& opt) {
  const DecodeMode mode = DecodeModeFromName(opt.mode);
  const Corpus c = run.LoadCorpusArtifact();
  const auto utts = run.Split(c);
  const auto vocab = run.LoadVocab();
  const auto cs = run.LoadCharSet();
  const auto model = run.LoadModel(mode != DecodeMode::kWordOnly);
  const auto trie = DecodeTrie(run, cs);
  const Decoder decoder{model, vocab, trie, DecodeSettings(run.config())};
  const auto records = decoder.Run(utts, mode);
  std::ostringstream jsonl, hyp;
  for (const auto& r : records) jsonl << json(r).dump() << '\n';
  WriteHypotheses(hyp, records);
  const std::string stem = "decode/" + DecodeStem(opt);
  WriteText(run.Path(stem + ".jsonl"), jsonl.str());
  WriteText(run.Path(stem + ".hyp"), hyp.str());
  std::cout << "decoded " << records.size() << " utterances to " << run.Path(stem + ".hyp").string() << '\n';
  run.Commit("decode:" + DecodeStem(opt), {stem + ".jsonl", stem + ".hyp"});
}

std::map<std::string, Transcript> ReadHypotheses(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::map<std::string, Transcript> out;
  std::string line;
  while (std::getline(is, line)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error(ErrorKind::kFormat, "malformed hypothesis line in " + path.string());
    out[line.substr(0, tab)] = SplitTranscript(line.substr(tab + 1));
  }
  return out;
}

json WerJson(const WerReport& r) {
  return {{"wer", r.wer()},
          {"substitutions", r.substitutions},
          {"insertions", r.insertions},
          {"deletions", r.deletions},
          {"reference_words", r.reference_words}};
}

void EvalCmd(const Run& run, const Options& opt) {
  DecodeModeFromName(opt.mode);
  const Corpus c = run.LoadCorpusArtifact();
  const auto utts = run.Split(c);
  const auto hyps = ReadHypotheses(run.Require("decode/" + DecodeStem(opt) + ".hyp"));
  std::vector<Transcript> refs, hyp_list;
  for (const auto& u : utts) {
    const auto it = hyps.find(u.id);
    if (it == hyps.end()) throw Error(ErrorKind::kFormat, "no hypothesis for utterance " + u.id);
    refs.push_back(u.transcript);
    hyp_list.push_back(it->second);
  }
  const auto att = OovAttributedWer(refs, hyp_list);
  json j = {{"split", opt.split}, {"mode", opt.mode}, {"result", WerJson(att.baseline)},
            {"oov_oracle", WerJson(att.oracle)}, {"oov_contribution", att.contribution()}};
  WriteJson(run.Path("eval/" + DecodeStem(opt) + ".json"), j);
  std::cout << std::fixed << std::setprecision(2) << opt.mode << " WER " << 100.0 * att.baseline.wer() << "% ("
            << att.baseline.errors() << "/" << att.baseline.reference_words << "), OOV-attributed "
            << 100.0 * att.contribution() << "%\n";
  run.Commit("eval:" + DecodeStem(opt), {"eval/" + DecodeStem(opt) + ".json"});
}

void ReportCmd(const Run& run) {
  const Corpus c = run.LoadCorpusArtifact();
  const auto vocab = run.LoadVocab();
  const auto cs = run.LoadCharSet();
  const auto model = run.LoadModel(true);
  const auto trie = BuildTrie(run.LoadValidWords(), cs);
  const Decoder decoder{model, vocab, trie, DecodeSettings(run.config())};
  const auto cmp = CompareModes(decoder, c.test);
  auto hotwords = run.LoadHotwords();
  if (hotwords.empty()) hotwords = run.config().corpus.hotwords;
  std::vector<HotwordScore> hot;
  if (!c.hotword.empty() && !hotwords.empty()) hot = ScoreHotwords(decoder, c.hotword, hotwords);
  std::ostringstream md, csv;
  md << "# Synthetic task report\n\nseed " << run.config().seed << ", charset " << run.config().charset
     << ", beam " << run.config().beam_width << ", " << c.test.size() << " test utterances\n\n";
  WriteComparisonMarkdown(md, cmp, hot);
  WriteComparisonCsv(csv, cmp);
  WriteText(run.Path("report.md"), md.str());
  WriteText(run.Path("report.csv"), csv.str());
  std::cout << md.str();
  run.Commit("report", {"report.md", "report.csv"});
}

void PrintError(const std::string& kind, const std::string& command, const std::string& message) {
  std::cerr << json{{"error", kind}, {"command", command}, {"message", message}}.dump() << std::endl;
}

}  // namespace
}  // namespace hyctc

int main(int argc, char** argv) {
  using namespace hyctc;
  CLI::App app{"Hybrid word/character CTC toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--config", opt.config_path, "Experiment config (JSON); default out-dir/config.json, else built-in");
  app.add_option("--seed", opt.seed, "Seed for corpus, initialization and shuffling");
  app.add_option("--beam", opt.beam, "Beam width of the valid-word graph decoder")->check(CLI::PositiveNumber);
  app.add_option("--min-count", opt.min_count, "Words seen fewer times map to <OOV>")->check(CLI::PositiveNumber);
  app.add_option("--charset", opt.charset, "Character unit inventory")->check(CLI::IsMember({"cs28", "cs83"}));
  app.add_option("--row-conv-context", opt.row_conv_context, "Row convolution context C (0 disables)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--out-dir", opt.out_dir, "Run directory")->capture_default_str();

  const std::vector<std::string> modes = {"word-only", "char-max", "char-constrained", "hybrid"};
  auto* gen = app.add_subcommand("gen-corpus", "Generate the synthetic corpus");
  auto* vocab = app.add_subcommand("build-vocab", "Build the word vocabulary, charset and valid-word list");
  auto* tw = app.add_subcommand("train-word", "Train the shared stack and word head");
  auto* tc = app.add_subcommand("train-char", "Freeze the shared stack and train the character head");
  auto* dec = app.add_subcommand("decode", "Decode one split");
  auto* hot = app.add_subcommand("add-hotwords", "Add hot-words to the valid-word list");
  auto* ev = app.add_subcommand("eval", "Score a decoded split");
  auto* rep = app.add_subcommand("report", "Compare all decoding modes; write report.md and report.csv");
  for (auto* sub : {dec, ev}) {
    sub->add_option("--mode", opt.mode, "Decoding mode")->check(CLI::IsMember(modes))->capture_default_str();
    sub->add_option("--split", opt.split, "Corpus split")
        ->check(CLI::IsMember({"train", "test", "hotword"}))
        ->capture_default_str();
  }
  hot->add_option("words", opt.hotwords, "Words to add; default: the config's hot-words");

  std::string command = "hyctc";
  try {
    app.parse(argc, argv);
    for (auto* sub : app.get_subcommands()) command = sub->get_name();
    const Run run(opt);
    if (gen->parsed()) GenCorpus(run);
    else if (vocab->parsed()) BuildVocab(run);
    else if (tw->parsed()) TrainWord(run);
    else if (tc->parsed()) TrainChar(run);
    else if (dec->parsed()) DecodeCmd(run, opt);
    else if (hot->parsed()) AddHotwordsCmd(run, opt.hotwords);
    else if (ev->parsed()) EvalCmd(run, opt);
    else if (rep->parsed()) ReportCmd(run);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    for (auto* sub : app.get_subcommands()) command = sub->get_name();
    PrintError("usage", command, e.what());
    return kExitError;
  } catch (const Error& e) {
    PrintError(std::string(ErrorKindName(e.kind())), command, e.what());
    return kExitError;
  } catch (const nlohmann::json::exception& e) {
    PrintError("format", command, e.what());
    return kExitError;
  } catch (const std::exception& e) {
    PrintError("internal", command, e.what());
    return kExitError;
  }
  return 0;
}

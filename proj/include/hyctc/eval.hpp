// hyctc/eval.hpp

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

#pragma once

#include <algorithm>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hyctc/error.hpp"
#include "hyctc/tokenizer.hpp"

namespace hyctc {

enum class EditOp { kMatch, kSubstitute, kInsert, kDelete };

struct AlignmentStep {
  EditOp op;
  int ref = -1;  // index into the reference, -1 for insertions
  int hyp = -1;  // index into the hypothesis, -1 for deletions
};

/// Silence markers are not words for scoring purposes.
inline Transcript ScoringTokens(const Transcript& words) {
  Transcript out;
  for (const auto& w : words)
    if (w != kSilenceToken) out.push_back(w);
  return out;
}

/// Unit-cost Levenshtein alignment. On equal cost the backtrace prefers the
/// diagonal (match/substitution), then insertion, then deletion.
inline std::vector<AlignmentStep> AlignWords(const Transcript& ref, const Transcript& hyp) {
  const int R = static_cast<int>(ref.size()), H = static_cast<int>(hyp.size());
  std::vector<std::vector<int>> d(R + 1, std::vector<int>(H + 1));
  for (int i = 0; i <= R; ++i) d[i][0] = i;
  for (int j = 0; j <= H; ++j) d[0][j] = j;
  for (int i = 1; i <= R; ++i)
    for (int j = 1; j <= H; ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1), d[i][j - 1] + 1, d[i - 1][j] + 1});

  std::vector<AlignmentStep> steps;
  int i = R, j = H;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (d[i][j] == d[i - 1][j - 1] + (same ? 0 : 1)) {
        steps.push_back({same ? EditOp::kMatch : EditOp::kSubstitute, i - 1, j - 1});
        --i, --j;
        continue;
      }
    }
    if (j > 0 && d[i][j] == d[i][j - 1] + 1) {
      steps.push_back({EditOp::kInsert, -1, j - 1});
      --j;
      continue;
    }
    steps.push_back({EditOp::kDelete, i - 1, -1});
    --i;
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

struct UtteranceErrors {
  int substitutions = 0;
  int insertions = 0;
  int deletions = 0;
  int reference_words = 0;

  int errors() const { return substitutions + insertions + deletions; }
};

struct WerReport {
  int substitutions = 0;
  int insertions = 0;
  int deletions = 0;
  int reference_words = 0;
  std::vector<UtteranceErrors> utterances;

  int errors() const { return substitutions + insertions + deletions; }
  double wer() const {
    if (reference_words == 0) return errors() == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    return static_cast<double>(errors()) / reference_words;
  }
};

inline UtteranceErrors ScoreUtterance(const Transcript& reference, const Transcript& hypothesis) {
  const auto ref = ScoringTokens(reference), hyp = ScoringTokens(hypothesis);
  UtteranceErrors e;
  e.reference_words = static_cast<int>(ref.size());
  for (const auto& s : AlignWords(ref, hyp)) {
    if (s.op == EditOp::kSubstitute) ++e.substitutions;
    else if (s.op == EditOp::kInsert) ++e.insertions;
    else if (s.op == EditOp::kDelete) ++e.deletions;
  }
  return e;
}

inline WerReport Wer(std::span<const Transcript> refs, std::span<const Transcript> hyps) {
  if (refs.size() != hyps.size()) throw Error(ErrorKind::kInvalidInput, "reference and hypothesis counts differ");
  WerReport r;
  for (size_t u = 0; u < refs.size(); ++u) {
    const auto e = ScoreUtterance(refs[u], hyps[u]);
    r.substitutions += e.substitutions;
    r.insertions += e.insertions;
    r.deletions += e.deletions;
    r.reference_words += e.reference_words;
    r.utterances.push_back(e);
  }
  return r;
}

inline WerReport Wer(const Transcript& ref, const Transcript& hyp) {
  return Wer(std::span<const Transcript>(&ref, 1), std::span<const Transcript>(&hyp, 1));
}

struct OovAttribution {
  WerReport baseline;
  WerReport oracle;
  std::vector<Transcript> oracle_hypotheses;

  double baseline_wer() const { return baseline.wer(); }
  double oracle_wer() const { return oracle.wer(); }
  double contribution() const { return baseline_wer() - oracle_wer(); }
};

/// Replaces each OOV marker by the reference word it aligns to; markers
/// aligned as insertions are dropped.
inline Transcript OracleOovHypothesis(const Transcript& reference, const Transcript& hypothesis) {
  const auto ref = ScoringTokens(reference), hyp = ScoringTokens(hypothesis);
  Transcript out;
  for (const auto& s : AlignWords(ref, hyp)) {
    if (s.hyp < 0) continue;
    if (hyp[s.hyp] != kOovToken) out.push_back(hyp[s.hyp]);
    else if (s.ref >= 0) out.push_back(ref[s.ref]);
  }
  return out;
}

inline OovAttribution OovAttributedWer(std::span<const Transcript> refs, std::span<const Transcript> hyps) {
  OovAttribution a;
  a.baseline = Wer(refs, hyps);
  for (size_t u = 0; u < refs.size(); ++u) a.oracle_hypotheses.push_back(OracleOovHypothesis(refs[u], hyps[u]));
  a.oracle = Wer(refs, a.oracle_hypotheses);
  return a;
}

/// Fraction of OOV-attributed error removed; nullopt when nothing was
/// attributable to OOV.
inline std::optional<double> RecoveryRate(double baseline_wer, double hybrid_wer, double oov_contribution) {
  if (oov_contribution == 0.0) return std::nullopt;
  return (baseline_wer - hybrid_wer) / oov_contribution;
}

inline std::optional<double> RecoveryRate(const OovAttribution& word_only, const WerReport& hybrid) {
  return RecoveryRate(word_only.baseline_wer(), hybrid.wer(), word_only.contribution());
}

/// Reference occurrences of `word` that the alignment pairs with an identical
/// hypothesis word.
inline int MatchedOccurrences(const Transcript& reference, const Transcript& hypothesis, const std::string& word) {
  const auto ref = ScoringTokens(reference), hyp = ScoringTokens(hypothesis);
  int n = 0;
  for (const auto& s : AlignWords(ref, hyp))
    if (s.op == EditOp::kMatch && ref[s.ref] == word) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Report tables.

struct SystemRow {
  std::string name;
  WerReport report;
};

inline void WriteWerTable(std::ostream& os, const std::string& caption, std::span<const SystemRow> rows) {
  os << "**" << caption << "**\n\n";
  os << "| Model | WER (%) | S | I | D | Ref words |\n";
  os << "|---|---:|---:|---:|---:|---:|\n";
  os << std::fixed << std::setprecision(2);
  for (const auto& r : rows)
    os << "| " << r.name << " | " << 100.0 * r.report.wer() << " | " << r.report.substitutions << " | "
       << r.report.insertions << " | " << r.report.deletions << " | " << r.report.reference_words << " |\n";
  os << '\n';
  os.unsetf(std::ios::floatfield);
}

inline void WriteWerCsv(std::ostream& os, std::span<const SystemRow> rows) {
  os << "system,wer,substitutions,insertions,deletions,reference_words\n";
  os << std::setprecision(10);
  for (const auto& r : rows)
    os << r.name << ',' << r.report.wer() << ',' << r.report.substitutions << ',' << r.report.insertions << ','
       << r.report.deletions << ',' << r.report.reference_words << '\n';
}

}  // namespace hyctc

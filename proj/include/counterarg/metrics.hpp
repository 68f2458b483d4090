// Copyright 2026 The Counterarg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// ROUGE-2, ROUGE-L and BERTScore.
//
// All scores are in [0, 1]. ROUGE uses counterarg::Tokenize; BERTScore uses
// the embedder's own tokens. BERTScore has no IDF weighting and no baseline
// rescaling.

#ifndef COUNTERARG_METRICS_HPP_
#define COUNTERARG_METRICS_HPP_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "counterarg/modelgw.hpp"

namespace counterarg::metrics {

struct ScorePair {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool operator==(const ScorePair&) const = default;
};

// Harmonic mean, 0 when precision + recall = 0.
ScorePair MakeScore(double precision, double recall);

using Tokens = std::span<const std::string>;

// Clipped bigram overlap. Throws kReferenceTooShort (< 2 reference tokens) or
// kEmptyCandidate (no candidate tokens).
ScorePair rouge2(std::string_view candidate, std::string_view reference);
ScorePair rouge2_tokens(Tokens candidate, Tokens reference);

// LCS F-measure with beta = 1. Throws kEmptyCandidate / kEmptyReference.
ScorePair rouge_l(std::string_view candidate, std::string_view reference);
ScorePair rouge_l_tokens(Tokens candidate, Tokens reference);
std::size_t LcsLength(Tokens a, Tokens b);

// Greedy max-cosine matching; a reference token may serve several candidate
// tokens and vice versa.
ScorePair bert_score(std::string_view candidate, std::string_view reference,
                     modelgw::EmbeddingProvider& embedder);
ScorePair bert_score_vectors(std::span<const modelgw::EmbeddingVector> candidate,
                             std::span<const modelgw::EmbeddingVector> reference);

enum class Metric { kRouge2, kRougeL, kBertScore };
std::string_view MetricName(Metric metric);
// Accepts rouge2, rougeL (or rouge_l) and bertscore.
std::optional<Metric> ParseMetric(std::string_view name);

struct PairScores {
  std::string id;
  std::optional<ScorePair> rouge2;
  std::optional<ScorePair> rouge_l;
  std::optional<ScorePair> bert;
  std::optional<std::string> error;  // set when the pair could not be scored
};

struct CorpusScores {
  std::vector<PairScores> rows;
  // Means over successfully scored rows, keyed "rouge2_f1", "bert_p", ...
  std::map<std::string, double> means;
  std::size_t failures = 0;
};

struct TextPair {
  std::string id;
  std::string candidate;
  std::string reference;
};

// embedder may be null when kBertScore is not requested.
CorpusScores score_corpus(std::span<const TextPair> pairs,
                          std::span<const Metric> metrics,
                          modelgw::EmbeddingProvider* embedder);

// Record form used on disk. Values stay in [0, 1]; the CLI scales ROUGE by
// 100 when printing.
Json pair_scores_to_json(const PairScores& row);
Json corpus_means_to_json(const CorpusScores& scores);

}  // namespace counterarg::metrics

#endif  // COUNTERARG_METRICS_HPP_

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

// Mapping free-text label descriptions onto catalog labels, and multi-label
// classification metrics.

#ifndef COUNTERARG_LABELING_HPP_
#define COUNTERARG_LABELING_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "counterarg/corpus.hpp"
#include "counterarg/modelgw.hpp"

namespace counterarg::labeling {

struct SentenceMatch {
  std::string sentence;
  std::optional<std::string> label;  // empty only when below the floor
  double similarity = 0.0;
};

struct LabelPrediction {
  std::string tweet_id;
  corpus::LabelSet predicted;
  std::vector<SentenceMatch> source_sentences;
};

struct LabelMetrics {
  double f1_macro = 0.0;
  double f1_micro = 0.0;
  double accuracy_per_label_mean = 0.0;
  double accuracy_exact_match = 0.0;
};

// Splits after '.', '!' or '?' when followed by whitespace or end of text.
// Delimiters stay with their sentence; blank segments are dropped.
std::vector<std::string> split_sentences(std::string_view text);

struct MatchOptions {
  // Sentences whose best similarity is below the floor assign no label.
  std::optional<double> floor;
};

// Embeds each sentence and the catalog descriptions with the same embedder and
// assigns each sentence the most similar label; ties go to the earlier label
// in catalog order. Sentences with no tokens are skipped.
// Throws Error(kEmptyGeneration) when no sentence has tokens.
LabelPrediction match_descriptions(std::string_view generated,
                                   const corpus::LabelCatalog& catalog,
                                   modelgw::EmbeddingProvider& embedder,
                                   const MatchOptions& options = {},
                                   std::string tweet_id = {});

struct MetricOptions {
  // Leave labels with no gold and no predicted positives out of the macro
  // average instead of counting them as F1 = 0.
  bool skip_absent = false;
  std::size_t label_count = corpus::kLabelCount;
};

// Throws Error(kLengthMismatch).
LabelMetrics label_metrics(std::span<const corpus::LabelSet> predicted,
                           std::span<const corpus::LabelSet> gold,
                           const MetricOptions& options = {});
LabelMetrics label_metrics(std::span<const LabelPrediction> predictions,
                           std::span<const corpus::LabelSet> gold,
                           const MetricOptions& options = {});

Json prediction_to_json(const LabelPrediction& prediction);
LabelPrediction prediction_from_json(const Json& json);
Json metrics_to_json(const LabelMetrics& metrics);

}  // namespace counterarg::labeling

#endif  // COUNTERARG_LABELING_HPP_

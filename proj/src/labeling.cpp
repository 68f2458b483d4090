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

#include "counterarg/labeling.hpp"

#include <cctype>

#include "counterarg/error.hpp"
#include "counterarg/tokenize.hpp"

namespace counterarg::labeling {

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    std::string s = Trim(text.substr(start, end - start));
    if (!s.empty()) out.push_back(std::move(s));
    start = end;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    const bool at_end = i + 1 == text.size();
    if (at_end || std::isspace(static_cast<unsigned char>(text[i + 1]))) {
      flush(i + 1);
    }
  }
  flush(text.size());
  return out;
}

LabelPrediction match_descriptions(std::string_view generated,
                                   const corpus::LabelCatalog& catalog,
                                   modelgw::EmbeddingProvider& embedder,
                                   const MatchOptions& options,
                                   std::string tweet_id) {
  std::vector<modelgw::EmbeddingVector> label_vectors;
  label_vectors.reserve(catalog.size());
  for (const corpus::ConcernLabel& label : catalog.entries()) {
    label_vectors.push_back(embedder.embed_sentence(label.description));
  }

  LabelPrediction prediction;
  prediction.tweet_id = std::move(tweet_id);
  for (std::string& sentence : split_sentences(generated)) {
    if (Tokenize(sentence).empty()) continue;
    const modelgw::EmbeddingVector v = embedder.embed_sentence(sentence);
    std::size_t best = 0;
    double best_sim = modelgw::Cosine(v, label_vectors[0]);
    for (std::size_t i = 1; i < label_vectors.size(); ++i) {
      const double sim = modelgw::Cosine(v, label_vectors[i]);
      if (sim > best_sim) {
        best = i;
        best_sim = sim;
      }
    }
    SentenceMatch match{std::move(sentence), std::nullopt, best_sim};
    if (!options.floor || best_sim >= *options.floor) {
      match.label = std::string(catalog[best].key);
      prediction.predicted.insert(best);
    }
    prediction.source_sentences.push_back(std::move(match));
  }
  if (prediction.source_sentences.empty()) {
    throw Error(Errc::kEmptyGeneration, "generated description has no sentences");
  }
  return prediction;
}

namespace {

double F1(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

LabelMetrics label_metrics(std::span<const corpus::LabelSet> predicted,
                           std::span<const corpus::LabelSet> gold,
                           const MetricOptions& options) {
  if (predicted.size() != gold.size()) {
    throw Error(Errc::kLengthMismatch,
                std::to_string(predicted.size()) + " predictions vs " +
                    std::to_string(gold.size()) + " gold sets");
  }
  const std::size_t labels = options.label_count;
  if (labels == 0 || labels > 16) {
    throw Error(Errc::kInvalidArgument, "label_count must be in [1, 16]");
  }
  const std::size_t n = gold.size();
  LabelMetrics m;
  if (n == 0) return m;

  std::size_t tp_all = 0, fp_all = 0, fn_all = 0, exact = 0;
  double f1_sum = 0.0, acc_sum = 0.0;
  std::size_t f1_terms = 0;
  for (std::size_t l = 0; l < labels; ++l) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool p = predicted[i].contains(l);
      const bool g = gold[i].contains(l);
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
    }
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
    acc_sum += static_cast<double>(n - fp - fn) / static_cast<double>(n);
    if (options.skip_absent && tp + fp + fn == 0) continue;
    f1_sum += F1(tp, fp, fn);
    ++f1_terms;
  }
  const std::uint16_t mask = static_cast<std::uint16_t>((1u << labels) - 1);
  for (std::size_t i = 0; i < n; ++i) {
    exact += (predicted[i].bits() & mask) == (gold[i].bits() & mask);
  }
  m.f1_macro = f1_terms == 0 ? 0.0 : f1_sum / static_cast<double>(f1_terms);
  m.f1_micro = F1(tp_all, fp_all, fn_all);
  m.accuracy_per_label_mean = acc_sum / static_cast<double>(labels);
  m.accuracy_exact_match = static_cast<double>(exact) / static_cast<double>(n);
  return m;
}

LabelMetrics label_metrics(std::span<const LabelPrediction> predictions,
                           std::span<const corpus::LabelSet> gold,
                           const MetricOptions& options) {
  std::vector<corpus::LabelSet> sets;
  sets.reserve(predictions.size());
  for (const LabelPrediction& p : predictions) sets.push_back(p.predicted);
  return label_metrics(sets, gold, options);
}

Json prediction_to_json(const LabelPrediction& prediction) {
  Json matches = Json::array();
  for (const SentenceMatch& m : prediction.source_sentences) {
    matches.push_back({{"sentence", m.sentence},
                       {"label", m.label ? Json(*m.label) : Json(nullptr)},
                       {"similarity", m.similarity}});
  }
  return Json{{"tweet_id", prediction.tweet_id},
              {"predicted", prediction.predicted.keys()},
              {"matches", std::move(matches)}};
}

LabelPrediction prediction_from_json(const Json& json) {
  LabelPrediction p;
  try {
    p.tweet_id = json.at("tweet_id").get<std::string>();
    p.predicted = corpus::LabelSet::FromKeys(
        json.at("predicted").get<std::vector<std::string>>());
    for (const Json& m : json.value("matches", Json::array())) {
      SentenceMatch sm;
      sm.sentence = m.at("sentence").get<std::string>();
      if (m.contains("label") && m["label"].is_string()) {
        sm.label = m["label"].get<std::string>();
      }
      sm.similarity = m.value("similarity", 0.0);
      p.source_sentences.push_back(std::move(sm));
    }
  } catch (const Json::exception& e) {
    throw Error(Errc::kMalformedRecord, e.what());
  }
  return p;
}

Json metrics_to_json(const LabelMetrics& metrics) {
  return Json{{"f1_macro", metrics.f1_macro},
              {"f1_micro", metrics.f1_micro},
              {"accuracy_per_label_mean", metrics.accuracy_per_label_mean},
              {"accuracy_exact_match", metrics.accuracy_exact_match}};
}

}  // namespace counterarg::labeling

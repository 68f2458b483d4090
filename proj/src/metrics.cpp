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

#include "counterarg/metrics.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "counterarg/error.hpp"
#include "counterarg/tokenize.hpp"

namespace counterarg::metrics {

ScorePair MakeScore(double precision, double recall) {
  const double sum = precision + recall;
  if (sum <= 0) return {precision, recall, 0.0};
  // Equal inputs skip the division so that f1 equals them bit for bit.
  if (precision == recall) return {precision, recall, precision};
  return {precision, recall, 2.0 * precision * recall / sum};
}

ScorePair rouge2_tokens(Tokens candidate, Tokens reference) {
  if (reference.size() < 2) {
    throw Error(Errc::kReferenceTooShort, "reference needs at least 2 tokens");
  }
  if (candidate.empty()) throw Error(Errc::kEmptyCandidate, "empty candidate");

  using Bigram = std::pair<std::string_view, std::string_view>;
  std::map<Bigram, std::size_t> ref_counts;
  for (std::size_t i = 0; i + 1 < reference.size(); ++i) {
    ref_counts[{reference[i], reference[i + 1]}]++;
  }
  std::size_t matches = 0;
  for (std::size_t i = 0; i + 1 < candidate.size(); ++i) {
    auto it = ref_counts.find({candidate[i], candidate[i + 1]});
    if (it != ref_counts.end() && it->second > 0) {
      --it->second;
      ++matches;
    }
  }
  const std::size_t cand_bigrams = candidate.size() - 1;
  const std::size_t ref_bigrams = reference.size() - 1;
  const double precision =
      cand_bigrams == 0 ? 0.0 : static_cast<double>(matches) / cand_bigrams;
  const double recall = static_cast<double>(matches) / ref_bigrams;
  return MakeScore(precision, recall);
}

ScorePair rouge2(std::string_view candidate, std::string_view reference) {
  const auto c = Tokenize(candidate);
  const auto r = Tokenize(reference);
  return rouge2_tokens(c, r);
}

std::size_t LcsLength(Tokens a, Tokens b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

ScorePair rouge_l_tokens(Tokens candidate, Tokens reference) {
  if (candidate.empty()) throw Error(Errc::kEmptyCandidate, "empty candidate");
  if (reference.empty()) throw Error(Errc::kEmptyReference, "empty reference");
  const double lcs = static_cast<double>(LcsLength(candidate, reference));
  return MakeScore(lcs / candidate.size(), lcs / reference.size());
}

ScorePair rouge_l(std::string_view candidate, std::string_view reference) {
  const auto c = Tokenize(candidate);
  const auto r = Tokenize(reference);
  return rouge_l_tokens(c, r);
}

ScorePair bert_score_vectors(std::span<const modelgw::EmbeddingVector> candidate,
                             std::span<const modelgw::EmbeddingVector> reference) {
  if (candidate.empty()) throw Error(Errc::kEmptyCandidate, "empty candidate");
  if (reference.empty()) throw Error(Errc::kEmptyReference, "empty reference");
  // Pairwise cosines are floored at 0, so both sides are 0 exactly when no
  // pair is positively similar.
  std::vector<double> best_for_ref(reference.size(), 0.0);
  double precision_sum = 0.0;
  for (const auto& c : candidate) {
    double best = 0.0;
    for (std::size_t j = 0; j < reference.size(); ++j) {
      const double sim = std::max(0.0, modelgw::Cosine(c, reference[j]));
      best = std::max(best, sim);
      best_for_ref[j] = std::max(best_for_ref[j], sim);
    }
    precision_sum += best;
  }
  double recall_sum = 0.0;
  for (double b : best_for_ref) recall_sum += b;
  return MakeScore(precision_sum / candidate.size(), recall_sum / reference.size());
}

namespace {

std::vector<modelgw::EmbeddingVector> EmbedSide(modelgw::EmbeddingProvider& e,
                                                std::string_view text,
                                                Errc empty_code) {
  if (Trim(text).empty()) throw Error(empty_code, "empty text");
  std::vector<modelgw::TokenEmbedding> toks;
  try {
    toks = e.embed_tokens(text);
  } catch (const Error& err) {
    if (err.code() == Errc::kEmptyText) throw Error(empty_code, err.what());
    throw;
  }
  std::vector<modelgw::EmbeddingVector> out;
  out.reserve(toks.size());
  for (auto& t : toks) out.push_back(std::move(t.vector));
  return out;
}

}  // namespace

ScorePair bert_score(std::string_view candidate, std::string_view reference,
                     modelgw::EmbeddingProvider& embedder) {
  const auto c = EmbedSide(embedder, candidate, Errc::kEmptyCandidate);
  const auto r = EmbedSide(embedder, reference, Errc::kEmptyReference);
  return bert_score_vectors(c, r);
}

std::string_view MetricName(Metric metric) {
  switch (metric) {
    case Metric::kRouge2: return "rouge2";
    case Metric::kRougeL: return "rougeL";
    case Metric::kBertScore: return "bertscore";
  }
  return "unknown";
}

std::optional<Metric> ParseMetric(std::string_view name) {
  if (name == "rouge2") return Metric::kRouge2;
  if (name == "rougeL" || name == "rouge_l") return Metric::kRougeL;
  if (name == "bertscore") return Metric::kBertScore;
  return std::nullopt;
}

CorpusScores score_corpus(std::span<const TextPair> pairs,
                          std::span<const Metric> metrics,
                          modelgw::EmbeddingProvider* embedder) {
  const bool want_bert =
      std::find(metrics.begin(), metrics.end(), Metric::kBertScore) != metrics.end();
  if (want_bert && embedder == nullptr) {
    throw Error(Errc::kProviderUnavailable, "bertscore needs an embedder");
  }
  CorpusScores out;
  std::map<std::string, double> sums;
  std::size_t ok = 0;
  auto add = [&](const std::string& prefix, const ScorePair& s) {
    sums[prefix + "_p"] += s.precision;
    sums[prefix + "_r"] += s.recall;
    sums[prefix + "_f1"] += s.f1;
  };
  for (const TextPair& pair : pairs) {
    PairScores row;
    row.id = pair.id;
    try {
      for (Metric m : metrics) {
        switch (m) {
          case Metric::kRouge2: row.rouge2 = rouge2(pair.candidate, pair.reference); break;
          case Metric::kRougeL: row.rouge_l = rouge_l(pair.candidate, pair.reference); break;
          case Metric::kBertScore:
            row.bert = bert_score(pair.candidate, pair.reference, *embedder);
            break;
        }
      }
    } catch (const Error& e) {
      row = PairScores{pair.id, {}, {}, {}, e.what()};
    }
    if (row.error) {
      ++out.failures;
    } else {
      ++ok;
      if (row.rouge2) add("rouge2", *row.rouge2);
      if (row.rouge_l) add("rougeL", *row.rouge_l);
      if (row.bert) add("bert", *row.bert);
    }
    out.rows.push_back(std::move(row));
  }
  if (ok > 0) {
    for (auto& [k, v] : sums) out.means[k] = v / static_cast<double>(ok);
  }
  return out;
}

namespace {

Json ScoreJson(const ScorePair& s) {
  return Json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

}  // namespace

Json pair_scores_to_json(const PairScores& row) {
  Json j{{"id", row.id}};
  if (row.rouge2) j["rouge2"] = ScoreJson(*row.rouge2);
  if (row.rouge_l) j["rougeL"] = ScoreJson(*row.rouge_l);
  if (row.bert) j["bertscore"] = ScoreJson(*row.bert);
  if (row.error) j["error"] = *row.error;
  return j;
}

Json corpus_means_to_json(const CorpusScores& scores) {
  Json means = Json::object();
  for (const auto& [k, v] : scores.means) means[k] = v;
  return Json{{"pairs", scores.rows.size()},
              {"failures", scores.failures},
              {"means", std::move(means)}};
}

}  // namespace counterarg::metrics

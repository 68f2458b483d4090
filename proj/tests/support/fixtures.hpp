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

// Shared test fixtures and brute-force oracles. The oracles deliberately avoid
// the library's algorithms: they enumerate instead of using DP or maps.

#ifndef COUNTERARG_TESTS_SUPPORT_FIXTURES_HPP_
#define COUNTERARG_TESTS_SUPPORT_FIXTURES_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "counterarg/corpus.hpp"
#include "counterarg/distill.hpp"
#include "counterarg/judge.hpp"
#include "counterarg/labeling.hpp"
#include "counterarg/metrics.hpp"
#include "counterarg/util.hpp"

namespace counterarg::testing {

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Synthetic labelled split of n tweets with ids "<prefix>NNNN". Both strata
// contain every catalog label when n >= 22; about multi_fraction of the tweets
// carry two or three labels.
std::vector<corpus::Tweet> SyntheticTweets(const std::string& prefix, std::size_t n,
                                           corpus::Split split, std::uint64_t seed,
                                           double multi_fraction = 0.45);
corpus::DatasetSplit SyntheticSplit(const std::string& name, std::size_t n,
                                    std::uint64_t seed, double multi_fraction = 0.45);
void WriteDataset(const std::filesystem::path& path, std::span<const corpus::Tweet> tweets);

// Distinct deterministic no-label and label-aware texts for every tweet.
distill::GenerationSets SyntheticGenerations(std::span<const corpus::Tweet> tweets);

std::vector<std::string> RandomTokens(Rng& rng, std::size_t min_len, std::size_t max_len,
                                      std::size_t vocab);
corpus::LabelSet RandomLabelSet(Rng& rng, std::size_t label_count = corpus::kLabelCount);

// ---- oracles

metrics::ScorePair OracleRouge2(std::span<const std::string> candidate,
                                std::span<const std::string> reference);
// Enumerates every subsequence of the shorter side (length <= 16).
std::size_t OracleLcs(std::span<const std::string> a, std::span<const std::string> b);
metrics::ScorePair OracleRougeL(std::span<const std::string> candidate,
                                std::span<const std::string> reference);
metrics::ScorePair OracleBert(std::span<const std::vector<double>> candidate,
                              std::span<const std::vector<double>> reference);
labeling::LabelMetrics OracleLabelMetrics(std::span<const corpus::LabelSet> predicted,
                                          std::span<const corpus::LabelSet> gold,
                                          std::size_t label_count = corpus::kLabelCount,
                                          bool skip_absent = false);

// ---- vote fixtures

// Per-item identity-space choices with B:A counts per the published ratio
// table: 3 x 0:4, 24 x 1:3, 26 x 2:2, 33 x 3:1, 15 x 4:0 (101 items).
std::vector<std::vector<judge::Choice>> PublishedRatioChoices();
inline constexpr std::size_t kPublishedRatioCounts[5] = {3, 24, 26, 33, 15};

// 100 items x 4 votes pooling to 98 A / 222 B / 80 Equal.
std::vector<std::vector<judge::Choice>> PublishedShareChoices();

}  // namespace counterarg::testing

#endif  // COUNTERARG_TESTS_SUPPORT_FIXTURES_HPP_

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

// Labelled tweet corpus: the concern-label taxonomy, dataset ingestion and
// stratified sampling.

#ifndef COUNTERARG_CORPUS_HPP_
#define COUNTERARG_CORPUS_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "counterarg/util.hpp"

namespace counterarg::corpus {

inline constexpr std::size_t kLabelCount = 11;

struct ConcernLabel {
  std::string_view key;
  std::string_view description;
};

// The closed set of eleven concern labels, in their canonical order.
class LabelCatalog {
 public:
  constexpr LabelCatalog(std::array<ConcernLabel, kLabelCount> entries)
      : entries_(entries) {}

  std::span<const ConcernLabel> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const ConcernLabel& operator[](std::size_t index) const {
    return entries_[index];
  }

  std::optional<std::size_t> index_of(std::string_view key) const;
  bool contains(std::string_view key) const {
    return index_of(key).has_value();
  }
  // Throws Error(kUnknownLabel) for keys outside the catalog.
  std::string_view description(std::string_view key) const;

  bool operator==(const LabelCatalog& other) const;

 private:
  std::array<ConcernLabel, kLabelCount> entries_;
};

const LabelCatalog& load_catalog();

// A set of catalog labels stored as a bitmask over catalog indices, so
// iteration is always in catalog order.
class LabelSet {
 public:
  constexpr LabelSet() = default;
  static constexpr LabelSet FromBits(std::uint16_t bits) {
    LabelSet s;
    s.bits_ = bits;
    return s;
  }
  // Throws Error(kUnknownLabel) naming the first bad key.
  static LabelSet FromKeys(std::span<const std::string> keys);

  constexpr void insert(std::size_t index) {
    bits_ |= static_cast<std::uint16_t>(1u << index);
  }
  constexpr bool contains(std::size_t index) const {
    return (bits_ >> index) & 1u;
  }
  bool contains(std::string_view key) const;
  std::size_t size() const;
  bool empty() const { return bits_ == 0; }
  constexpr std::uint16_t bits() const { return bits_; }

  std::vector<std::size_t> indices() const;
  std::vector<std::string> keys() const;

  LabelSet operator|(LabelSet other) const { return FromBits(bits_ | other.bits_); }
  LabelSet operator&(LabelSet other) const { return FromBits(bits_ & other.bits_); }
  bool operator==(const LabelSet&) const = default;

 private:
  std::uint16_t bits_ = 0;
};

enum class Split { kTrain, kTest };

std::string_view SplitName(Split split);
std::optional<Split> ParseSplit(std::string_view name);

struct Tweet {
  std::string id;
  std::string text;
  LabelSet labels;
  Split split = Split::kTrain;

  bool multi_labelled() const { return labels.size() >= 2; }
  bool operator==(const Tweet&) const = default;
};

struct SplitCounts {
  std::size_t total = 0;
  std::size_t single = 0;
  std::size_t multi = 0;
  bool operator==(const SplitCounts&) const = default;
};

// An immutable validated collection of tweets.
class DatasetSplit {
 public:
  DatasetSplit(std::string name, std::vector<Tweet> tweets);

  const std::string& name() const { return name_; }
  std::span<const Tweet> tweets() const { return tweets_; }
  const SplitCounts& counts() const { return counts_; }
  const Tweet* find(std::string_view id) const;

  bool operator==(const DatasetSplit& other) const {
    return name_ == other.name_ && tweets_ == other.tweets_;
  }

 private:
  std::string name_;
  std::vector<Tweet> tweets_;
  SplitCounts counts_;
};

// Record format, one JSON object per line:
//   {"id": "...", "text": "...", "labels": ["conspiracy", ...], "split": "train"}
// "split" may be omitted when split_name itself is "train" or "test".
DatasetSplit ingest(const std::filesystem::path& path,
                    std::string_view split_name);
DatasetSplit ingest_stream(std::istream& in, std::string_view split_name);

Json tweet_to_json(const Tweet& tweet);
void serialize(const DatasetSplit& split, std::ostream& out);
void serialize(const DatasetSplit& split, const std::filesystem::path& path);

// Returns n_multi tweets with >= 2 labels followed by n_single tweets with
// exactly one label. Both strata are drawn from a seeded shuffle of the pool.
// A coverage pass first gives every catalog label one carrier where quotas
// allow; the rest is filled by round-robin over labels in catalog order.
std::vector<Tweet> stratified_sample(const DatasetSplit& split,
                                     std::size_t n_multi, std::size_t n_single,
                                     std::uint64_t seed);

}  // namespace counterarg::corpus

#endif  // COUNTERARG_CORPUS_HPP_

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

#include "counterarg/corpus.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <ostream>
#include <set>

#include "counterarg/error.hpp"

namespace counterarg::corpus {
namespace {

constexpr LabelCatalog kCatalog({{
    {"religious", "Religious beliefs and their influence on views about vaccines"},
    {"political", "The political factors that affect perceptions of vaccine use"},
    {"ingredients", "Concerns about the ingredients and chemical components in vaccines"},
    {"unnecessary", "The importance and necessity of getting vaccinated to prevent diseases"},
    {"conspiracy", "Conspiracy theories suggesting hidden motives behind vaccination efforts"},
    {"mandatory", "The debate over personal choice versus mandates in vaccination policies"},
    {"ineffective", "Evidence and reasons that support the effectiveness of vaccines"},
    {"side-effect", "Potential side effects and adverse reactions associated with vaccines"},
    {"pharma", "The role of pharmaceutical companies and concerns about profit motives"},
    {"rushed", "Claims that vaccines were approved or developed without sufficient testing"},
    {"country", "National biases and objections to vaccines produced by specific countries"},
}});

Error Malformed(std::size_t line, const std::string& what) {
  return Error(Errc::kMalformedRecord,
               "line " + std::to_string(line) + ": " + what)
      .with_line(line);
}

}  // namespace

std::optional<std::size_t> LabelCatalog::index_of(std::string_view key) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].key == key) return i;
  }
  return std::nullopt;
}

std::string_view LabelCatalog::description(std::string_view key) const {
  auto idx = index_of(key);
  if (!idx) throw Error(Errc::kUnknownLabel, std::string(key));
  return entries_[*idx].description;
}

bool LabelCatalog::operator==(const LabelCatalog& other) const {
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    if (entries_[i].key != other.entries_[i].key ||
        entries_[i].description != other.entries_[i].description) {
      return false;
    }
  }
  return true;
}

const LabelCatalog& load_catalog() { return kCatalog; }

LabelSet LabelSet::FromKeys(std::span<const std::string> keys) {
  LabelSet set;
  for (const std::string& key : keys) {
    auto idx = kCatalog.index_of(key);
    if (!idx) throw Error(Errc::kUnknownLabel, key);
    set.insert(*idx);
  }
  return set;
}

bool LabelSet::contains(std::string_view key) const {
  auto idx = kCatalog.index_of(key);
  return idx && contains(*idx);
}

std::size_t LabelSet::size() const {
  return static_cast<std::size_t>(std::popcount(bits_));
}

std::vector<std::size_t> LabelSet::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < 16; ++i) {
    if (contains(i)) out.push_back(i);
  }
  return out;
}

std::vector<std::string> LabelSet::keys() const {
  std::vector<std::string> out;
  for (std::size_t i : indices()) {
    if (i < kLabelCount) out.emplace_back(kCatalog[i].key);
  }
  return out;
}

std::string_view SplitName(Split split) {
  return split == Split::kTrain ? "train" : "test";
}

std::optional<Split> ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

DatasetSplit::DatasetSplit(std::string name, std::vector<Tweet> tweets)
    : name_(std::move(name)), tweets_(std::move(tweets)) {
  counts_.total = tweets_.size();
  for (const Tweet& t : tweets_) {
    (t.multi_labelled() ? counts_.multi : counts_.single)++;
  }
}

const Tweet* DatasetSplit::find(std::string_view id) const {
  for (const Tweet& t : tweets_) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

DatasetSplit ingest_stream(std::istream& in, std::string_view split_name) {
  const std::optional<Split> default_split = ParseSplit(split_name);
  std::vector<Tweet> tweets;
  std::set<std::string, std::less<>> seen;

  ForEachJsonlLine(in, [&](std::size_t line, const Json& rec) {
    if (!rec.is_object()) throw Malformed(line, "record is not an object");
    Tweet tweet;

    auto id = rec.find("id");
    if (id == rec.end()) throw Malformed(line, "missing id");
    if (id->is_string()) {
      tweet.id = id->get<std::string>();
    } else if (id->is_number_integer()) {
      tweet.id = std::to_string(id->get<long long>());
    } else {
      throw Malformed(line, "id must be a string or integer");
    }
    if (tweet.id.empty()) throw Malformed(line, "empty id");
    if (!seen.insert(tweet.id).second) {
      throw Malformed(line, "duplicate id " + tweet.id);
    }

    auto text = rec.find("text");
    if (text == rec.end() || !text->is_string()) {
      throw Malformed(line, "missing text");
    }
    tweet.text = Trim(text->get<std::string>());
    if (tweet.text.empty()) throw Malformed(line, "text is blank");

    auto labels = rec.find("labels");
    if (labels == rec.end() || !labels->is_array()) {
      throw Malformed(line, "missing labels array");
    }
    for (const Json& key : *labels) {
      if (!key.is_string()) throw Malformed(line, "label keys must be strings");
      auto idx = kCatalog.index_of(key.get<std::string>());
      if (!idx) {
        throw Error(Errc::kUnknownLabel,
                    "line " + std::to_string(line) + ": " +
                        key.get<std::string>())
            .with_line(line);
      }
      tweet.labels.insert(*idx);
    }
    if (tweet.labels.empty()) throw Malformed(line, "labels are empty");

    auto split = rec.find("split");
    if (split != rec.end()) {
      std::optional<Split> parsed;
      if (split->is_string()) parsed = ParseSplit(split->get<std::string>());
      if (!parsed) throw Malformed(line, "split must be train or test");
      tweet.split = *parsed;
    } else if (default_split) {
      tweet.split = *default_split;
    } else {
      throw Malformed(line, "missing split");
    }
    tweets.push_back(std::move(tweet));
  });

  if (tweets.empty()) {
    throw Error(Errc::kEmptyDataset, "no records in " + std::string(split_name));
  }
  return DatasetSplit(std::string(split_name), std::move(tweets));
}

DatasetSplit ingest(const std::filesystem::path& path,
                    std::string_view split_name) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kMissingFile, path.string());
  return ingest_stream(in, split_name);
}

Json tweet_to_json(const Tweet& tweet) {
  return Json{{"id", tweet.id},
              {"text", tweet.text},
              {"labels", tweet.labels.keys()},
              {"split", SplitName(tweet.split)}};
}

void serialize(const DatasetSplit& split, std::ostream& out) {
  for (const Tweet& t : split.tweets()) out << tweet_to_json(t).dump() << '\n';
}

void serialize(const DatasetSplit& split, const std::filesystem::path& path) {
  std::vector<Json> rows;
  for (const Tweet& t : split.tweets()) rows.push_back(tweet_to_json(t));
  WriteJsonl(path, rows);
}

namespace {

struct Stratum {
  std::vector<std::size_t> order;  // shuffled indices into the split
  std::size_t quota = 0;
  std::array<std::size_t, kLabelCount> cursor{};
};

}  // namespace

std::vector<Tweet> stratified_sample(const DatasetSplit& split,
                                     std::size_t n_multi, std::size_t n_single,
                                     std::uint64_t seed) {
  const auto tweets = split.tweets();
  std::array<Stratum, 2> strata;  // 0 = multi, 1 = single
  for (std::size_t i = 0; i < tweets.size(); ++i) {
    strata[tweets[i].multi_labelled() ? 0 : 1].order.push_back(i);
  }
  strata[0].quota = n_multi;
  strata[1].quota = n_single;
  for (int s = 0; s < 2; ++s) {
    if (strata[s].order.size() < strata[s].quota) {
      throw Error(Errc::kInsufficientPool,
                  std::string(s == 0 ? "multi" : "single") + " stratum has " +
                      std::to_string(strata[s].order.size()) + ", requested " +
                      std::to_string(strata[s].quota));
    }
  }

  Rng rng(MixSeed(seed, "stratified_sample"));
  for (Stratum& s : strata) Shuffle(s.order, rng);

  std::vector<bool> taken(tweets.size(), false);
  std::array<std::vector<std::size_t>, 2> picked;
  LabelSet covered;

  auto take = [&](int s, std::size_t idx) {
    taken[idx] = true;
    picked[s].push_back(idx);
    strata[s].quota--;
    covered = covered | tweets[idx].labels;
  };
  // Larger remaining quota first; multi wins ties.
  auto stratum_rank = [&](int s) { return strata[s].quota * 2 + (s == 0); };

  // Coverage pass: one carrier for each label not yet represented.
  for (std::size_t label = 0; label < kLabelCount; ++label) {
    if (covered.contains(label)) continue;
    int best_s = -1;
    std::size_t best_idx = 0, best_gain = 0, best_rank = 0;
    for (int s = 0; s < 2; ++s) {
      if (strata[s].quota == 0) continue;
      for (std::size_t idx : strata[s].order) {
        if (taken[idx] || !tweets[idx].labels.contains(label)) continue;
        const std::size_t gain =
            LabelSet::FromBits(tweets[idx].labels.bits() & ~covered.bits())
                .size();
        const std::size_t rank = stratum_rank(s);
        if (best_s < 0 || gain > best_gain ||
            (gain == best_gain && rank > best_rank)) {
          best_s = s;
          best_idx = idx;
          best_gain = gain;
          best_rank = rank;
        }
      }
    }
    if (best_s >= 0) take(best_s, best_idx);
  }

  // Fill pass: round-robin over labels in catalog order.
  std::size_t idle = 0;
  for (std::size_t label = 0; strata[0].quota + strata[1].quota > 0;
       label = (label + 1) % kLabelCount) {
    int chosen = -1;
    for (int s = 0; s < 2; ++s) {
      Stratum& st = strata[s];
      if (st.quota == 0) continue;
      std::size_t& c = st.cursor[label];
      while (c < st.order.size() &&
             (taken[st.order[c]] || !tweets[st.order[c]].labels.contains(label))) {
        ++c;
      }
      if (c == st.order.size()) continue;
      if (chosen < 0 || stratum_rank(s) > stratum_rank(chosen)) chosen = s;
    }
    if (chosen < 0) {
      if (++idle > kLabelCount) {
        throw Error(Errc::kInsufficientPool, "pool exhausted during sampling");
      }
      continue;
    }
    idle = 0;
    take(chosen, strata[chosen].order[strata[chosen].cursor[label]]);
  }

  std::vector<Tweet> out;
  out.reserve(n_multi + n_single);
  for (const auto& p : picked) {
    for (std::size_t idx : p) out.push_back(tweets[idx]);
  }
  return out;
}

}  // namespace counterarg::corpus

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

#include "support/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace counterarg::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::uint64_t counter = 0;
  Rng rng(std::random_device{}());
  path_ = fs::temp_directory_path() /
          ("counterarg-" + tag + "-" + std::to_string(rng() % 1000000007) + "-" +
           std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

namespace {

constexpr const char* kWords[] = {
    "vaccine", "shot",    "jab",    "mandate", "pfizer", "moderna", "trial",   "safe",
    "risk",    "freedom", "choice", "pharma",  "profit", "govt",    "rushed",  "test",
    "heart",   "kids",    "immune", "natural", "spread", "virus",   "booster", "data",
    "fda",     "cdc",     "truth",  "lies",    "money",  "faith",   "god",     "china"};

std::string Sentence(Rng& rng, std::size_t words) {
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += ' ';
    out += kWords[UniformBelow(rng, std::size(kWords))];
  }
  return out;
}

}  // namespace

std::vector<corpus::Tweet> SyntheticTweets(const std::string& prefix, std::size_t n,
                                           corpus::Split split, std::uint64_t seed,
                                           double multi_fraction) {
  Rng rng(MixSeed(seed, "synthetic:" + prefix));
  std::vector<corpus::Tweet> out;
  out.reserve(n);
  const std::uint64_t multi_per_mille = static_cast<std::uint64_t>(multi_fraction * 1000);
  for (std::size_t i = 0; i < n; ++i) {
    corpus::Tweet t;
    char id[32];
    std::snprintf(id, sizeof id, "%s%04zu", prefix.c_str(), i);
    t.id = id;
    t.split = split;
    t.text = Sentence(rng, 6 + UniformBelow(rng, 10)) + " #" + t.id;
    if (i < corpus::kLabelCount) {
      t.labels.insert(i);  // one single-labelled carrier per label
    } else if (i < 2 * corpus::kLabelCount) {
      const std::size_t k = i - corpus::kLabelCount;  // one multi carrier per label
      t.labels.insert(k);
      t.labels.insert((k + 1 + UniformBelow(rng, corpus::kLabelCount - 1)) %
                      corpus::kLabelCount);
    } else {
      t.labels.insert(UniformBelow(rng, corpus::kLabelCount));
      if (UniformBelow(rng, 1000) < multi_per_mille) {
        while (t.labels.size() < 2 + UniformBelow(rng, 2)) {
          t.labels.insert(UniformBelow(rng, corpus::kLabelCount));
        }
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

corpus::DatasetSplit SyntheticSplit(const std::string& name, std::size_t n,
                                    std::uint64_t seed, double multi_fraction) {
  const corpus::Split split = name == "test" ? corpus::Split::kTest : corpus::Split::kTrain;
  return corpus::DatasetSplit(
      name, SyntheticTweets(name == "test" ? "te" : "tr", n, split, seed, multi_fraction));
}

void WriteDataset(const fs::path& path, std::span<const corpus::Tweet> tweets) {
  std::vector<Json> rows;
  for (const auto& t : tweets) rows.push_back(corpus::tweet_to_json(t));
  WriteJsonl(path, rows);
}

distill::GenerationSets SyntheticGenerations(std::span<const corpus::Tweet> tweets) {
  distill::GenerationSets sets;
  for (const auto& t : tweets) {
    sets.no_label[t.id] = "Vaccines are tested carefully, so " + t.id + " misreads the evidence.";
    sets.label_aware[t.id] = "Addressing " + Join(t.labels.keys(), " and ") + ": " + t.id +
                             " overlooks what trials show.";
  }
  return sets;
}

std::vector<std::string> RandomTokens(Rng& rng, std::size_t min_len, std::size_t max_len,
                                      std::size_t vocab) {
  const std::size_t len = min_len + UniformBelow(rng, max_len - min_len + 1);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(std::string(1, static_cast<char>('a' + UniformBelow(rng, vocab))));
  }
  return out;
}

corpus::LabelSet RandomLabelSet(Rng& rng, std::size_t label_count) {
  return corpus::LabelSet::FromBits(
      static_cast<std::uint16_t>(UniformBelow(rng, std::uint64_t{1} << label_count)));
}

// ---- oracles

namespace {

std::size_t CountBigram(std::span<const std::string> seq, const std::string& x,
                        const std::string& y) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
    if (seq[i] == x && seq[i + 1] == y) ++n;
  }
  return n;
}

metrics::ScorePair Harmonic(double p, double r) {
  metrics::ScorePair s{p, r, 0.0};
  if (p + r > 0) s.f1 = p == r ? p : 2.0 * p * r / (p + r);
  return s;
}

bool IsSubsequence(std::span<const std::string> needle, std::span<const std::string> hay) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < hay.size() && j < needle.size(); ++i) {
    if (hay[i] == needle[j]) ++j;
  }
  return j == needle.size();
}

}  // namespace

metrics::ScorePair OracleRouge2(std::span<const std::string> c,
                                std::span<const std::string> r) {
  std::size_t matches = 0;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    // Count each distinct bigram once, at its first occurrence.
    bool seen = false;
    for (std::size_t k = 0; k < i; ++k) {
      if (c[k] == c[i] && c[k + 1] == c[i + 1]) seen = true;
    }
    if (seen) continue;
    matches += std::min(CountBigram(c, c[i], c[i + 1]), CountBigram(r, c[i], c[i + 1]));
  }
  const double p = c.size() < 2 ? 0.0 : static_cast<double>(matches) / (c.size() - 1);
  const double rec = static_cast<double>(matches) / (r.size() - 1);
  return Harmonic(p, rec);
}

std::size_t OracleLcs(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() > b.size()) std::swap(a, b);
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    std::vector<std::string> sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && IsSubsequence(sub, b)) best = sub.size();
  }
  return best;
}

metrics::ScorePair OracleRougeL(std::span<const std::string> c,
                                std::span<const std::string> r) {
  const double l = static_cast<double>(OracleLcs(c, r));
  return Harmonic(l / c.size(), l / r.size());
}

namespace {

double OracleCosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

metrics::ScorePair OracleBert(std::span<const std::vector<double>> c,
                              std::span<const std::vector<double>> r) {
  // Full pairwise similarity matrix, then row and column maxima.
  std::vector<std::vector<double>> sim(c.size(), std::vector<double>(r.size()));
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) sim[i][j] = std::max(0.0, OracleCosine(c[i], r[j]));
  }
  double p = 0, rec = 0;
  for (std::size_t i = 0; i < c.size(); ++i) p += *std::max_element(sim[i].begin(), sim[i].end());
  for (std::size_t j = 0; j < r.size(); ++j) {
    double m = sim[0][j];
    for (std::size_t i = 1; i < c.size(); ++i) m = std::max(m, sim[i][j]);
    rec += m;
  }
  return Harmonic(p / c.size(), rec / r.size());
}

labeling::LabelMetrics OracleLabelMetrics(std::span<const corpus::LabelSet> pred,
                                          std::span<const corpus::LabelSet> gold,
                                          std::size_t label_count, bool skip_absent) {
  // Explicit 2x2 confusion matrix per label: m[label][gold][pred].
  std::vector<std::array<std::array<std::size_t, 2>, 2>> m(label_count);
  for (auto& cm : m) cm = {{{0, 0}, {0, 0}}};
  std::size_t exact = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    bool all = true;
    for (std::size_t l = 0; l < label_count; ++l) {
      const int g = gold[s].contains(l) ? 1 : 0;
      const int p = pred[s].contains(l) ? 1 : 0;
      ++m[l][g][p];
      if (g != p) all = false;
    }
    if (all) ++exact;
  }
  auto f1 = [](double tp, double fp, double fn) {
    return 2 * tp + fp + fn == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
  };
  double macro = 0, acc = 0, tp = 0, fp = 0, fn = 0;
  std::size_t counted = 0;
  for (std::size_t l = 0; l < label_count; ++l) {
    const double ltp = m[l][1][1], lfp = m[l][0][1], lfn = m[l][1][0], ltn = m[l][0][0];
    tp += ltp;
    fp += lfp;
    fn += lfn;
    acc += (ltp + ltn) / pred.size();
    if (skip_absent && ltp + lfp + lfn == 0) continue;
    macro += f1(ltp, lfp, lfn);
    ++counted;
  }
  labeling::LabelMetrics out;
  out.f1_macro = counted ? macro / counted : 0.0;
  out.f1_micro = f1(tp, fp, fn);
  out.accuracy_per_label_mean = acc / label_count;
  out.accuracy_exact_match = static_cast<double>(exact) / pred.size();
  return out;
}

// ---- vote fixtures

std::vector<std::vector<judge::Choice>> PublishedRatioChoices() {
  using judge::Choice;
  std::vector<std::vector<Choice>> items;
  for (std::size_t b = 0; b <= 4; ++b) {
    for (std::size_t n = 0; n < kPublishedRatioCounts[b]; ++n) {
      std::vector<Choice> votes;
      for (std::size_t k = 0; k < 4; ++k) votes.push_back(k < b ? Choice::kB : Choice::kA);
      items.push_back(std::move(votes));
    }
  }
  return items;
}

std::vector<std::vector<judge::Choice>> PublishedShareChoices() {
  using judge::Choice;
  // Deal 98 A, 222 B and 80 Equal ballots round-robin over 100 items.
  std::vector<Choice> pool;
  pool.insert(pool.end(), 98, Choice::kA);
  pool.insert(pool.end(), 222, Choice::kB);
  pool.insert(pool.end(), 80, Choice::kEqual);
  std::vector<std::vector<judge::Choice>> items(100);
  for (std::size_t i = 0; i < pool.size(); ++i) items[i % 100].push_back(pool[i]);
  return items;
}

}  // namespace counterarg::testing

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

#include "counterarg/judge.hpp"

#include <cctype>

#include "counterarg/error.hpp"
#include "counterarg/util.hpp"

namespace counterarg::judge {
namespace {

constexpr std::string_view kJudgeTemplateId = "judge_pairwise";

std::string Upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view ChoiceName(Choice choice) {
  switch (choice) {
    case Choice::kA: return "A";
    case Choice::kB: return "B";
    case Choice::kEqual: return "Equal";
  }
  return "Equal";
}

std::optional<Choice> ParseChoice(std::string_view name) {
  if (name == "A") return Choice::kA;
  if (name == "B") return Choice::kB;
  if (name == "Equal") return Choice::kEqual;
  return std::nullopt;
}

std::string_view RatioBins::Label(std::size_t b_votes) {
  static constexpr std::array<std::string_view, 5> kLabels = {"0:4", "1:3", "2:2",
                                                              "3:1", "4:0"};
  return kLabels.at(b_votes);
}

std::size_t RatioBins::at(std::string_view label) const {
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (Label(k) == label) return counts[k];
  }
  throw Error(Errc::kInvalidArgument, "no ratio bin " + std::string(label));
}

std::size_t RatioBins::total() const {
  std::size_t t = 0;
  for (std::size_t c : counts) t += c;
  return t;
}

std::vector<bool> presentation_orders(std::uint64_t seed, std::string_view item_id,
                                      int runs) {
  Rng rng(MixSeed(seed, item_id));
  std::vector<bool> orders;
  for (int r = 0; r < runs; ++r) orders.push_back((rng() >> 63) == 0);
  return orders;
}

std::string render_judge_prompt(std::string_view tweet_text,
                                std::string_view first_argument,
                                std::string_view second_argument) {
  std::string p =
      "You are comparing two counter-arguments written in response to an "
      "anti-vaccine tweet. Decide which one more effectively addresses the "
      "concerns raised in the tweet, considering comprehensiveness, clarity, "
      "factual accuracy and persuasiveness.\n\n";
  p += "Tweet: ";
  p += tweet_text;
  p += "\n\nCounter-argument 1:\n";
  p += first_argument;
  p += "\n\nCounter-argument 2:\n";
  p += second_argument;
  p +=
      "\n\nExplain your reasoning briefly, then finish with a final line that "
      "is exactly one of:\nVERDICT: 1\nVERDICT: 2\nVERDICT: EQUAL";
  return p;
}

std::optional<Verdict> parse_verdict(std::string_view response) {
  std::optional<Verdict> last;
  std::size_t start = 0;
  while (start <= response.size()) {
    std::size_t end = response.find('\n', start);
    if (end == std::string_view::npos) end = response.size();
    const std::string line = Upper(Trim(response.substr(start, end - start)));
    if (line.rfind("VERDICT:", 0) == 0) {
      const std::string value = Trim(std::string_view(line).substr(8));
      if (value == "1") last = Verdict::kFirst;
      else if (value == "2") last = Verdict::kSecond;
      else if (value == "EQUAL") last = Verdict::kEqual;
    }
    start = end + 1;
  }
  return last;
}

Choice to_identity(Verdict verdict, bool a_shown_first) {
  switch (verdict) {
    case Verdict::kFirst: return a_shown_first ? Choice::kA : Choice::kB;
    case Verdict::kSecond: return a_shown_first ? Choice::kB : Choice::kA;
    case Verdict::kEqual: return Choice::kEqual;
  }
  return Choice::kEqual;
}

std::vector<JudgeVote> judge_pair(std::string_view item_id,
                                  std::string_view tweet_text,
                                  std::string_view arg_a, std::string_view arg_b,
                                  modelgw::Gateway& gateway,
                                  const JudgeOptions& options) {
  if (options.runs < 1) throw Error(Errc::kInvalidArgument, "runs must be >= 1");
  if (Trim(arg_a).empty() || Trim(arg_b).empty()) {
    throw Error(Errc::kInvalidArgument, "both arguments must be non-empty");
  }
  const std::vector<bool> orders =
      presentation_orders(options.seed, item_id, options.runs);

  std::vector<modelgw::GenerationRequest> requests;
  for (int r = 0; r < options.runs; ++r) {
    const bool a_first = orders[r];
    modelgw::GenerationRequest req;
    // The judge prompt is not one of the generation prompt families; it rides
    // in a no_label instance tagged with its own template id.
    req.prompt.variant = {promptkit::PromptKind::kNoLabel, std::string(kJudgeTemplateId)};
    req.prompt.tweet_id = std::string(item_id);
    req.prompt.text = render_judge_prompt(tweet_text, a_first ? arg_a : arg_b,
                                          a_first ? arg_b : arg_a);
    req.model_id = options.model_id;
    req.max_tokens = options.max_tokens;
    req.temperature = options.temperature;
    req.seed = static_cast<std::int64_t>(
        MixSeed(options.seed, std::string(item_id) + "#" + std::to_string(r + 1)) >> 1);
    requests.push_back(std::move(req));
  }

  auto outcomes = gateway.generate_all(requests);
  std::vector<JudgeVote> votes;
  for (int r = 0; r < options.runs; ++r) {
    auto& out = outcomes[r];
    if (out.error) throw *out.error;
    const std::string& raw = out.record->output_text;
    auto verdict = parse_verdict(raw);
    if (!verdict) {
      throw Error(Errc::kUnparseableVerdict,
                  "run " + std::to_string(r + 1) + " of item " + std::string(item_id));
    }
    votes.push_back(JudgeVote{std::string(item_id), r + 1,
                              to_identity(*verdict, orders[r]), orders[r], raw});
  }
  return votes;
}

VoteTally tally_choices(std::string item_id, std::span<const Choice> choices) {
  if (choices.empty()) throw Error(Errc::kInvalidArgument, "no votes to tally");
  VoteTally t;
  t.item_id = std::move(item_id);
  for (Choice c : choices) {
    switch (c) {
      case Choice::kA: ++t.votes_a; break;
      case Choice::kB: ++t.votes_b; break;
      case Choice::kEqual: ++t.votes_equal; break;
    }
  }
  t.outcome = t.votes_a > t.votes_b   ? Choice::kA
              : t.votes_b > t.votes_a ? Choice::kB
                                      : Choice::kEqual;
  return t;
}

VoteTally majority(std::span<const JudgeVote> votes) {
  if (votes.empty()) throw Error(Errc::kInvalidArgument, "no votes to tally");
  std::vector<Choice> choices;
  for (const JudgeVote& v : votes) {
    if (v.item_id != votes.front().item_id) {
      throw Error(Errc::kMixedItems,
                  votes.front().item_id + " vs " + v.item_id);
    }
    choices.push_back(v.choice);
  }
  return tally_choices(votes.front().item_id, choices);
}

RatioBins bin_ratios(std::span<const VoteTally> tallies) {
  RatioBins bins;
  for (const VoteTally& t : tallies) {
    if (t.votes_equal != 0 || t.votes_a + t.votes_b != 4) {
      throw Error(Errc::kBinningUnsupported,
                  "item " + t.item_id + " does not have exactly 4 A/B votes");
    }
    bins.counts[static_cast<std::size_t>(t.votes_b)]++;
  }
  return bins;
}

Shares aggregate_shares(std::span<const VoteTally> tallies) {
  if (tallies.empty()) throw Error(Errc::kInvalidArgument, "no tallies");
  Shares s;
  double a = 0, b = 0, e = 0;
  double oa = 0, ob = 0, oe = 0;
  for (const VoteTally& t : tallies) {
    a += t.votes_a;
    b += t.votes_b;
    e += t.votes_equal;
    (t.outcome == Choice::kA ? oa : t.outcome == Choice::kB ? ob : oe) += 1;
  }
  const double votes = a + b + e;
  if (votes > 0) s.vote_level = {a / votes, b / votes, e / votes};
  const double items = static_cast<double>(tallies.size());
  s.item_level = {oa / items, ob / items, oe / items};
  return s;
}

Json vote_to_json(const JudgeVote& vote) {
  return Json{{"item_id", vote.item_id},
              {"run_index", vote.run_index},
              {"choice", ChoiceName(vote.choice)},
              {"a_shown_first", vote.a_shown_first},
              {"raw_response", vote.raw_response}};
}

JudgeVote vote_from_json(const Json& json) {
  try {
    auto choice = ParseChoice(json.at("choice").get<std::string>());
    if (!choice) throw Error(Errc::kMalformedRecord, "bad choice");
    return JudgeVote{json.at("item_id").get<std::string>(),
                     json.value("run_index", 1), *choice,
                     json.value("a_shown_first", true),
                     json.value("raw_response", std::string{})};
  } catch (const Json::exception& e) {
    throw Error(Errc::kMalformedRecord, e.what());
  }
}

Json tally_to_json(const VoteTally& tally) {
  return Json{{"item_id", tally.item_id},
              {"votes_a", tally.votes_a},
              {"votes_b", tally.votes_b},
              {"votes_equal", tally.votes_equal},
              {"outcome", ChoiceName(tally.outcome)}};
}

VoteTally tally_from_json(const Json& json) {
  try {
    VoteTally t;
    t.item_id = json.at("item_id").get<std::string>();
    t.votes_a = json.at("votes_a").get<int>();
    t.votes_b = json.at("votes_b").get<int>();
    t.votes_equal = json.value("votes_equal", 0);
    auto outcome = ParseChoice(json.value("outcome", std::string{}));
    t.outcome = outcome ? *outcome
                        : (t.votes_a > t.votes_b   ? Choice::kA
                           : t.votes_b > t.votes_a ? Choice::kB
                                                   : Choice::kEqual);
    return t;
  } catch (const Json::exception& e) {
    throw Error(Errc::kMalformedRecord, e.what());
  }
}

Json bins_to_json(const RatioBins& bins) {
  Json j = Json::object();
  for (std::size_t k = 0; k < bins.counts.size(); ++k) {
    j[std::string(RatioBins::Label(k))] = bins.counts[k];
  }
  return j;
}

Json shares_to_json(const Shares& shares) {
  auto triple = [](const ShareTriple& t) {
    return Json{{"a", t.a}, {"b", t.b}, {"equal", t.equal}};
  };
  return Json{{"vote_level", triple(shares.vote_level)},
              {"item_level", triple(shares.item_level)}};
}

}  // namespace counterarg::judge

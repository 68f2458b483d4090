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

// Pairwise preference judging: repeated LLM runs with randomized presentation
// order, majority voting and B:A vote-ratio bins. The tally functions are
// shared with the human survey.

#ifndef COUNTERARG_JUDGE_HPP_
#define COUNTERARG_JUDGE_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "counterarg/corpus.hpp"
#include "counterarg/modelgw.hpp"

namespace counterarg::judge {

// Identity-space choice. A is the no-label argument, B the label-aware one.
enum class Choice { kA, kB, kEqual };

std::string_view ChoiceName(Choice choice);
std::optional<Choice> ParseChoice(std::string_view name);

// Position-space verdict as printed by the judge.
enum class Verdict { kFirst, kSecond, kEqual };

struct JudgeVote {
  std::string item_id;
  int run_index = 1;
  Choice choice = Choice::kEqual;
  bool a_shown_first = true;
  std::string raw_response;
};

struct VoteTally {
  std::string item_id;
  int votes_a = 0;
  int votes_b = 0;
  int votes_equal = 0;
  Choice outcome = Choice::kEqual;
  bool operator==(const VoteTally&) const = default;
};

// Item counts per B:A ratio; index k holds label "k:(4-k)".
struct RatioBins {
  std::array<std::size_t, 5> counts{};

  static std::string_view Label(std::size_t b_votes);
  std::size_t at(std::string_view label) const;
  std::size_t total() const;
  bool operator==(const RatioBins&) const = default;
};

struct ShareTriple {
  double a = 0.0;
  double b = 0.0;
  double equal = 0.0;
};

struct Shares {
  ShareTriple vote_level;  // pooled individual votes; the headline figure
  ShareTriple item_level;  // majority outcomes per item
};

// Presentation order for each run, true = A shown first. Pure in
// (seed, item_id, run index).
std::vector<bool> presentation_orders(std::uint64_t seed, std::string_view item_id,
                                      int runs);

std::string render_judge_prompt(std::string_view tweet_text,
                                std::string_view first_argument,
                                std::string_view second_argument);

// Takes the last line of the form "VERDICT: 1", "VERDICT: 2" or
// "VERDICT: EQUAL" (case-insensitive keyword, surrounding spaces allowed).
std::optional<Verdict> parse_verdict(std::string_view response);

Choice to_identity(Verdict verdict, bool a_shown_first);

struct JudgeOptions {
  std::string model_id;
  int runs = 4;
  std::uint64_t seed = 0;
  int max_tokens = 512;
  double temperature = 0.0;
};

// Issues `runs` judge calls through the gateway (concurrently, within the
// gateway's in-flight limit) and returns identity-space votes in run order.
// Throws kInvalidArgument, kUnparseableVerdict or provider errors.
std::vector<JudgeVote> judge_pair(std::string_view item_id,
                                  std::string_view tweet_text,
                                  std::string_view arg_a, std::string_view arg_b,
                                  modelgw::Gateway& gateway,
                                  const JudgeOptions& options);

// Equal ballots abstain; equal A/B counts give an Equal outcome.
// Throws kInvalidArgument for no votes, kMixedItems for differing item ids.
VoteTally majority(std::span<const JudgeVote> votes);
VoteTally tally_choices(std::string item_id, std::span<const Choice> choices);

// Throws kBinningUnsupported unless every tally has exactly four A/B votes and
// no Equal votes.
RatioBins bin_ratios(std::span<const VoteTally> tallies);

// Throws kInvalidArgument for an empty input.
Shares aggregate_shares(std::span<const VoteTally> tallies);

Json vote_to_json(const JudgeVote& vote);
JudgeVote vote_from_json(const Json& json);
Json tally_to_json(const VoteTally& tally);
VoteTally tally_from_json(const Json& json);
Json bins_to_json(const RatioBins& bins);
Json shares_to_json(const Shares& shares);

}  // namespace counterarg::judge

#endif  // COUNTERARG_JUDGE_HPP_

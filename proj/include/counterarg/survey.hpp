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

// Human pairwise-preference study service.
//
// Each annotator session walks every study item once. For each item the
// session's seeded generator decides which argument is shown on the left; the
// decision is stored server-side under a random 128-bit nonce, and the client
// only ever sees the nonce and the two texts. Votes arrive in position space
// and are resolved to identity space through the stored presentation.
//
// All state changes are appended to an optional line-delimited event log, and
// a service reopened on the same log resumes where it left off.

#ifndef COUNTERARG_SURVEY_HPP_
#define COUNTERARG_SURVEY_HPP_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "counterarg/corpus.hpp"
#include "counterarg/judge.hpp"

namespace counterarg::survey {

// A = no-label argument, B = label-aware argument.
enum class Side { kA, kB };
enum class Position { kLeft, kRight };

std::string_view SideName(Side side);
std::string_view PositionName(Position position);
std::optional<Position> ParsePosition(std::string_view name);

// The identity picked when `position` is chosen and `left_is` was on the left.
Side derandomize(Position position, Side left_is);
// The position at which `identity` was shown.
Position randomize(Side identity, Side left_is);

struct LabelShown {
  std::string key;
  std::string description;
  bool operator==(const LabelShown&) const = default;
};

struct AnnotationItem {
  std::string item_id;
  corpus::Tweet tweet;
  std::vector<LabelShown> labels_shown;
  std::string arg_no_label;
  std::string arg_label_aware;
  bool operator==(const AnnotationItem&) const = default;
};

struct ArgumentPair {
  std::string no_label;
  std::string label_aware;
};

AnnotationItem make_item(const corpus::Tweet& tweet, const ArgumentPair& arguments);

// Stratified sample of the split turned into annotation items, in sample
// order. Throws kMissingGeneration naming the first uncovered tweet.
std::vector<AnnotationItem> build_study(
    const corpus::DatasetSplit& split, std::uint64_t seed, std::size_t n_multi,
    std::size_t n_single, const std::map<std::string, ArgumentPair>& generations);

struct Presentation {
  std::string item_id;
  std::string annotator_id;
  std::string session_id;
  Side left_is = Side::kA;
  std::string nonce;
  std::size_t index = 0;  // 0-based position of the item in the session
};

// What the client sees. Carries no variant identity.
struct ItemView {
  std::string nonce;
  std::string tweet_text;
  std::vector<LabelShown> labels;
  std::string left_text;
  std::string right_text;
  std::size_t progress_index = 0;  // 1-based
  std::size_t progress_total = 0;
};

struct AnnotatorVote {
  std::string item_id;
  std::string annotator_id;
  std::string session_id;
  std::string nonce;
  Position picked_position = Position::kLeft;
  Side picked_identity = Side::kA;
  std::string justification;
  std::int64_t timestamp_ms = 0;
};

struct StudyConfig {
  int annotators_per_item = 4;
  std::uint64_t seed = 0;
};

struct StudyTally {
  std::vector<judge::VoteTally> tallies;
  std::optional<judge::RatioBins> bins;  // absent unless every item has 4 votes
  judge::Shares shares;
};

struct ServiceOptions {
  // Seeds nonce and id generation; random_device when absent.
  std::optional<std::uint64_t> token_seed;
  // Milliseconds since the epoch; system_clock when absent.
  std::function<std::int64_t()> clock;
  // Append-only event log. Existing events are replayed on construction.
  std::optional<std::filesystem::path> log_path;
};

class SurveyService {
 public:
  explicit SurveyService(ServiceOptions options = {});
  ~SurveyService();
  SurveyService(const SurveyService&) = delete;
  SurveyService& operator=(const SurveyService&) = delete;

  // Throws kInvalidArgument for empty or invalid items or a duplicate id.
  std::string create_study(std::vector<AnnotationItem> items, StudyConfig config,
                           std::optional<std::string> study_id = std::nullopt);

  // session_seed defaults to a value derived from the study seed, annotator
  // and session ordinal.
  std::string open_session(std::string_view study_id, std::string annotator_id,
                           std::optional<std::string> stance = std::nullopt,
                           std::optional<std::uint64_t> session_seed = std::nullopt);
  void close_session(std::string_view session_id);

  // Returns the pending presentation again until it is voted on.
  // Throws kNotFound, kSessionClosed or kExhausted.
  std::pair<Presentation, ItemView> next_presentation(std::string_view session_id);

  // Idempotent for a repeated (nonce, position). Throws kNotFound,
  // kSessionClosed, kUnknownNonce, kAlreadyVoted or kInvalidArgument (blank
  // justification).
  AnnotatorVote submit_vote(std::string_view session_id, std::string_view nonce,
                            Position picked_position, std::string justification);

  // Throws kNotFound or kIncompleteStudy listing the items short of votes.
  StudyTally tally_study(std::string_view study_id) const;

  std::vector<AnnotatorVote> votes(std::string_view study_id) const;
  std::vector<Presentation> presentations(std::string_view study_id) const;
  const std::vector<AnnotationItem>& items(std::string_view study_id) const;
  std::vector<std::string> study_ids() const;

 private:
  struct Session;
  struct Study;

  void apply(const Json& event);
  void record(const Json& event);
  std::string fresh_token(std::size_t bytes);
  Study& study_locked(std::string_view id);
  const Study& study_locked(std::string_view id) const;
  Session& session_locked(std::string_view id);
  ItemView view_for(const Study& study, const Presentation& p) const;

  mutable std::mutex mu_;
  ServiceOptions options_;
  Rng token_rng_;
  std::map<std::string, std::unique_ptr<Study>, std::less<>> studies_;
  std::map<std::string, std::unique_ptr<Session>, std::less<>> sessions_;
  std::map<std::string, Presentation, std::less<>> presentations_;  // by nonce
  std::map<std::string, AnnotatorVote, std::less<>> votes_;         // by nonce
  std::ofstream log_;
};

Json item_to_json(const AnnotationItem& item);
AnnotationItem item_from_json(const Json& json);
Json view_to_json(const ItemView& view);
Json study_tally_to_json(const StudyTally& tally);

std::vector<AnnotationItem> read_study_file(const std::filesystem::path& path);
void write_study_file(const std::filesystem::path& path,
                      const std::vector<AnnotationItem>& items);

// HTTP front end. Routes:
//   POST /studies                 {"items": [...], "annotators_per_item", "seed"}
//   POST /studies/{id}/sessions   {"annotator_id", "stance"?, "seed"?}
//   GET  /sessions/{id}/next
//   POST /sessions/{id}/votes     {"nonce", "picked_position", "justification"}
//   POST /sessions/{id}/close
//   GET  /studies/{id}/tally
class HttpServer {
 public:
  explicit HttpServer(SurveyService& service);
  ~HttpServer();

  // Binds and returns the port; port 0 picks a free one.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace counterarg::survey

#endif  // COUNTERARG_SURVEY_HPP_

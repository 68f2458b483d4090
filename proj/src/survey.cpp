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

#include "counterarg/survey.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "counterarg/error.hpp"

namespace counterarg::survey {

std::string_view SideName(Side side) { return side == Side::kA ? "A" : "B"; }

std::string_view PositionName(Position position) {
  return position == Position::kLeft ? "left" : "right";
}

std::optional<Position> ParsePosition(std::string_view name) {
  if (name == "left") return Position::kLeft;
  if (name == "right") return Position::kRight;
  return std::nullopt;
}

namespace {

Side Other(Side s) { return s == Side::kA ? Side::kB : Side::kA; }

std::optional<Side> ParseSide(std::string_view name) {
  if (name == "A") return Side::kA;
  if (name == "B") return Side::kB;
  return std::nullopt;
}

std::vector<LabelShown> LabelsFor(const corpus::Tweet& tweet) {
  const auto& catalog = corpus::load_catalog();
  std::vector<LabelShown> out;
  for (std::size_t idx : tweet.labels.indices()) {
    out.push_back({std::string(catalog[idx].key),
                   std::string(catalog[idx].description)});
  }
  return out;
}

template <typename T>
T Get(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(Errc::kMalformedRecord, std::string("missing or bad field ") + key);
  }
}

}  // namespace

Side derandomize(Position position, Side left_is) {
  return position == Position::kLeft ? left_is : Other(left_is);
}

Position randomize(Side identity, Side left_is) {
  return identity == left_is ? Position::kLeft : Position::kRight;
}

AnnotationItem make_item(const corpus::Tweet& tweet, const ArgumentPair& arguments) {
  return AnnotationItem{tweet.id, tweet, LabelsFor(tweet), arguments.no_label,
                        arguments.label_aware};
}

std::vector<AnnotationItem> build_study(
    const corpus::DatasetSplit& split, std::uint64_t seed, std::size_t n_multi,
    std::size_t n_single, const std::map<std::string, ArgumentPair>& generations) {
  std::vector<AnnotationItem> items;
  for (const corpus::Tweet& tweet :
       corpus::stratified_sample(split, n_multi, n_single, seed)) {
    auto it = generations.find(tweet.id);
    if (it == generations.end() || Trim(it->second.no_label).empty() ||
        Trim(it->second.label_aware).empty()) {
      throw Error(Errc::kMissingGeneration, "no argument pair for tweet " + tweet.id);
    }
    items.push_back(make_item(tweet, it->second));
  }
  return items;
}

struct SurveyService::Study {
  std::string id;
  StudyConfig config;
  std::vector<AnnotationItem> items;
  std::vector<std::string> sessions;
};

struct SurveyService::Session {
  std::string id;
  std::string study_id;
  std::string annotator_id;
  std::optional<std::string> stance;
  std::uint64_t seed = 0;
  Rng rng;
  std::size_t presented = 0;
  std::optional<std::string> pending;  // nonce awaiting a vote
  bool closed = false;
};

SurveyService::SurveyService(ServiceOptions options)
    : options_(std::move(options)),
      token_rng_(options_.token_seed ? *options_.token_seed
                                     : (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^
                                           std::random_device{}()) {
  if (!options_.clock) {
    options_.clock = [] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
  if (options_.log_path) {
    if (std::filesystem::exists(*options_.log_path)) {
      std::ifstream in(*options_.log_path);
      if (!in) throw Error(Errc::kIoFailure, "cannot read " + options_.log_path->string());
      ForEachJsonlLine(in, [&](std::size_t, const Json& event) { apply(event); });
    } else if (options_.log_path->has_parent_path()) {
      std::filesystem::create_directories(options_.log_path->parent_path());
    }
    log_.open(*options_.log_path, std::ios::app | std::ios::binary);
    if (!log_) throw Error(Errc::kIoFailure, "cannot append to " + options_.log_path->string());
  }
}

SurveyService::~SurveyService() = default;

std::string SurveyService::fresh_token(std::size_t bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  for (;;) {
    std::string token;
    for (std::size_t i = 0; i < bytes; i += 8) {
      std::uint64_t x = token_rng_();
      for (std::size_t b = 0; b < 8 && i + b < bytes; ++b, x >>= 8) {
        token += kHex[(x >> 4) & 0xf];
        token += kHex[x & 0xf];
      }
    }
    if (!presentations_.contains(token) && !sessions_.contains(token) &&
        !studies_.contains(token)) {
      return token;
    }
  }
}

void SurveyService::record(const Json& event) {
  if (!log_.is_open()) return;
  log_ << event.dump() << '\n';
  log_.flush();
  if (!log_) throw Error(Errc::kIoFailure, "event log write failed");
}

SurveyService::Study& SurveyService::study_locked(std::string_view id) {
  auto it = studies_.find(id);
  if (it == studies_.end()) throw Error(Errc::kNotFound, "study " + std::string(id));
  return *it->second;
}

const SurveyService::Study& SurveyService::study_locked(std::string_view id) const {
  auto it = studies_.find(id);
  if (it == studies_.end()) throw Error(Errc::kNotFound, "study " + std::string(id));
  return *it->second;
}

SurveyService::Session& SurveyService::session_locked(std::string_view id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(Errc::kNotFound, "session " + std::string(id));
  return *it->second;
}

// Applies one event to in-memory state. Used both live and on replay, so it
// must not draw from token_rng_ or read the clock.
void SurveyService::apply(const Json& event) {
  const std::string kind = Get<std::string>(event, "event");
  if (kind == "study_created") {
    auto study = std::make_unique<Study>();
    study->id = Get<std::string>(event, "study_id");
    const Json& cfg = event.at("config");
    study->config.annotators_per_item = cfg.value("annotators_per_item", 4);
    study->config.seed = cfg.value("seed", std::uint64_t{0});
    for (const Json& item : event.at("items")) study->items.push_back(item_from_json(item));
    studies_[study->id] = std::move(study);
  } else if (kind == "session_opened") {
    auto s = std::make_unique<Session>();
    s->id = Get<std::string>(event, "session_id");
    s->study_id = Get<std::string>(event, "study_id");
    s->annotator_id = Get<std::string>(event, "annotator_id");
    if (event.contains("stance") && event["stance"].is_string()) {
      s->stance = event["stance"].get<std::string>();
    }
    s->seed = Get<std::uint64_t>(event, "seed");
    s->rng.seed(s->seed);
    study_locked(s->study_id).sessions.push_back(s->id);
    sessions_[s->id] = std::move(s);
  } else if (kind == "presentation") {
    Session& s = session_locked(Get<std::string>(event, "session_id"));
    Presentation p;
    p.nonce = Get<std::string>(event, "nonce");
    p.session_id = s.id;
    p.annotator_id = s.annotator_id;
    p.item_id = Get<std::string>(event, "item_id");
    auto left = ParseSide(Get<std::string>(event, "left_is"));
    if (!left) throw Error(Errc::kMalformedRecord, "bad left_is");
    p.left_is = *left;
    p.index = Get<std::size_t>(event, "index");
    s.rng.discard(1);
    s.presented = p.index + 1;
    s.pending = p.nonce;
    presentations_[p.nonce] = std::move(p);
  } else if (kind == "vote") {
    AnnotatorVote v;
    v.nonce = Get<std::string>(event, "nonce");
    auto pit = presentations_.find(v.nonce);
    if (pit == presentations_.end()) throw Error(Errc::kUnknownNonce, v.nonce);
    const Presentation& p = pit->second;
    auto pos = ParsePosition(Get<std::string>(event, "picked_position"));
    if (!pos) throw Error(Errc::kMalformedRecord, "bad picked_position");
    v.item_id = p.item_id;
    v.annotator_id = p.annotator_id;
    v.session_id = p.session_id;
    v.picked_position = *pos;
    v.picked_identity = derandomize(*pos, p.left_is);
    v.justification = Get<std::string>(event, "justification");
    v.timestamp_ms = event.value("timestamp_ms", std::int64_t{0});
    Session& s = session_locked(p.session_id);
    if (s.pending == v.nonce) s.pending.reset();
    votes_[v.nonce] = std::move(v);
  } else if (kind == "session_closed") {
    session_locked(Get<std::string>(event, "session_id")).closed = true;
  } else {
    throw Error(Errc::kMalformedRecord, "unknown event " + kind);
  }
}

std::string SurveyService::create_study(std::vector<AnnotationItem> items,
                                        StudyConfig config,
                                        std::optional<std::string> study_id) {
  if (items.empty()) throw Error(Errc::kInvalidArgument, "study has no items");
  if (config.annotators_per_item < 1) {
    throw Error(Errc::kInvalidArgument, "annotators_per_item must be >= 1");
  }
  std::set<std::string> ids;
  for (const AnnotationItem& item : items) {
    if (item.item_id.empty() || !ids.insert(item.item_id).second) {
      throw Error(Errc::kInvalidArgument, "empty or duplicate item id " + item.item_id);
    }
    if (Trim(item.arg_no_label).empty() || Trim(item.arg_label_aware).empty()) {
      throw Error(Errc::kInvalidArgument, "item " + item.item_id + " lacks an argument");
    }
    if (item.labels_shown != LabelsFor(item.tweet)) {
      throw Error(Errc::kInvalidArgument,
                  "item " + item.item_id + " labels_shown differ from the tweet's labels");
    }
  }
  std::lock_guard lock(mu_);
  std::string id = study_id ? *study_id : "study-" + fresh_token(8);
  if (id.empty() || studies_.contains(id)) {
    throw Error(Errc::kInvalidArgument, "study id " + id + " is empty or taken");
  }
  Json jitems = Json::array();
  for (const AnnotationItem& item : items) jitems.push_back(item_to_json(item));
  Json event{{"event", "study_created"},
             {"study_id", id},
             {"config", {{"annotators_per_item", config.annotators_per_item},
                         {"seed", config.seed}}},
             {"items", std::move(jitems)}};
  apply(event);
  record(event);
  return id;
}

std::string SurveyService::open_session(std::string_view study_id,
                                        std::string annotator_id,
                                        std::optional<std::string> stance,
                                        std::optional<std::uint64_t> session_seed) {
  if (Trim(annotator_id).empty()) {
    throw Error(Errc::kInvalidArgument, "annotator_id is required");
  }
  std::lock_guard lock(mu_);
  const Study& study = study_locked(study_id);
  const std::uint64_t seed =
      session_seed ? *session_seed
                   : MixSeed(study.config.seed,
                             annotator_id + "#" + std::to_string(study.sessions.size()));
  std::string id = "sess-" + fresh_token(16);
  Json event{{"event", "session_opened"},
             {"session_id", id},
             {"study_id", study.id},
             {"annotator_id", std::move(annotator_id)},
             {"stance", stance ? Json(*stance) : Json(nullptr)},
             {"seed", seed}};
  apply(event);
  record(event);
  return id;
}

void SurveyService::close_session(std::string_view session_id) {
  std::lock_guard lock(mu_);
  Session& s = session_locked(session_id);
  if (s.closed) return;
  Json event{{"event", "session_closed"}, {"session_id", s.id}};
  apply(event);
  record(event);
}

ItemView SurveyService::view_for(const Study& study, const Presentation& p) const {
  auto it = std::find_if(study.items.begin(), study.items.end(),
                         [&](const AnnotationItem& i) { return i.item_id == p.item_id; });
  const AnnotationItem& item = *it;
  const std::string& a = item.arg_no_label;
  const std::string& b = item.arg_label_aware;
  ItemView v;
  v.nonce = p.nonce;
  v.tweet_text = item.tweet.text;
  v.labels = item.labels_shown;
  v.left_text = p.left_is == Side::kA ? a : b;
  v.right_text = p.left_is == Side::kA ? b : a;
  v.progress_index = p.index + 1;
  v.progress_total = study.items.size();
  return v;
}

std::pair<Presentation, ItemView> SurveyService::next_presentation(
    std::string_view session_id) {
  std::lock_guard lock(mu_);
  Session& s = session_locked(session_id);
  if (s.closed) throw Error(Errc::kSessionClosed, s.id);
  const Study& study = study_locked(s.study_id);
  if (s.pending) {
    const Presentation& p = presentations_.at(*s.pending);
    return {p, view_for(study, p)};
  }
  if (s.presented >= study.items.size()) {
    throw Error(Errc::kExhausted, "session " + s.id + " has seen every item");
  }
  Rng probe = s.rng;
  const Side left_is = (probe() >> 63) == 0 ? Side::kA : Side::kB;
  const std::string nonce = fresh_token(16);
  Json event{{"event", "presentation"},
             {"nonce", nonce},
             {"session_id", s.id},
             {"item_id", study.items[s.presented].item_id},
             {"left_is", SideName(left_is)},
             {"index", s.presented}};
  apply(event);
  record(event);
  const Presentation& p = presentations_.at(nonce);
  return {p, view_for(study, p)};
}

AnnotatorVote SurveyService::submit_vote(std::string_view session_id,
                                         std::string_view nonce,
                                         Position picked_position,
                                         std::string justification) {
  std::lock_guard lock(mu_);
  Session& s = session_locked(session_id);
  if (s.closed) throw Error(Errc::kSessionClosed, s.id);
  auto pit = presentations_.find(nonce);
  if (pit == presentations_.end() || pit->second.session_id != s.id) {
    throw Error(Errc::kUnknownNonce, "nonce not issued to this session");
  }
  if (auto vit = votes_.find(nonce); vit != votes_.end()) {
    if (vit->second.picked_position == picked_position) return vit->second;
    throw Error(Errc::kAlreadyVoted, "a different choice was already recorded");
  }
  if (Trim(justification).empty()) {
    throw Error(Errc::kInvalidArgument, "justification is required");
  }
  Json event{{"event", "vote"},
             {"nonce", std::string(nonce)},
             {"session_id", s.id},
             {"picked_position", PositionName(picked_position)},
             {"picked_identity", SideName(derandomize(picked_position, pit->second.left_is))},
             {"justification", std::move(justification)},
             {"timestamp_ms", options_.clock()}};
  apply(event);
  record(event);
  return votes_.at(std::string(nonce));
}

StudyTally SurveyService::tally_study(std::string_view study_id) const {
  std::lock_guard lock(mu_);
  const Study& study = study_locked(study_id);
  std::map<std::string, std::vector<judge::Choice>, std::less<>> by_item;
  for (const auto& [nonce, vote] : votes_) {
    const Presentation& p = presentations_.at(nonce);
    const Session& s = *sessions_.at(p.session_id);
    if (s.study_id != study.id) continue;
    by_item[vote.item_id].push_back(vote.picked_identity == Side::kA ? judge::Choice::kA
                                                                     : judge::Choice::kB);
  }
  std::vector<std::string> missing;
  for (const AnnotationItem& item : study.items) {
    auto it = by_item.find(item.item_id);
    const std::size_t have = it == by_item.end() ? 0 : it->second.size();
    if (have < static_cast<std::size_t>(study.config.annotators_per_item)) {
      missing.push_back(item.item_id);
    }
  }
  if (!missing.empty()) {
    throw Error(Errc::kIncompleteStudy,
                std::to_string(missing.size()) + " item(s) short of votes: " +
                    Join(missing, ", "));
  }
  StudyTally out;
  for (const AnnotationItem& item : study.items) {
    out.tallies.push_back(judge::tally_choices(item.item_id, by_item.at(item.item_id)));
  }
  try {
    out.bins = judge::bin_ratios(out.tallies);
  } catch (const Error& e) {
    if (e.code() != Errc::kBinningUnsupported) throw;
  }
  out.shares = judge::aggregate_shares(out.tallies);
  return out;
}

std::vector<AnnotatorVote> SurveyService::votes(std::string_view study_id) const {
  std::lock_guard lock(mu_);
  const Study& study = study_locked(study_id);
  std::vector<AnnotatorVote> out;
  for (const auto& [nonce, vote] : votes_) {
    if (sessions_.at(vote.session_id)->study_id == study.id) out.push_back(vote);
  }
  return out;
}

std::vector<Presentation> SurveyService::presentations(std::string_view study_id) const {
  std::lock_guard lock(mu_);
  const Study& study = study_locked(study_id);
  std::vector<Presentation> out;
  for (const auto& [nonce, p] : presentations_) {
    if (sessions_.at(p.session_id)->study_id == study.id) out.push_back(p);
  }
  return out;
}

const std::vector<AnnotationItem>& SurveyService::items(std::string_view study_id) const {
  std::lock_guard lock(mu_);
  return study_locked(study_id).items;
}

std::vector<std::string> SurveyService::study_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : studies_) out.push_back(id);
  return out;
}

Json item_to_json(const AnnotationItem& item) {
  Json labels = Json::array();
  for (const LabelShown& l : item.labels_shown) {
    labels.push_back({{"key", l.key}, {"description", l.description}});
  }
  return Json{{"item_id", item.item_id},
              {"tweet", corpus::tweet_to_json(item.tweet)},
              {"labels_shown", std::move(labels)},
              {"arg_no_label", item.arg_no_label},
              {"arg_label_aware", item.arg_label_aware}};
}

AnnotationItem item_from_json(const Json& json) {
  AnnotationItem item;
  item.item_id = Get<std::string>(json, "item_id");
  const Json& t = json.at("tweet");
  item.tweet.id = Get<std::string>(t, "id");
  item.tweet.text = Get<std::string>(t, "text");
  item.tweet.labels = corpus::LabelSet::FromKeys(Get<std::vector<std::string>>(t, "labels"));
  auto split = corpus::ParseSplit(t.value("split", std::string("train")));
  if (!split) throw Error(Errc::kMalformedRecord, "bad split in item " + item.item_id);
  item.tweet.split = *split;
  if (json.contains("labels_shown")) {
    for (const Json& l : json["labels_shown"]) {
      item.labels_shown.push_back(
          {Get<std::string>(l, "key"), Get<std::string>(l, "description")});
    }
  } else {
    item.labels_shown = LabelsFor(item.tweet);
  }
  item.arg_no_label = Get<std::string>(json, "arg_no_label");
  item.arg_label_aware = Get<std::string>(json, "arg_label_aware");
  return item;
}

Json view_to_json(const ItemView& view) {
  Json labels = Json::array();
  for (const LabelShown& l : view.labels) {
    labels.push_back({{"key", l.key}, {"description", l.description}});
  }
  return Json{{"status", "item"},
              {"nonce", view.nonce},
              {"tweet", view.tweet_text},
              {"labels", std::move(labels)},
              {"left_text", view.left_text},
              {"right_text", view.right_text},
              {"progress", {{"index", view.progress_index}, {"total", view.progress_total}}}};
}

Json study_tally_to_json(const StudyTally& tally) {
  Json tallies = Json::array();
  for (const auto& t : tally.tallies) tallies.push_back(judge::tally_to_json(t));
  return Json{{"tallies", std::move(tallies)},
              {"bins", tally.bins ? judge::bins_to_json(*tally.bins) : Json(nullptr)},
              {"shares", judge::shares_to_json(tally.shares)}};
}

std::vector<AnnotationItem> read_study_file(const std::filesystem::path& path) {
  std::vector<AnnotationItem> items;
  for (const Json& row : ReadJsonl(path)) items.push_back(item_from_json(row));
  return items;
}

void write_study_file(const std::filesystem::path& path,
                      const std::vector<AnnotationItem>& items) {
  std::vector<Json> rows;
  for (const AnnotationItem& item : items) rows.push_back(item_to_json(item));
  WriteJsonl(path, rows);
}

}  // namespace counterarg::survey

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

#include "counterarg/distill.hpp"

#include <fstream>
#include <sstream>

#include "counterarg/error.hpp"

namespace counterarg::distill {

using promptkit::PromptKind;
using promptkit::PromptVariant;

std::string_view SourceName(TargetSource source) {
  return source == TargetSource::kNoLabel ? "no_label" : "label_aware";
}

ExperimentVariant ExperimentVariant::Builtin(std::string_view id) {
  const PromptVariant no_label{PromptKind::kNoLabel, std::string(promptkit::kBasic)};
  const PromptVariant aware{PromptKind::kLabelAware,
                            std::string(promptkit::kDefaultLabelAware)};
  if (id == "exp1") {
    return {"exp1", no_label, no_label, TargetSource::kNoLabel, TargetSource::kLabelAware};
  }
  if (id == "exp2") {
    return {"exp2", aware, aware, TargetSource::kNoLabel, TargetSource::kLabelAware};
  }
  if (id == "exp3") {
    return {"exp3", aware, aware, TargetSource::kLabelAware, TargetSource::kLabelAware};
  }
  throw Error(Errc::kVariantMisconfigured, "unknown variant " + std::string(id));
}

void ExperimentVariant::validate() const {
  const ExperimentVariant canon = Builtin(id);
  auto fail = [&](const std::string& what) {
    throw Error(Errc::kVariantMisconfigured, id + ": " + what);
  };
  if (train_prompt.kind != canon.train_prompt.kind) fail("train prompt kind");
  if (eval_prompt.kind != canon.eval_prompt.kind) fail("eval prompt kind");
  if (train_source != canon.train_source) fail("train target source");
  if (eval_source != canon.eval_source) fail("eval target source");
  if (train_prompt.template_id.empty() || eval_prompt.template_id.empty()) {
    fail("empty template id");
  }
}

namespace {

promptkit::PromptInstance Render(const PromptVariant& variant, const corpus::Tweet& tweet,
                                 const promptkit::TemplateRegistry& registry) {
  if (variant.kind == PromptKind::kNoLabel) {
    return promptkit::render_no_label(tweet, variant.template_id, registry);
  }
  return promptkit::render_label_aware(tweet, corpus::load_catalog(), variant.template_id,
                                       registry);
}

std::vector<ChatRecord> Build(const std::string& variant_id, const PromptVariant& prompt,
                              TargetSource source, const corpus::DatasetSplit& split,
                              const GenerationSets& generations,
                              const promptkit::TemplateRegistry& registry) {
  const auto& targets = generations.of(source);
  std::vector<ChatRecord> out;
  out.reserve(split.tweets().size());
  for (const corpus::Tweet& tweet : split.tweets()) {
    auto it = targets.find(tweet.id);
    if (it == targets.end() || Trim(it->second).empty()) {
      throw Error(Errc::kMissingGeneration, std::string(SourceName(source)) +
                                                " generation missing for tweet " + tweet.id);
    }
    ChatRecord rec;
    rec.user_text = Render(prompt, tweet, registry).text;
    rec.assistant_text = it->second;
    rec.tweet_id = tweet.id;
    rec.variant = variant_id;
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

Assembly assemble(const ExperimentVariant& variant, const corpus::DatasetSplit& train,
                  const corpus::DatasetSplit& eval, const GenerationSets& generations,
                  const promptkit::TemplateRegistry& registry) {
  variant.validate();
  Assembly out;
  out.train = Build(variant.id, variant.train_prompt, variant.train_source, train,
                    generations, registry);
  out.eval = Build(variant.id, variant.eval_prompt, variant.eval_source, eval, generations,
                   registry);
  return out;
}

Json record_to_json(const ChatRecord& record) {
  return Json{{"messages",
               Json::array({{{"role", "user"}, {"content", record.user_text}},
                            {{"role", "assistant"}, {"content", record.assistant_text}}})},
              {"meta", {{"tweet_id", record.tweet_id}, {"variant", record.variant}}}};
}

ChatRecord record_from_json(const Json& json) {
  try {
    const Json& messages = json.at("messages");
    if (!messages.is_array() || messages.size() != 2 ||
        messages[0].at("role") != "user" || messages[1].at("role") != "assistant") {
      throw Error(Errc::kMalformedRecord, "expected one user turn then one assistant turn");
    }
    ChatRecord rec;
    rec.user_text = messages[0].at("content").get<std::string>();
    rec.assistant_text = messages[1].at("content").get<std::string>();
    rec.tweet_id = json.at("meta").at("tweet_id").get<std::string>();
    rec.variant = json.at("meta").at("variant").get<std::string>();
    return rec;
  } catch (const Json::exception& e) {
    throw Error(Errc::kMalformedRecord, e.what());
  }
}

std::size_t export_chatml(const std::vector<ChatRecord>& records,
                          const std::filesystem::path& path) {
  if (records.empty()) throw Error(Errc::kInvalidArgument, "no records to export");
  std::ostringstream out;
  for (const ChatRecord& rec : records) {
    if (Trim(rec.user_text).empty() || Trim(rec.assistant_text).empty()) {
      throw Error(Errc::kInvalidArgument, "empty turn in record for tweet " + rec.tweet_id);
    }
    out << record_to_json(rec).dump() << '\n';
  }
  WriteText(path, out.str());
  return records.size();
}

std::vector<ChatRecord> import_chatml(const std::filesystem::path& path) {
  std::vector<ChatRecord> out;
  for (const Json& row : ReadJsonl(path)) out.push_back(record_from_json(row));
  return out;
}

}  // namespace counterarg::distill

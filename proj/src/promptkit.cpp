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

#include "counterarg/promptkit.hpp"

#include <cctype>

#include "counterarg/error.hpp"

namespace counterarg::promptkit {
namespace {

constexpr std::string_view kCotPreamble =
    "You are an expert in analyzing social media content and generating "
    "counter-arguments to misinformation. Follow these steps:\n"
    "1. Step 1: Analyze the main themes or issues discussed in the tweet. "
    "Based on your analysis, assign relevant labels that describe the "
    "misinformation topics involved. Choose the most appropriate labels from "
    "the following list: {label_list}\n";

constexpr std::string_view kCotZeroShotStep2 =
    "2. Step 2: Using the labels and the content of the tweet, generate a "
    "clear, evidence-based counter-argument that addresses the claims in the "
    "tweet.\n"
    "Tweet: {tweet}\n"
    "Your response:\n"
    "1. Labels:\n"
    "2. Counter-argument:";

constexpr std::string_view kCotFewShotStep2 =
    "2. Step 2: Using the insights from the labels, craft a well-reasoned and "
    "persuasive counter-argument that respectfully addresses the concerns "
    "raised in the tweet, corrects misinformation, and promotes scientific "
    "understanding.\n"
    "{examples}"
    "Your Response:\n"
    "Tweet: {tweet}\n"
    "1. Labels:\n"
    "2. Counter-argument:";

constexpr std::string_view kLabelPredictionText =
    "Instruction: First read the task description. There could be multiple "
    "category descriptions for a tweet.\n"
    "Task: Multi-label Text Classification\n"
    "Description: Generate label description for the given texts.\n"
    "Tweet: {tweet}";

bool IsMarkerChar(char c) {
  return (c >= 'a' && c <= 'z') || c == '_' || (c >= '0' && c <= '9');
}

std::string ListLabels(std::span<const std::string> keys) {
  return "[" + Join(keys, ", ") + "]";
}

const Template& Expect(const TemplateRegistry& registry, std::string_view id,
                       PromptKind kind) {
  const Template& t = registry.get(id);
  if (t.kind != kind) {
    throw Error(Errc::kUnknownTemplate,
                "template " + std::string(id) + " is " +
                    std::string(KindName(t.kind)) + ", not " +
                    std::string(KindName(kind)));
  }
  return t;
}

}  // namespace

std::string_view KindName(PromptKind kind) {
  switch (kind) {
    case PromptKind::kNoLabel: return "no_label";
    case PromptKind::kLabelAware: return "label_aware";
    case PromptKind::kCotZeroShot: return "cot_zero_shot";
    case PromptKind::kCotFewShot: return "cot_few_shot";
    case PromptKind::kLabelPrediction: return "label_prediction";
  }
  return "unknown";
}

std::optional<PromptKind> ParseKind(std::string_view name) {
  for (PromptKind k :
       {PromptKind::kNoLabel, PromptKind::kLabelAware, PromptKind::kCotZeroShot,
        PromptKind::kCotFewShot, PromptKind::kLabelPrediction}) {
    if (KindName(k) == name) return k;
  }
  return std::nullopt;
}

TemplateRegistry::TemplateRegistry() {
  add(std::string(kBasic),
      {PromptKind::kNoLabel,
       "Generate a strong counter-argument for the tweet: {tweet}"});
  add(std::string(kTable),
      {PromptKind::kNoLabel,
       "Generate a strong counter-argument for the tweet.\n\nTweet: {tweet}"});
  add(std::string(kDiscuss),
      {PromptKind::kLabelAware,
       "Generate a strong counter-argument for the tweet: {tweet}. "
       "Discuss {descriptions}"});
  add(std::string(kTalkAbout),
      {PromptKind::kLabelAware,
       "Generate a strong counter-argument for the tweet. "
       "Talk about {descriptions}.\n\nTweet: {tweet}"});
  add(std::string(kCotZeroShotId),
      {PromptKind::kCotZeroShot,
       std::string(kCotPreamble) + std::string(kCotZeroShotStep2)});
  add(std::string(kCotFewShotId),
      {PromptKind::kCotFewShot,
       std::string(kCotPreamble) + std::string(kCotFewShotStep2)});
  add(std::string(kLabelPredictionId),
      {PromptKind::kLabelPrediction, std::string(kLabelPredictionText)});
}

const TemplateRegistry& TemplateRegistry::builtin() {
  static const TemplateRegistry registry;
  return registry;
}

void TemplateRegistry::add(std::string id, Template tmpl) {
  templates_.insert_or_assign(std::move(id), std::move(tmpl));
}

void TemplateRegistry::load_file(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = Json::parse(ReadText(path));
  } catch (const Json::exception& e) {
    throw Error(Errc::kConfigInvalid, path.string() + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw Error(Errc::kConfigInvalid, path.string() + ": expected an object");
  }
  for (const auto& [id, entry] : doc.items()) {
    auto kind = ParseKind(entry.value("kind", ""));
    if (!kind || !entry.contains("text") || !entry["text"].is_string()) {
      throw Error(Errc::kConfigInvalid, "template " + id + " needs kind and text");
    }
    add(id, {*kind, entry["text"].get<std::string>()});
  }
}

const Template& TemplateRegistry::get(std::string_view id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) {
    throw Error(Errc::kUnknownTemplate, std::string(id));
  }
  return it->second;
}

bool TemplateRegistry::contains(std::string_view id) const {
  return templates_.find(id) != templates_.end();
}

std::vector<std::string> TemplateRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : templates_) out.push_back(id);
  return out;
}

std::string Substitute(
    std::string_view text,
    const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      std::size_t j = i + 1;
      while (j < text.size() && IsMarkerChar(text[j])) ++j;
      if (j < text.size() && text[j] == '}' && j > i + 1) {
        std::string_view name = text.substr(i + 1, j - i - 1);
        auto it = values.find(name);
        if (it == values.end()) {
          throw Error(Errc::kInvalidArgument,
                      "no value for placeholder {" + std::string(name) + "}");
        }
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

std::string JoinDescriptions(const corpus::LabelSet& labels,
                             const corpus::LabelCatalog& catalog) {
  std::vector<std::string> parts;
  for (std::size_t idx : labels.indices()) {
    parts.push_back(LowerFirst(catalog[idx].description));
  }
  return Join(parts, " and ");
}

PromptInstance render_no_label(const corpus::Tweet& tweet,
                               std::string_view template_id,
                               const TemplateRegistry& registry) {
  const Template& t = Expect(registry, template_id, PromptKind::kNoLabel);
  PromptInstance p;
  p.variant = {PromptKind::kNoLabel, std::string(template_id)};
  p.tweet_id = tweet.id;
  p.text = Substitute(t.text, {{"tweet", tweet.text}});
  return p;
}

PromptInstance render_label_aware(const corpus::Tweet& tweet,
                                  const corpus::LabelCatalog& catalog,
                                  std::string_view template_id,
                                  const TemplateRegistry& registry) {
  if (tweet.labels.empty()) {
    throw Error(Errc::kUnknownLabel, "tweet " + tweet.id + " has no labels");
  }
  const Template& t = Expect(registry, template_id, PromptKind::kLabelAware);
  PromptInstance p;
  p.variant = {PromptKind::kLabelAware, std::string(template_id)};
  p.tweet_id = tweet.id;
  for (std::size_t idx : tweet.labels.indices()) {
    if (idx >= catalog.size()) {
      throw Error(Errc::kUnknownLabel, "label index " + std::to_string(idx));
    }
    p.used_labels.emplace_back(catalog[idx].key);
  }
  p.text = Substitute(t.text, {{"tweet", tweet.text},
                               {"descriptions", JoinDescriptions(tweet.labels, catalog)}});
  return p;
}

PromptInstance render_cot(const corpus::Tweet& tweet, CotMode mode,
                          std::span<const std::string> label_keys,
                          std::span<const CotExample> examples,
                          const TemplateRegistry& registry) {
  PromptInstance p;
  p.tweet_id = tweet.id;
  std::map<std::string, std::string, std::less<>> values{
      {"tweet", tweet.text}, {"label_list", ListLabels(label_keys)}};

  if (mode == CotMode::kZeroShot) {
    p.variant = {PromptKind::kCotZeroShot, std::string(kCotZeroShotId)};
  } else {
    if (examples.empty()) {
      throw Error(Errc::kMissingExamples, "few-shot prompt needs examples");
    }
    p.variant = {PromptKind::kCotFewShot, std::string(kCotFewShotId)};
    std::string block;
    for (std::size_t k = 0; k < examples.size(); ++k) {
      const CotExample& ex = examples[k];
      block += "Example " + std::to_string(k + 1) + ":\n";
      block += "Tweet: \"" + ex.tweet_text + "\"\n";
      block += "1. Labels - " + ListLabels(ex.labels) + "\n";
      block += "2. Counter-Argument - " + ex.counter_argument + "\n";
    }
    values["examples"] = std::move(block);
    p.few_shot_examples = examples.size();
  }
  const Template& t =
      Expect(registry, p.variant.template_id, p.variant.kind);
  p.text = Substitute(t.text, values);
  return p;
}

PromptInstance render_label_prediction(const corpus::Tweet& tweet,
                                       const TemplateRegistry& registry) {
  const Template& t =
      Expect(registry, kLabelPredictionId, PromptKind::kLabelPrediction);
  PromptInstance p;
  p.variant = {PromptKind::kLabelPrediction, std::string(kLabelPredictionId)};
  p.tweet_id = tweet.id;
  p.text = Substitute(t.text, {{"tweet", tweet.text}});
  return p;
}

Json prompt_to_json(const PromptInstance& prompt) {
  return Json{{"tweet_id", prompt.tweet_id},
              {"kind", KindName(prompt.variant.kind)},
              {"template_id", prompt.variant.template_id},
              {"text", prompt.text},
              {"used_labels", prompt.used_labels},
              {"few_shot_examples", prompt.few_shot_examples}};
}

PromptInstance prompt_from_json(const Json& json) {
  PromptInstance p;
  try {
    auto kind = ParseKind(json.at("kind").get<std::string>());
    if (!kind) throw Error(Errc::kMalformedRecord, "unknown prompt kind");
    p.variant = {*kind, json.at("template_id").get<std::string>()};
    p.tweet_id = json.at("tweet_id").get<std::string>();
    p.text = json.at("text").get<std::string>();
    p.used_labels = json.value("used_labels", std::vector<std::string>{});
    p.few_shot_examples = json.value("few_shot_examples", std::size_t{0});
  } catch (const Json::exception& e) {
    throw Error(Errc::kMalformedRecord, e.what());
  }
  return p;
}

}  // namespace counterarg::promptkit

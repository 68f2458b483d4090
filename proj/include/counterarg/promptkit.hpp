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

// Deterministic prompt rendering for counter-argument generation, CoT label
// inference and label-description prediction.
//
// Templates are named text resources with the placeholders {tweet},
// {descriptions}, {label_list} and {examples}. Substituted values are never
// rescanned, so a tweet containing "{tweet}" renders literally.

#ifndef COUNTERARG_PROMPTKIT_HPP_
#define COUNTERARG_PROMPTKIT_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "counterarg/corpus.hpp"

namespace counterarg::promptkit {

enum class PromptKind {
  kNoLabel,
  kLabelAware,
  kCotZeroShot,
  kCotFewShot,
  kLabelPrediction,
};

std::string_view KindName(PromptKind kind);
std::optional<PromptKind> ParseKind(std::string_view name);

struct PromptVariant {
  PromptKind kind = PromptKind::kNoLabel;
  std::string template_id;
  bool operator==(const PromptVariant&) const = default;
};

struct PromptInstance {
  PromptVariant variant;
  std::string tweet_id;
  std::string text;
  std::vector<std::string> used_labels;
  std::size_t few_shot_examples = 0;
  bool operator==(const PromptInstance&) const = default;
};

// Built-in template ids.
inline constexpr std::string_view kBasic = "basic";
inline constexpr std::string_view kTable = "table";
inline constexpr std::string_view kDiscuss = "discuss";
inline constexpr std::string_view kTalkAbout = "talk_about";
inline constexpr std::string_view kCotZeroShotId = "cot_zero_shot";
inline constexpr std::string_view kCotFewShotId = "cot_few_shot";
inline constexpr std::string_view kLabelPredictionId = "label_prediction";

inline constexpr std::string_view kDefaultLabelAware = kTalkAbout;

struct Template {
  PromptKind kind;
  std::string text;
};

// Named templates. The built-ins are always present; more can be added from
// a JSON file of the form {"id": {"kind": "label_aware", "text": "..."}}.
class TemplateRegistry {
 public:
  TemplateRegistry();

  static const TemplateRegistry& builtin();

  void add(std::string id, Template tmpl);
  void load_file(const std::filesystem::path& path);

  // Throws Error(kUnknownTemplate).
  const Template& get(std::string_view id) const;
  bool contains(std::string_view id) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, Template, std::less<>> templates_;
};

// Substitutes {name} markers from values in a single left-to-right pass.
// Throws Error(kInvalidArgument) for a marker with no value.
std::string Substitute(std::string_view text,
                       const std::map<std::string, std::string, std::less<>>& values);

// Descriptions of the given labels in catalog order, first letter lowered,
// joined with " and ".
std::string JoinDescriptions(const corpus::LabelSet& labels,
                             const corpus::LabelCatalog& catalog);

PromptInstance render_no_label(
    const corpus::Tweet& tweet, std::string_view template_id = kBasic,
    const TemplateRegistry& registry = TemplateRegistry::builtin());

// Throws Error(kUnknownLabel) for an empty label set.
PromptInstance render_label_aware(
    const corpus::Tweet& tweet, const corpus::LabelCatalog& catalog,
    std::string_view template_id = kDefaultLabelAware,
    const TemplateRegistry& registry = TemplateRegistry::builtin());

enum class CotMode { kZeroShot, kFewShot };

struct CotExample {
  std::string tweet_text;
  std::vector<std::string> labels;
  std::string counter_argument;
};

// Throws Error(kMissingExamples) in few-shot mode without examples.
PromptInstance render_cot(
    const corpus::Tweet& tweet, CotMode mode,
    std::span<const std::string> label_keys,
    std::span<const CotExample> examples = {},
    const TemplateRegistry& registry = TemplateRegistry::builtin());

PromptInstance render_label_prediction(
    const corpus::Tweet& tweet,
    const TemplateRegistry& registry = TemplateRegistry::builtin());

Json prompt_to_json(const PromptInstance& prompt);
PromptInstance prompt_from_json(const Json& json);

}  // namespace counterarg::promptkit

#endif  // COUNTERARG_PROMPTKIT_HPP_

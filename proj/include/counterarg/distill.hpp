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

// Fine-tuning dataset assembly for the three distillation experiments and
// ChatML-style export. See docs/chatml_format.md for the wire format.

#ifndef COUNTERARG_DISTILL_HPP_
#define COUNTERARG_DISTILL_HPP_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "counterarg/corpus.hpp"
#include "counterarg/promptkit.hpp"

namespace counterarg::distill {

// Which generation set supplies the assistant targets.
enum class TargetSource { kNoLabel, kLabelAware };

std::string_view SourceName(TargetSource source);

struct ExperimentVariant {
  std::string id;  // exp1, exp2 or exp3
  promptkit::PromptVariant train_prompt;
  promptkit::PromptVariant eval_prompt;
  TargetSource train_source = TargetSource::kNoLabel;
  TargetSource eval_source = TargetSource::kLabelAware;

  // The canonical configuration for exp1, exp2 or exp3.
  // Throws kVariantMisconfigured for any other id.
  static ExperimentVariant Builtin(std::string_view id);

  // Throws kVariantMisconfigured when the prompts or sources disagree with the
  // canonical pairing for the id. Template ids may differ from the defaults as
  // long as their kinds match.
  void validate() const;
};

struct ChatRecord {
  std::string user_text;
  std::string assistant_text;
  std::string tweet_id;
  std::string variant;
  bool operator==(const ChatRecord&) const = default;
};

// Generated counter-arguments keyed by tweet id, one map per prompt set.
struct GenerationSets {
  std::map<std::string, std::string, std::less<>> no_label;
  std::map<std::string, std::string, std::less<>> label_aware;

  const std::map<std::string, std::string, std::less<>>& of(TargetSource source) const {
    return source == TargetSource::kNoLabel ? no_label : label_aware;
  }
};

struct Assembly {
  std::vector<ChatRecord> train;
  std::vector<ChatRecord> eval;
};

// One record per tweet of each split, in split order. Throws
// kMissingGeneration (empty or absent target) or kVariantMisconfigured.
Assembly assemble(const ExperimentVariant& variant, const corpus::DatasetSplit& train,
                  const corpus::DatasetSplit& eval, const GenerationSets& generations,
                  const promptkit::TemplateRegistry& registry =
                      promptkit::TemplateRegistry::builtin());

Json record_to_json(const ChatRecord& record);
ChatRecord record_from_json(const Json& json);

// Returns the number of lines written. Throws kInvalidArgument for an empty or
// invalid record set and kIoFailure on write errors.
std::size_t export_chatml(const std::vector<ChatRecord>& records,
                          const std::filesystem::path& path);
std::vector<ChatRecord> import_chatml(const std::filesystem::path& path);

}  // namespace counterarg::distill

#endif  // COUNTERARG_DISTILL_HPP_

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

// End-to-end pipeline: ingest -> prompt -> generate -> label -> score ->
// judge -> survey -> distill, driven by a JSON run configuration.
//
// Every stage writes its outputs under <output_dir>/<stage>/ together with a
// summary.json and a .stamp holding the SHA-256 of the stage's configuration
// and upstream stamps. A stage whose stamp matches is skipped on rerun. Only
// deterministic content is persisted; wall-clock timings stay in memory.

#ifndef COUNTERARG_PIPELINE_HPP_
#define COUNTERARG_PIPELINE_HPP_

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "counterarg/metrics.hpp"
#include "counterarg/modelgw.hpp"

namespace counterarg::pipeline {

enum class Stage { kIngest, kPrompt, kGenerate, kLabel, kScore, kJudge, kSurvey, kDistill };

inline constexpr std::array<Stage, 8> kAllStages = {
    Stage::kIngest, Stage::kPrompt, Stage::kGenerate, Stage::kLabel,
    Stage::kScore,  Stage::kJudge,  Stage::kSurvey,   Stage::kDistill};

std::string_view StageName(Stage stage);
std::optional<Stage> ParseStage(std::string_view name);
// Direct upstream stages.
std::vector<Stage> StageDependencies(Stage stage);

struct ProviderConfig {
  std::string id;
  std::string type;  // mock_echo, mock_choice, mock_scripted, openai_chat,
                     // openai_embed, hash_embedder, onehot_catalog
  Json options = Json::object();
  double requests_per_second = 0;

  bool is_text() const;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";
  std::size_t concurrency = 4;
  modelgw::RetryPolicy retry;

  std::filesystem::path train_path;
  std::optional<std::filesystem::path> test_path;

  std::string no_label_template = "basic";
  std::string label_aware_template = "talk_about";
  std::optional<std::filesystem::path> templates_file;

  std::vector<ProviderConfig> providers;

  struct Generation {
    std::string model;
    int max_tokens = 512;
    double temperature = 0.0;
  } generation;

  struct Labeling {
    std::string model;     // text model producing label descriptions
    std::string embedder;  // embedding model for description matching
    std::optional<double> floor;
    bool skip_absent = false;
  } labeling;

  struct Scoring {
    std::vector<metrics::Metric> metrics{metrics::Metric::kRouge2, metrics::Metric::kRougeL,
                                         metrics::Metric::kBertScore};
    std::string embedder;
    std::string candidate = "no_label";   // which variant is scored
    std::string reference = "label_aware";
  } scoring;

  struct Judge {
    std::string model;
    int runs = 4;
  } judge;

  struct Survey {
    std::string split = "test";
    std::size_t n_multi = 60;
    std::size_t n_single = 40;
  } survey;

  struct Distill {
    std::vector<std::string> variants{"exp1", "exp2", "exp3"};
  } distill;

  // Requested stages; their upstream stages are added automatically.
  std::vector<Stage> stages{kAllStages.begin(), kAllStages.end()};

  // Relative paths in the file are resolved against base_dir.
  static RunConfig FromJson(const Json& json, const std::filesystem::path& base_dir = {});
  static RunConfig Load(const std::filesystem::path& path);

  // Throws Error(kConfigInvalid) naming the offending field, path, template
  // or provider id.
  void validate() const;

  // Requested stages plus their dependencies, in pipeline order.
  std::vector<Stage> planned_stages() const;
};

struct Failure {
  std::string stage;
  std::string item_id;
  std::string error;
  bool operator==(const Failure&) const = default;
};

struct StageReport {
  std::string stage;
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<Failure> failures;
  std::map<std::string, double> means;
  // Not persisted.
  std::chrono::milliseconds wall{0};
  bool resumed = false;
};

struct RunReport {
  std::vector<StageReport> stages;

  const StageReport* find(std::string_view stage) const;
  std::vector<Failure> failures() const;
  // Persisted form; excludes timings and resume flags.
  Json to_json() const;
};

struct RunOptions {
  // Replaces retry sleeps, e.g. with a no-op in tests.
  modelgw::Gateway::Sleeper sleeper;
  // Providers registered on top of (or instead of) the configured ones.
  std::map<std::string, std::shared_ptr<modelgw::TextProvider>> text_overrides;
  // Progress lines; null for silence.
  std::ostream* log = nullptr;
};

// Builds the provider named by `config` (throws kConfigInvalid for an unknown
// type or missing option).
std::shared_ptr<modelgw::TextProvider> MakeTextProvider(const ProviderConfig& config);
std::shared_ptr<modelgw::EmbeddingProvider> MakeEmbeddingProvider(
    const ProviderConfig& config);

// Validates, executes the planned stages and writes <output_dir>/report.json.
// Throws kConfigInvalid or kStageFailed ("stage: cause").
RunReport run(const RunConfig& config, const RunOptions& options = {});

}  // namespace counterarg::pipeline

#endif  // COUNTERARG_PIPELINE_HPP_

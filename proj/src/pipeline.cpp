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

#include "counterarg/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "counterarg/corpus.hpp"
#include "counterarg/distill.hpp"
#include "counterarg/error.hpp"
#include "counterarg/judge.hpp"
#include "counterarg/labeling.hpp"
#include "counterarg/promptkit.hpp"
#include "counterarg/survey.hpp"

namespace counterarg::pipeline {

namespace fs = std::filesystem;
using modelgw::Gateway;
using modelgw::GenerationRequest;

namespace {

constexpr std::array<std::string_view, 8> kStageNames = {
    "ingest", "prompt", "generate", "label", "score", "judge", "survey", "distill"};

[[noreturn]] void Invalid(const std::string& msg) { throw Error(Errc::kConfigInvalid, msg); }

std::optional<Errc> ParseErrc(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(Errc::kStageFailed); ++i) {
    if (ErrcName(static_cast<Errc>(i)) == name) return static_cast<Errc>(i);
  }
  return std::nullopt;
}

// Typed field access that reports the dotted path on failure.
template <typename T>
T Field(const Json& obj, const char* key, const std::string& where, T fallback) {
  if (!obj.contains(key) || obj[key].is_null()) return fallback;
  try {
    return obj[key].get<T>();
  } catch (const Json::exception&) {
    Invalid(where + "." + key + " has the wrong type");
  }
}

void CheckKeys(const Json& obj, const std::string& where,
               std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) Invalid(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      Invalid("unknown key " + where + "." + key);
    }
  }
}

fs::path Resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

Json ProviderToJson(const ProviderConfig& p) {
  return Json{{"id", p.id}, {"type", p.type}, {"options", p.options},
              {"rps", p.requests_per_second}};
}

const ProviderConfig* FindProvider(const RunConfig& c, std::string_view id) {
  for (const ProviderConfig& p : c.providers) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

promptkit::TemplateRegistry BuildRegistry(const RunConfig& c) {
  promptkit::TemplateRegistry registry;
  if (c.templates_file) registry.load_file(*c.templates_file);
  return registry;
}

std::string FileDigest(const fs::path& path) { return Sha256Hex(ReadText(path)); }

}  // namespace

std::string_view StageName(Stage stage) { return kStageNames[static_cast<int>(stage)]; }

std::optional<Stage> ParseStage(std::string_view name) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == name) return kAllStages[i];
  }
  return std::nullopt;
}

std::vector<Stage> StageDependencies(Stage stage) {
  switch (stage) {
    case Stage::kIngest:
      return {};
    case Stage::kPrompt:
    case Stage::kLabel:
      return {Stage::kIngest};
    case Stage::kGenerate:
      return {Stage::kPrompt};
    case Stage::kScore:
    case Stage::kJudge:
    case Stage::kSurvey:
    case Stage::kDistill:
      return {Stage::kIngest, Stage::kGenerate};
  }
  return {};
}

bool ProviderConfig::is_text() const {
  return type == "mock_echo" || type == "mock_choice" || type == "mock_scripted" ||
         type == "openai_chat";
}

// ---- Config -------------------------------------------------------------------

RunConfig RunConfig::FromJson(const Json& j, const fs::path& base_dir) {
  CheckKeys(j, "config",
            {"seed", "output_dir", "concurrency", "retry", "datasets", "templates",
             "providers", "generation", "labeling", "scoring", "judge", "survey", "distill",
             "stages"});
  RunConfig c;
  c.seed = Field<std::uint64_t>(j, "seed", "config", 0);
  c.output_dir = Resolve(base_dir, Field<std::string>(j, "output_dir", "config", "out"));
  c.concurrency = Field<std::size_t>(j, "concurrency", "config", 4);

  if (j.contains("retry")) {
    const Json& r = j["retry"];
    CheckKeys(r, "retry", {"max_attempts", "base_delay_ms", "max_delay_ms", "jitter"});
    c.retry.max_attempts = Field<int>(r, "max_attempts", "retry", c.retry.max_attempts);
    c.retry.base_delay = std::chrono::milliseconds(
        Field<std::int64_t>(r, "base_delay_ms", "retry", c.retry.base_delay.count()));
    c.retry.max_delay = std::chrono::milliseconds(
        Field<std::int64_t>(r, "max_delay_ms", "retry", c.retry.max_delay.count()));
    c.retry.jitter = Field<double>(r, "jitter", "retry", c.retry.jitter);
  }

  if (!j.contains("datasets")) Invalid("datasets.train is required");
  const Json& d = j["datasets"];
  CheckKeys(d, "datasets", {"train", "test"});
  const std::string train = Field<std::string>(d, "train", "datasets", "");
  if (train.empty()) Invalid("datasets.train is required");
  c.train_path = Resolve(base_dir, train);
  const std::string test = Field<std::string>(d, "test", "datasets", "");
  if (!test.empty()) c.test_path = Resolve(base_dir, test);

  if (j.contains("templates")) {
    const Json& t = j["templates"];
    CheckKeys(t, "templates", {"no_label", "label_aware", "file"});
    c.no_label_template = Field<std::string>(t, "no_label", "templates", c.no_label_template);
    c.label_aware_template =
        Field<std::string>(t, "label_aware", "templates", c.label_aware_template);
    const std::string file = Field<std::string>(t, "file", "templates", "");
    if (!file.empty()) c.templates_file = Resolve(base_dir, file);
  }

  if (j.contains("providers")) {
    if (!j["providers"].is_array()) Invalid("providers must be an array");
    for (const Json& p : j["providers"]) {
      if (!p.is_object()) Invalid("providers entries must be objects");
      ProviderConfig pc;
      pc.id = Field<std::string>(p, "id", "providers[]", "");
      pc.type = Field<std::string>(p, "type", "providers[]", "");
      pc.requests_per_second = Field<double>(p, "rps", "providers[]", 0.0);
      for (const auto& [key, value] : p.items()) {
        if (key != "id" && key != "type" && key != "rps") pc.options[key] = value;
      }
      c.providers.push_back(std::move(pc));
    }
  }

  if (j.contains("generation")) {
    const Json& g = j["generation"];
    CheckKeys(g, "generation", {"model", "max_tokens", "temperature"});
    c.generation.model = Field<std::string>(g, "model", "generation", "");
    c.generation.max_tokens = Field<int>(g, "max_tokens", "generation", 512);
    c.generation.temperature = Field<double>(g, "temperature", "generation", 0.0);
  }
  if (j.contains("labeling")) {
    const Json& l = j["labeling"];
    CheckKeys(l, "labeling", {"model", "embedder", "floor", "skip_absent"});
    c.labeling.model = Field<std::string>(l, "model", "labeling", "");
    c.labeling.embedder = Field<std::string>(l, "embedder", "labeling", "");
    if (l.contains("floor") && !l["floor"].is_null()) {
      c.labeling.floor = Field<double>(l, "floor", "labeling", 0.0);
    }
    c.labeling.skip_absent = Field<bool>(l, "skip_absent", "labeling", false);
  }
  if (j.contains("scoring")) {
    const Json& s = j["scoring"];
    CheckKeys(s, "scoring", {"metrics", "embedder", "candidate", "reference"});
    if (s.contains("metrics")) {
      c.scoring.metrics.clear();
      for (const std::string& name :
           Field<std::vector<std::string>>(s, "metrics", "scoring", {})) {
        auto m = metrics::ParseMetric(name);
        if (!m) Invalid("scoring.metrics: unknown metric " + name);
        c.scoring.metrics.push_back(*m);
      }
    }
    c.scoring.embedder = Field<std::string>(s, "embedder", "scoring", "");
    c.scoring.candidate = Field<std::string>(s, "candidate", "scoring", c.scoring.candidate);
    c.scoring.reference = Field<std::string>(s, "reference", "scoring", c.scoring.reference);
  }
  if (j.contains("judge")) {
    const Json& jj = j["judge"];
    CheckKeys(jj, "judge", {"model", "runs"});
    c.judge.model = Field<std::string>(jj, "model", "judge", "");
    c.judge.runs = Field<int>(jj, "runs", "judge", 4);
  }
  if (j.contains("survey")) {
    const Json& s = j["survey"];
    CheckKeys(s, "survey", {"split", "n_multi", "n_single"});
    c.survey.split = Field<std::string>(s, "split", "survey", c.survey.split);
    c.survey.n_multi = Field<std::size_t>(s, "n_multi", "survey", c.survey.n_multi);
    c.survey.n_single = Field<std::size_t>(s, "n_single", "survey", c.survey.n_single);
  }
  if (j.contains("distill")) {
    const Json& s = j["distill"];
    CheckKeys(s, "distill", {"variants"});
    c.distill.variants =
        Field<std::vector<std::string>>(s, "variants", "distill", c.distill.variants);
  }
  if (j.contains("stages")) {
    c.stages.clear();
    for (const std::string& name : Field<std::vector<std::string>>(j, "stages", "config", {})) {
      auto st = ParseStage(name);
      if (!st) Invalid("stages: unknown stage " + name);
      c.stages.push_back(*st);
    }
  }
  return c;
}

RunConfig RunConfig::Load(const fs::path& path) {
  std::string text;
  try {
    text = ReadText(path);
  } catch (const Error& e) {
    Invalid("cannot read config " + path.string());
  }
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) Invalid("config " + path.string() + " is not valid JSON");
  return FromJson(j, path.parent_path());
}

std::vector<Stage> RunConfig::planned_stages() const {
  std::set<Stage> want;
  std::vector<Stage> todo = stages;
  while (!todo.empty()) {
    Stage s = todo.back();
    todo.pop_back();
    if (!want.insert(s).second) continue;
    for (Stage dep : StageDependencies(s)) todo.push_back(dep);
  }
  return {want.begin(), want.end()};  // enum order is pipeline order
}

std::shared_ptr<modelgw::TextProvider> MakeTextProvider(const ProviderConfig& p) {
  const std::string where = "providers." + p.id;
  const Json& o = p.options;
  try {
    if (p.type == "mock_echo") {
      CheckKeys(o, where, {"prefix"});
      return std::make_shared<modelgw::EchoProvider>(Field<std::string>(o, "prefix", where, "ECHO:"));
    }
    if (p.type == "mock_choice") {
      CheckKeys(o, where, {"responses", "seed"});
      return std::make_shared<modelgw::ChoiceProvider>(
          Field<std::vector<std::string>>(o, "responses", where, {}),
          Field<std::uint64_t>(o, "seed", where, 0));
    }
    if (p.type == "mock_scripted") {
      CheckKeys(o, where, {"script"});
      std::vector<modelgw::ScriptedProvider::Step> steps;
      for (const Json& step : Field<Json>(o, "script", where, Json::array())) {
        if (step.contains("ok")) {
          steps.push_back(modelgw::ScriptedProvider::Ok(step["ok"].get<std::string>()));
        } else {
          auto code = ParseErrc(step.value("fail", std::string("ProviderUnavailable")));
          if (!code) Invalid(where + ": unknown error code in script");
          steps.push_back(modelgw::ScriptedProvider::Fail(*code));
        }
      }
      return std::make_shared<modelgw::ScriptedProvider>(std::move(steps));
    }
    if (p.type == "openai_chat") {
      CheckKeys(o, where, {"base_url", "model", "api_key_env", "timeout_ms"});
      modelgw::HttpEndpoint ep;
      ep.base_url = Field<std::string>(o, "base_url", where, "");
      ep.model = Field<std::string>(o, "model", where, "");
      ep.api_key_env = Field<std::string>(o, "api_key_env", where, "");
      ep.timeout = std::chrono::milliseconds(Field<std::int64_t>(o, "timeout_ms", where, 60000));
      if (ep.base_url.empty() || ep.model.empty()) Invalid(where + ": base_url and model required");
      return std::make_shared<modelgw::HttpChatProvider>(std::move(ep));
    }
  } catch (const Error& e) {
    if (e.code() == Errc::kConfigInvalid) throw;
    Invalid(where + ": " + e.what());
  } catch (const Json::exception& e) {
    Invalid(where + ": " + e.what());
  }
  Invalid(where + ": " + p.type + " is not a text provider type");
}

std::shared_ptr<modelgw::EmbeddingProvider> MakeEmbeddingProvider(const ProviderConfig& p) {
  const std::string where = "providers." + p.id;
  const Json& o = p.options;
  try {
    if (p.type == "hash_embedder") {
      CheckKeys(o, where, {"dim", "seed"});
      return std::make_shared<modelgw::HashEmbedder>(Field<std::size_t>(o, "dim", where, 64),
                                                     Field<std::uint64_t>(o, "seed", where, 0));
    }
    if (p.type == "onehot_catalog") {
      CheckKeys(o, where, {});
      std::vector<std::string> sentences;
      for (const auto& label : corpus::load_catalog().entries()) {
        sentences.emplace_back(label.description);
      }
      return std::make_shared<modelgw::OneHotSentenceEmbedder>(std::move(sentences));
    }
    if (p.type == "openai_embed") {
      CheckKeys(o, where, {"base_url", "model", "api_key_env", "timeout_ms"});
      modelgw::HttpEndpoint ep;
      ep.base_url = Field<std::string>(o, "base_url", where, "");
      ep.model = Field<std::string>(o, "model", where, "");
      ep.api_key_env = Field<std::string>(o, "api_key_env", where, "");
      ep.timeout = std::chrono::milliseconds(Field<std::int64_t>(o, "timeout_ms", where, 60000));
      if (ep.base_url.empty() || ep.model.empty()) Invalid(where + ": base_url and model required");
      return std::make_shared<modelgw::HttpEmbeddingProvider>(std::move(ep));
    }
  } catch (const Error& e) {
    if (e.code() == Errc::kConfigInvalid) throw;
    Invalid(where + ": " + e.what());
  }
  Invalid(where + ": " + p.type + " is not an embedding provider type");
}

void RunConfig::validate() const {
  if (concurrency < 1) Invalid("concurrency must be >= 1");
  if (retry.max_attempts < 1) Invalid("retry.max_attempts must be >= 1");
  if (retry.jitter < 0 || retry.jitter > 1) Invalid("retry.jitter must be in [0, 1]");
  if (!fs::is_regular_file(train_path)) {
    Invalid("datasets.train: file not found: " + train_path.string());
  }
  if (test_path && !fs::is_regular_file(*test_path)) {
    Invalid("datasets.test: file not found: " + test_path->string());
  }
  if (templates_file && !fs::is_regular_file(*templates_file)) {
    Invalid("templates.file: file not found: " + templates_file->string());
  }

  promptkit::TemplateRegistry registry;
  try {
    registry = BuildRegistry(*this);
  } catch (const Error& e) {
    Invalid(std::string("templates.file: ") + e.what());
  }
  auto check_template = [&](const std::string& id, promptkit::PromptKind kind,
                            const char* field) {
    if (!registry.contains(id)) Invalid(std::string(field) + ": unknown template id " + id);
    if (registry.get(id).kind != kind) {
      Invalid(std::string(field) + ": template " + id + " is not of kind " +
              std::string(promptkit::KindName(kind)));
    }
  };
  check_template(no_label_template, promptkit::PromptKind::kNoLabel, "templates.no_label");
  check_template(label_aware_template, promptkit::PromptKind::kLabelAware,
                 "templates.label_aware");

  std::set<std::string> ids;
  for (const ProviderConfig& p : providers) {
    if (p.id.empty()) Invalid("providers: every provider needs an id");
    if (!ids.insert(p.id).second) Invalid("providers: duplicate id " + p.id);
    if (p.is_text()) {
      MakeTextProvider(p);
    } else {
      MakeEmbeddingProvider(p);
    }
  }
  auto need = [&](const std::string& id, bool text, const char* field) {
    if (id.empty()) Invalid(std::string(field) + " is required");
    const ProviderConfig* p = FindProvider(*this, id);
    if (!p) Invalid(std::string(field) + ": unknown provider id " + id);
    if (p->is_text() != text) {
      Invalid(std::string(field) + ": provider " + id + " is not " +
              (text ? "a text" : "an embedding") + " provider");
    }
  };

  for (Stage s : planned_stages()) {
    switch (s) {
      case Stage::kGenerate:
        need(generation.model, true, "generation.model");
        if (generation.max_tokens < 1) Invalid("generation.max_tokens must be >= 1");
        if (generation.temperature < 0) Invalid("generation.temperature must be >= 0");
        break;
      case Stage::kLabel:
        need(labeling.model, true, "labeling.model");
        need(labeling.embedder, false, "labeling.embedder");
        break;
      case Stage::kScore: {
        const bool bert = std::find(scoring.metrics.begin(), scoring.metrics.end(),
                                    metrics::Metric::kBertScore) != scoring.metrics.end();
        if (scoring.metrics.empty()) Invalid("scoring.metrics is empty");
        if (bert) need(scoring.embedder, false, "scoring.embedder");
        for (const std::string* v : {&scoring.candidate, &scoring.reference}) {
          if (*v != "no_label" && *v != "label_aware") {
            Invalid("scoring: variant must be no_label or label_aware, got " + *v);
          }
        }
        if (scoring.candidate == scoring.reference) {
          Invalid("scoring.candidate and scoring.reference must differ");
        }
        break;
      }
      case Stage::kJudge:
        need(judge.model, true, "judge.model");
        if (judge.runs < 1) Invalid("judge.runs must be >= 1");
        break;
      case Stage::kSurvey:
        if (survey.split != "train" && survey.split != "test") {
          Invalid("survey.split must be train or test");
        }
        if (survey.split == "test" && !test_path) Invalid("survey.split=test needs datasets.test");
        if (survey.n_multi + survey.n_single == 0) Invalid("survey sample size is zero");
        break;
      case Stage::kDistill:
        if (!test_path) Invalid("distill needs datasets.test for the eval split");
        if (distill.variants.empty()) Invalid("distill.variants is empty");
        for (const std::string& v : distill.variants) {
          try {
            distill::ExperimentVariant::Builtin(v);
          } catch (const Error&) {
            Invalid("distill.variants: unknown variant " + v);
          }
        }
        break;
      default:
        break;
    }
  }
}

// ---- Report -------------------------------------------------------------------

const StageReport* RunReport::find(std::string_view stage) const {
  for (const StageReport& s : stages) {
    if (s.stage == stage) return &s;
  }
  return nullptr;
}

std::vector<Failure> RunReport::failures() const {
  std::vector<Failure> out;
  for (const StageReport& s : stages) out.insert(out.end(), s.failures.begin(), s.failures.end());
  return out;
}

namespace {

Json StageToJson(const StageReport& s) {
  Json failures = Json::array();
  for (const Failure& f : s.failures) {
    failures.push_back({{"stage", f.stage}, {"item_id", f.item_id}, {"error", f.error}});
  }
  return Json{{"stage", s.stage},
              {"inputs", s.inputs},
              {"outputs", s.outputs},
              {"failures", std::move(failures)},
              {"means", s.means}};
}

StageReport StageFromJson(const Json& j) {
  StageReport s;
  s.stage = j.at("stage").get<std::string>();
  s.inputs = j.at("inputs").get<std::size_t>();
  s.outputs = j.at("outputs").get<std::size_t>();
  for (const Json& f : j.at("failures")) {
    s.failures.push_back({f.at("stage").get<std::string>(), f.at("item_id").get<std::string>(),
                          f.at("error").get<std::string>()});
  }
  s.means = j.at("means").get<std::map<std::string, double>>();
  return s;
}

}  // namespace

Json RunReport::to_json() const {
  Json out = Json::array();
  for (const StageReport& s : stages) out.push_back(StageToJson(s));
  return Json{{"stages", std::move(out)}};
}

// ---- Stages -------------------------------------------------------------------

namespace {

struct Pair {
  std::string tweet_id;
  std::string no_label;
  std::string label_aware;
};

class Runner {
 public:
  Runner(const RunConfig& config, const RunOptions& options)
      : config_(config), options_(options), registry_(BuildRegistry(config)),
        gateway_(config.concurrency, config.retry) {
    if (options.sleeper) gateway_.set_sleeper(options.sleeper);
    for (const ProviderConfig& p : config.providers) {
      if (p.is_text()) {
        gateway_.register_text(p.id, MakeTextProvider(p), p.requests_per_second);
      } else {
        gateway_.register_embedding(p.id, MakeEmbeddingProvider(p));
      }
    }
    for (const auto& [id, provider] : options.text_overrides) {
      gateway_.register_text(id, provider);
    }
  }

  RunReport run() {
    RunReport report;
    for (Stage s : config_.planned_stages()) {
      keys_[s] = key_for(s);
      report.stages.push_back(run_stage(s));
    }
    WriteText(config_.output_dir / "report.json", report.to_json().dump(2) + "\n");
    return report;
  }

 private:
  fs::path dir(Stage s) const { return config_.output_dir / std::string(StageName(s)); }

  void log(const std::string& line) const {
    if (options_.log) *options_.log << line << '\n';
  }

  std::string template_text(const std::string& id) const { return registry_.get(id).text; }

  Json provider_json(const std::string& id) const {
    if (id.empty()) return nullptr;
    const ProviderConfig* p = FindProvider(config_, id);
    return p ? ProviderToJson(*p) : Json(nullptr);
  }

  // The configuration slice that determines a stage's output.
  Json stage_inputs(Stage s) const {
    const RunConfig& c = config_;
    switch (s) {
      case Stage::kIngest:
        return {{"train", FileDigest(c.train_path)},
                {"test", c.test_path ? Json(FileDigest(*c.test_path)) : Json(nullptr)}};
      case Stage::kPrompt:
        return {{"no_label", c.no_label_template},
                {"label_aware", c.label_aware_template},
                {"no_label_text", template_text(c.no_label_template)},
                {"label_aware_text", template_text(c.label_aware_template)}};
      case Stage::kGenerate:
        return {{"seed", c.seed},
                {"model", provider_json(c.generation.model)},
                {"max_tokens", c.generation.max_tokens},
                {"temperature", c.generation.temperature},
                {"override", options_.text_overrides.contains(c.generation.model)}};
      case Stage::kLabel:
        return {{"seed", c.seed},
                {"model", provider_json(c.labeling.model)},
                {"embedder", provider_json(c.labeling.embedder)},
                {"floor", c.labeling.floor ? Json(*c.labeling.floor) : Json(nullptr)},
                {"skip_absent", c.labeling.skip_absent},
                {"template", template_text(std::string(promptkit::kLabelPredictionId))}};
      case Stage::kScore: {
        Json names = Json::array();
        for (metrics::Metric m : c.scoring.metrics) names.push_back(metrics::MetricName(m));
        return {{"metrics", names},
                {"embedder", provider_json(c.scoring.embedder)},
                {"candidate", c.scoring.candidate},
                {"reference", c.scoring.reference}};
      }
      case Stage::kJudge:
        return {{"seed", c.seed},
                {"model", provider_json(c.judge.model)},
                {"runs", c.judge.runs},
                {"override", options_.text_overrides.contains(c.judge.model)}};
      case Stage::kSurvey:
        return {{"seed", c.seed},
                {"split", c.survey.split},
                {"n_multi", c.survey.n_multi},
                {"n_single", c.survey.n_single}};
      case Stage::kDistill:
        return {{"variants", c.distill.variants},
                {"no_label_text", template_text(c.no_label_template)},
                {"label_aware_text", template_text(c.label_aware_template)}};
    }
    return nullptr;
  }

  std::string key_for(Stage s) const {
    Json upstream = Json::array();
    for (Stage dep : StageDependencies(s)) upstream.push_back(keys_.at(dep));
    Json j{{"stage", StageName(s)}, {"inputs", stage_inputs(s)}, {"upstream", upstream}};
    return Sha256Hex(j.dump());
  }

  StageReport run_stage(Stage s) {
    const std::string name(StageName(s));
    const fs::path stage_dir = dir(s);
    const fs::path stamp = stage_dir / ".stamp";
    const fs::path summary = stage_dir / "summary.json";
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
    };

    if (fs::exists(stamp) && fs::exists(summary) && Trim(ReadText(stamp)) == keys_[s]) {
      try {
        StageReport r = StageFromJson(Json::parse(ReadText(summary)));
        r.resumed = true;
        r.wall = elapsed();
        log("[" + name + "] up to date, skipped");
        return r;
      } catch (const std::exception&) {
        // Fall through and recompute.
      }
    }

    StageReport r;
    try {
      fs::remove_all(stage_dir);
      fs::create_directories(stage_dir);
      r = execute(s);
    } catch (const Error& e) {
      if (e.code() == Errc::kStageFailed) throw;
      throw Error(Errc::kStageFailed, name + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(Errc::kStageFailed, name + ": " + e.what());
    }
    r.stage = name;
    WriteText(summary, StageToJson(r).dump(2) + "\n");
    WriteText(stamp, keys_[s] + "\n");
    r.wall = elapsed();
    log("[" + name + "] " + std::to_string(r.outputs) + "/" + std::to_string(r.inputs) +
        " in " + std::to_string(r.wall.count()) + " ms, " +
        std::to_string(r.failures.size()) + " failure(s)");
    return r;
  }

  StageReport execute(Stage s) {
    switch (s) {
      case Stage::kIngest:
        return ingest();
      case Stage::kPrompt:
        return prompt();
      case Stage::kGenerate:
        return generate();
      case Stage::kLabel:
        return label();
      case Stage::kScore:
        return score();
      case Stage::kJudge:
        return judge();
      case Stage::kSurvey:
        return survey();
      case Stage::kDistill:
        return distill();
    }
    return {};
  }

  // ---- loaders over persisted stage outputs

  corpus::DatasetSplit load_split(std::string_view name) const {
    return corpus::ingest(dir(Stage::kIngest) / (std::string(name) + ".jsonl"), name);
  }

  std::vector<corpus::Tweet> all_tweets() const {
    const corpus::DatasetSplit train = load_split("train");
    std::vector<corpus::Tweet> out(train.tweets().begin(), train.tweets().end());
    if (config_.test_path) {
      const corpus::DatasetSplit test = load_split("test");
      out.insert(out.end(), test.tweets().begin(), test.tweets().end());
    }
    return out;
  }

  // Complete no-label / label-aware pairs in generation order.
  std::vector<Pair> load_pairs() const {
    std::vector<Pair> pairs;
    std::map<std::string, std::size_t> index;
    for (const Json& row : ReadJsonl(dir(Stage::kGenerate) / "generations.jsonl")) {
      const std::string id = row.at("tweet_id").get<std::string>();
      auto [it, fresh] = index.emplace(id, pairs.size());
      if (fresh) pairs.push_back({id, "", ""});
      Pair& p = pairs[it->second];
      (row.at("variant") == "no_label" ? p.no_label : p.label_aware) =
          row.at("text").get<std::string>();
    }
    std::erase_if(pairs, [](const Pair& p) { return p.no_label.empty() || p.label_aware.empty(); });
    return pairs;
  }

  static void WriteRows(const fs::path& path, const std::vector<Json>& rows) {
    std::string text;
    for (const Json& row : rows) text += row.dump() + "\n";
    WriteText(path, text);
  }

  std::int64_t request_seed(std::string_view salt) const {
    return static_cast<std::int64_t>(MixSeed(config_.seed, salt) >> 1);
  }

  // ---- stages

  StageReport ingest() {
    StageReport r;
    corpus::DatasetSplit train = corpus::ingest(config_.train_path, "train");
    std::set<std::string> ids;
    for (const auto& t : train.tweets()) ids.insert(t.id);
    corpus::serialize(train, dir(Stage::kIngest) / "train.jsonl");
    r.inputs = r.outputs = train.tweets().size();
    if (config_.test_path) {
      corpus::DatasetSplit test = corpus::ingest(*config_.test_path, "test");
      for (const auto& t : test.tweets()) {
        if (!ids.insert(t.id).second) {
          throw Error(Errc::kMalformedRecord, "tweet id " + t.id + " is in both splits");
        }
      }
      corpus::serialize(test, dir(Stage::kIngest) / "test.jsonl");
      r.inputs += test.tweets().size();
      r.outputs += test.tweets().size();
    }
    return r;
  }

  StageReport prompt() {
    StageReport r;
    std::vector<Json> rows;
    const auto& catalog = corpus::load_catalog();
    for (const corpus::Tweet& t : all_tweets()) {
      ++r.inputs;
      rows.push_back(promptkit::prompt_to_json(
          promptkit::render_no_label(t, config_.no_label_template, registry_)));
      rows.push_back(promptkit::prompt_to_json(
          promptkit::render_label_aware(t, catalog, config_.label_aware_template, registry_)));
      ++r.outputs;
    }
    WriteRows(dir(Stage::kPrompt) / "prompts.jsonl", rows);
    return r;
  }

  StageReport generate() {
    StageReport r;
    std::vector<GenerationRequest> requests;
    for (const Json& row : ReadJsonl(dir(Stage::kPrompt) / "prompts.jsonl")) {
      GenerationRequest req;
      req.prompt = promptkit::prompt_from_json(row);
      req.model_id = config_.generation.model;
      req.max_tokens = config_.generation.max_tokens;
      req.temperature = config_.generation.temperature;
      req.seed = request_seed(req.prompt.tweet_id + "/" +
                              std::string(promptkit::KindName(req.prompt.variant.kind)));
      requests.push_back(std::move(req));
    }
    auto outcomes = gateway_.generate_all(requests);

    std::vector<Json> rows;
    std::map<std::string, int> complete;  // tweet id -> successful variants
    std::vector<std::string> order;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      const std::string& id = requests[i].prompt.tweet_id;
      if (!complete.contains(id)) order.push_back(id);
      complete[id];
      if (outcomes[i].record) {
        rows.push_back(modelgw::record_to_json(*outcomes[i].record));
        ++complete[id];
      } else {
        r.failures.push_back(
            {"generate", id,
             std::string(promptkit::KindName(requests[i].prompt.variant.kind)) + ": " +
                 outcomes[i].error->what()});
      }
    }
    r.inputs = order.size();
    for (const std::string& id : order) r.outputs += complete[id] == 2 ? 1 : 0;
    WriteRows(dir(Stage::kGenerate) / "generations.jsonl", rows);
    if (r.inputs > 0 && r.outputs == 0) {
      throw Error(Errc::kStageFailed,
                  "generate: every tweet failed; first: " + r.failures.front().error);
    }
    return r;
  }

  StageReport label() {
    StageReport r;
    const auto tweets = all_tweets();
    std::vector<GenerationRequest> requests;
    for (const corpus::Tweet& t : tweets) {
      GenerationRequest req;
      req.prompt = promptkit::render_label_prediction(t, registry_);
      req.model_id = config_.labeling.model;
      req.seed = request_seed(t.id + "/label_prediction");
      requests.push_back(std::move(req));
    }
    auto outcomes = gateway_.generate_all(requests);
    modelgw::EmbeddingProvider& embedder = gateway_.embedder(config_.labeling.embedder);
    labeling::MatchOptions match;
    match.floor = config_.labeling.floor;

    std::vector<Json> rows;
    std::vector<corpus::LabelSet> predicted, gold;
    for (std::size_t i = 0; i < tweets.size(); ++i) {
      ++r.inputs;
      const corpus::Tweet& t = tweets[i];
      if (!outcomes[i].record) {
        r.failures.push_back({"label", t.id, outcomes[i].error->what()});
        continue;
      }
      try {
        labeling::LabelPrediction p = labeling::match_descriptions(
            outcomes[i].record->output_text, corpus::load_catalog(), embedder, match, t.id);
        Json row = labeling::prediction_to_json(p);
        row["generated"] = outcomes[i].record->output_text;
        row["gold"] = t.labels.keys();
        rows.push_back(std::move(row));
        predicted.push_back(p.predicted);
        gold.push_back(t.labels);
        ++r.outputs;
      } catch (const Error& e) {
        r.failures.push_back({"label", t.id, e.what()});
      }
    }
    WriteRows(dir(Stage::kLabel) / "predictions.jsonl", rows);
    if (!predicted.empty()) {
      labeling::MetricOptions opts;
      opts.skip_absent = config_.labeling.skip_absent;
      const labeling::LabelMetrics m = labeling::label_metrics(predicted, gold, opts);
      r.means = {{"f1_macro", m.f1_macro},
                 {"f1_micro", m.f1_micro},
                 {"accuracy_per_label_mean", m.accuracy_per_label_mean},
                 {"accuracy_exact_match", m.accuracy_exact_match}};
    }
    return r;
  }

  StageReport score() {
    StageReport r;
    std::vector<metrics::TextPair> pairs;
    for (const Pair& p : load_pairs()) {
      const bool cand_no_label = config_.scoring.candidate == "no_label";
      pairs.push_back({p.tweet_id, cand_no_label ? p.no_label : p.label_aware,
                       cand_no_label ? p.label_aware : p.no_label});
    }
    modelgw::EmbeddingProvider* embedder =
        config_.scoring.embedder.empty() ? nullptr : &gateway_.embedder(config_.scoring.embedder);
    const metrics::CorpusScores scores =
        metrics::score_corpus(pairs, config_.scoring.metrics, embedder);
    std::vector<Json> rows;
    for (const metrics::PairScores& row : scores.rows) {
      rows.push_back(metrics::pair_scores_to_json(row));
      if (row.error) {
        r.failures.push_back({"score", row.id, *row.error});
      } else {
        ++r.outputs;
      }
    }
    r.inputs = pairs.size();
    r.means = scores.means;
    WriteRows(dir(Stage::kScore) / "scores.jsonl", rows);
    return r;
  }

  StageReport judge() {
    StageReport r;
    std::map<std::string, std::string> text_of;
    for (const corpus::Tweet& t : all_tweets()) text_of[t.id] = t.text;
    judge::JudgeOptions opts;
    opts.model_id = config_.judge.model;
    opts.runs = config_.judge.runs;
    opts.seed = config_.seed;

    std::vector<Json> votes, tallies_json;
    std::vector<judge::VoteTally> tallies;
    for (const Pair& p : load_pairs()) {
      ++r.inputs;
      try {
        auto item_votes =
            judge::judge_pair(p.tweet_id, text_of.at(p.tweet_id), p.no_label, p.label_aware,
                              gateway_, opts);
        for (const auto& v : item_votes) votes.push_back(judge::vote_to_json(v));
        tallies.push_back(judge::majority(item_votes));
        tallies_json.push_back(judge::tally_to_json(tallies.back()));
        ++r.outputs;
      } catch (const Error& e) {
        r.failures.push_back({"judge", p.tweet_id, e.what()});
      }
    }
    WriteRows(dir(Stage::kJudge) / "votes.jsonl", votes);
    WriteRows(dir(Stage::kJudge) / "tallies.jsonl", tallies_json);
    if (!tallies.empty()) {
      const judge::Shares shares = judge::aggregate_shares(tallies);
      r.means = {{"vote_share_a", shares.vote_level.a},
                 {"vote_share_b", shares.vote_level.b},
                 {"vote_share_equal", shares.vote_level.equal},
                 {"item_share_a", shares.item_level.a},
                 {"item_share_b", shares.item_level.b},
                 {"item_share_equal", shares.item_level.equal}};
      try {
        const judge::RatioBins bins = judge::bin_ratios(tallies);
        for (std::size_t k = 0; k < bins.counts.size(); ++k) {
          r.means["bin_" + std::string(judge::RatioBins::Label(k))] =
              static_cast<double>(bins.counts[k]);
        }
      } catch (const Error& e) {
        if (e.code() != Errc::kBinningUnsupported) throw;
      }
    }
    return r;
  }

  StageReport survey() {
    StageReport r;
    const corpus::DatasetSplit split = load_split(config_.survey.split);
    std::map<std::string, survey::ArgumentPair> gens;
    for (const Pair& p : load_pairs()) gens[p.tweet_id] = {p.no_label, p.label_aware};
    const auto items = survey::build_study(split, config_.seed, config_.survey.n_multi,
                                           config_.survey.n_single, gens);
    survey::write_study_file(dir(Stage::kSurvey) / "study.jsonl", items);
    r.inputs = split.tweets().size();
    r.outputs = items.size();
    return r;
  }

  StageReport distill() {
    StageReport r;
    const corpus::DatasetSplit train = load_split("train");
    const corpus::DatasetSplit test = load_split("test");
    distill::GenerationSets sets;
    for (const Pair& p : load_pairs()) {
      sets.no_label[p.tweet_id] = p.no_label;
      sets.label_aware[p.tweet_id] = p.label_aware;
    }
    for (const std::string& id : config_.distill.variants) {
      distill::ExperimentVariant v = distill::ExperimentVariant::Builtin(id);
      v.train_prompt.template_id = v.train_prompt.kind == promptkit::PromptKind::kNoLabel
                                       ? config_.no_label_template
                                       : config_.label_aware_template;
      v.eval_prompt.template_id = v.eval_prompt.kind == promptkit::PromptKind::kNoLabel
                                      ? config_.no_label_template
                                      : config_.label_aware_template;
      const distill::Assembly a = distill::assemble(v, train, test, sets, registry_);
      r.inputs += train.tweets().size() + test.tweets().size();
      r.outputs += distill::export_chatml(a.train, dir(Stage::kDistill) / id / "train.chatml.jsonl");
      r.outputs += distill::export_chatml(a.eval, dir(Stage::kDistill) / id / "eval.chatml.jsonl");
    }
    return r;
  }

  const RunConfig& config_;
  const RunOptions& options_;
  promptkit::TemplateRegistry registry_;
  Gateway gateway_;
  std::map<Stage, std::string> keys_;
};

}  // namespace

RunReport run(const RunConfig& config, const RunOptions& options) {
  config.validate();
  Runner runner(config, options);
  return runner.run();
}

}  // namespace counterarg::pipeline

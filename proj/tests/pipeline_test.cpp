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

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include <sys/wait.h>

#include "counterarg/error.hpp"
#include "counterarg/pipeline.hpp"
#include "support/fixtures.hpp"

namespace counterarg::pipeline {
namespace {

namespace fs = std::filesystem;

const fs::path kSource = COUNTERARG_SOURCE_DIR;

RunConfig MockConfig(const fs::path& out) {
  RunConfig c = RunConfig::Load(kSource / "configs" / "mock_run.json");
  c.output_dir = out;
  return c;
}

RunOptions Quiet() {
  RunOptions o;
  o.sleeper = [](std::chrono::milliseconds) {};
  return o;
}

// Relative path -> contents for every file under dir.
std::map<std::string, std::string> Snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = ReadText(e.path());
  }
  return out;
}

Errc CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return Errc::kInvalidArgument;
}

TEST(Stages, NamesAndDependencies) {
  for (Stage s : kAllStages) EXPECT_EQ(ParseStage(StageName(s)), s);
  EXPECT_FALSE(ParseStage("train"));
  RunConfig c = MockConfig("unused");
  c.stages = {Stage::kScore};
  EXPECT_EQ(c.planned_stages(),
            (std::vector<Stage>{Stage::kIngest, Stage::kPrompt, Stage::kGenerate, Stage::kScore}));
  c.stages = {Stage::kLabel};
  EXPECT_EQ(c.planned_stages(), (std::vector<Stage>{Stage::kIngest, Stage::kLabel}));
}

TEST(Config, RejectsBadInput) {
  const Json base = Json::parse(ReadText(kSource / "configs" / "mock_run.json"));
  auto invalid = [&](const std::function<void(Json&)>& edit, const std::string& needle) {
    Json j = base;
    edit(j);
    try {
      RunConfig::FromJson(j, kSource / "configs").validate();
      ADD_FAILURE() << "accepted: " << needle;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::kConfigInvalid) << e.what();
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  invalid([](Json& j) { j["templates"]["label_aware"] = "shout_louder"; }, "shout_louder");
  invalid([](Json& j) { j["templates"]["no_label"] = "talk_about"; }, "talk_about");
  invalid([](Json& j) { j["datasets"]["train"] = "missing.jsonl"; }, "missing.jsonl");
  invalid([](Json& j) { j["bogus_key"] = 1; }, "bogus_key");
  invalid([](Json& j) { j["generation"]["model"] = "nobody"; }, "nobody");
  invalid([](Json& j) { j["providers"][0]["type"] = "telepathy"; }, "telepathy");
  invalid([](Json& j) { j["providers"][1]["id"] = "writer"; }, "writer");
  invalid([](Json& j) { j["distill"]["variants"] = {"exp9"}; }, "exp9");
  invalid([](Json& j) { j["scoring"]["metrics"] = {"bleu"}; }, "bleu");
  invalid([](Json& j) { j["stages"] = {"train"}; }, "train");
}

TEST(Run, MockEndToEnd) {
  testing::TempDir dir("pipeline");
  const RunConfig c = MockConfig(dir / "out");
  const RunReport report = run(c, Quiet());
  ASSERT_EQ(report.stages.size(), kAllStages.size());
  EXPECT_TRUE(report.failures().empty());

  const StageReport* gen = report.find("generate");
  ASSERT_NE(gen, nullptr);
  EXPECT_EQ(gen->inputs, 10u);
  EXPECT_EQ(gen->outputs, 10u);
  EXPECT_EQ(ReadJsonl(dir / "out" / "generate" / "generations.jsonl").size(), 20u);

  const StageReport* score = report.find("score");
  ASSERT_NE(score, nullptr);
  EXPECT_EQ(score->outputs, 10u);
  EXPECT_EQ(ReadJsonl(dir / "out" / "score" / "scores.jsonl").size(), 10u);
  for (const char* key : {"rouge2_f1", "rougeL_f1", "bert_f1"}) {
    ASSERT_TRUE(score->means.contains(key)) << key;
    EXPECT_GT(score->means.at(key), 0.0) << key;
    EXPECT_LE(score->means.at(key), 1.0) << key;
  }
  EXPECT_EQ(report.find("survey")->outputs, 4u);
  EXPECT_EQ(report.find("distill")->outputs, 30u);
  for (const char* exp : {"exp1", "exp2", "exp3"}) {
    EXPECT_EQ(distill::import_chatml(dir / "out" / "distill" / exp / "train.chatml.jsonl").size(),
              6u);
    EXPECT_EQ(distill::import_chatml(dir / "out" / "distill" / exp / "eval.chatml.jsonl").size(),
              4u);
  }
  EXPECT_TRUE(fs::exists(dir / "out" / "report.json"));
}

TEST(Run, ResumeSkipsStagesAndKeepsReport) {
  testing::TempDir dir("pipeline-resume");
  const RunConfig c = MockConfig(dir / "out");
  const RunReport first = run(c, Quiet());
  const auto files = Snapshot(dir / "out");
  const RunReport second = run(c, Quiet());
  for (const auto& s : second.stages) EXPECT_TRUE(s.resumed) << s.stage;
  EXPECT_EQ(first.to_json(), second.to_json());
  EXPECT_EQ(Snapshot(dir / "out"), files);

  // Changing the judge configuration reruns judge only.
  RunConfig changed = c;
  changed.judge.runs = 3;
  const RunReport third = run(changed, Quiet());
  for (const auto& s : third.stages) EXPECT_EQ(s.resumed, s.stage != "judge") << s.stage;
}

TEST(Run, ByteStableAcrossFreshRuns) {
  testing::TempDir a("pipeline-a"), b("pipeline-b");
  run(MockConfig(a / "out"), Quiet());
  run(MockConfig(b / "out"), Quiet());
  EXPECT_EQ(Snapshot(a / "out"), Snapshot(b / "out"));
}

TEST(Run, FailuresCarryStageAndItem) {
  testing::TempDir dir("pipeline-fail");
  RunOptions o = Quiet();
  const std::string bad_text = "@Mike_Pence";  // only t01 mentions it
  o.text_overrides["writer"] = std::make_shared<modelgw::FunctionProvider>(
      [bad_text](const modelgw::GenerationRequest& r) -> std::string {
        if (r.prompt.text.find(bad_text) != std::string::npos) {
          throw Error(Errc::kAuthMissing, "key revoked");
        }
        return "Argument: " + r.prompt.text;
      });
  RunConfig c = MockConfig(dir / "out");
  c.stages = {Stage::kScore};
  const RunReport report = run(c, o);
  const auto failures = report.failures();
  ASSERT_EQ(failures.size(), 2u);
  for (const Failure& f : failures) {
    EXPECT_EQ(f.stage, "generate");
    EXPECT_EQ(f.item_id, "t01");
    EXPECT_NE(f.error.find("AuthMissing"), std::string::npos) << f.error;
  }
  EXPECT_EQ(report.find("generate")->outputs, 9u);
  EXPECT_EQ(report.find("score")->inputs, 9u);
}

TEST(Run, EveryGenerationFailingIsStageFailure) {
  testing::TempDir dir("pipeline-allfail");
  RunOptions o = Quiet();
  o.text_overrides["writer"] = std::make_shared<modelgw::ScriptedProvider>(
      std::vector<modelgw::ScriptedProvider::Step>{modelgw::ScriptedProvider::Fail()});
  RunConfig c = MockConfig(dir / "out");
  c.stages = {Stage::kGenerate};
  EXPECT_EQ(CodeOf([&] { run(c, o); }), Errc::kStageFailed);
}

// ---- CLI

int Cli(const std::string& args) {
  const std::string cmd = std::string(COUNTERARG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  testing::TempDir dir("cli");
  const std::string config = (kSource / "configs" / "mock_run.json").string();
  const std::string out = (dir / "out").string();
  EXPECT_EQ(Cli("--help"), 0);
  EXPECT_EQ(Cli("--no-such-flag"), 2);
  EXPECT_EQ(Cli("--config " + (dir / "absent.json").string() + " run"), 2);
  EXPECT_EQ(Cli("--config " + config + " --out " + out + " run"), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "report.json"));

  Json broken = Json::parse(ReadText(kSource / "configs" / "mock_run.json"));
  broken["templates"]["label_aware"] = "shout_louder";
  broken["datasets"]["train"] = (kSource / "tests" / "data" / "mini_train.jsonl").string();
  broken["datasets"]["test"] = (kSource / "tests" / "data" / "mini_test.jsonl").string();
  WriteText(dir / "broken.json", broken.dump());
  EXPECT_EQ(Cli("--config " + (dir / "broken.json").string() + " --out " + out + " run"), 2);

  Json failing = broken;
  failing["templates"]["label_aware"] = "talk_about";
  failing["providers"][0] = {{"id", "writer"}, {"type", "mock_scripted"},
                             {"script", {{{"fail", "ProviderUnavailable"}}}}};
  WriteText(dir / "failing.json", failing.dump());
  EXPECT_EQ(Cli("--config " + (dir / "failing.json").string() + " --out " +
                (dir / "out2").string() + " run --stages generate"),
            3);

  // Standalone subcommands.
  const std::string train = (kSource / "tests" / "data" / "mini_train.jsonl").string();
  EXPECT_EQ(Cli("corpus ingest --input " + train + " --split train"), 0);
  EXPECT_EQ(Cli("corpus ingest --input " + (dir / "nope.jsonl").string()), 1);
  EXPECT_EQ(Cli("prompt render --input " + train + " --variant label_aware"), 0);
}

TEST(Cli, ScoreAndPromptOutput) {
  testing::TempDir dir("cli-out");
  WriteText(dir / "pairs.jsonl",
            R"({"id":"1","candidate":"a b c d","reference":"a b c e"})"
            "\n");
  const std::string cmd = std::string(COUNTERARG_CLI_PATH) + " score --pairs " +
                          (dir / "pairs.jsonl").string() + " --metrics rouge2 > " +
                          (dir / "stdout.txt").string() + " 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  const std::string text = ReadText(dir / "stdout.txt");
  EXPECT_NE(text.find("66.67"), std::string::npos) << text;
}

}  // namespace
}  // namespace counterarg::pipeline

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

#include "counterarg/distill.hpp"
#include "counterarg/error.hpp"
#include "support/fixtures.hpp"

namespace counterarg::distill {
namespace {

using corpus::DatasetSplit;

struct Fixture {
  DatasetSplit train = testing::SyntheticSplit("train", 2000, 11);
  DatasetSplit eval = testing::SyntheticSplit("test", 990, 12);
  GenerationSets gens;
  Fixture() {
    std::vector<corpus::Tweet> all(train.tweets().begin(), train.tweets().end());
    all.insert(all.end(), eval.tweets().begin(), eval.tweets().end());
    gens = testing::SyntheticGenerations(all);
  }
};

const Fixture& Full() {
  static const Fixture f;
  return f;
}

std::map<std::string, const ChatRecord*> ById(const std::vector<ChatRecord>& records) {
  std::map<std::string, const ChatRecord*> out;
  for (const auto& r : records) out[r.tweet_id] = &r;
  return out;
}

TEST(Variants, Builtins) {
  const auto e1 = ExperimentVariant::Builtin("exp1");
  EXPECT_EQ(e1.train_prompt.kind, promptkit::PromptKind::kNoLabel);
  EXPECT_EQ(e1.eval_prompt.kind, promptkit::PromptKind::kNoLabel);
  EXPECT_EQ(e1.train_source, TargetSource::kNoLabel);
  const auto e2 = ExperimentVariant::Builtin("exp2");
  EXPECT_EQ(e2.train_prompt.kind, promptkit::PromptKind::kLabelAware);
  EXPECT_EQ(e2.train_source, TargetSource::kNoLabel);
  const auto e3 = ExperimentVariant::Builtin("exp3");
  EXPECT_EQ(e3.train_source, TargetSource::kLabelAware);
  for (const auto& v : {e1, e2, e3}) EXPECT_NO_THROW(v.validate());

  try {
    ExperimentVariant::Builtin("exp4");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kVariantMisconfigured);
  }
  ExperimentVariant bad = e3;
  bad.train_source = TargetSource::kNoLabel;
  EXPECT_THROW(bad.validate(), Error);
  bad = e1;
  bad.train_prompt.kind = promptkit::PromptKind::kLabelAware;
  EXPECT_THROW(bad.validate(), Error);
  bad = e2;
  bad.eval_prompt.template_id = "";
  EXPECT_THROW(bad.validate(), Error);
  ExperimentVariant discuss = e2;
  discuss.train_prompt.template_id = "discuss";
  EXPECT_NO_THROW(discuss.validate());
}

TEST(Assemble, SizesForEveryVariant) {
  const Fixture& f = Full();
  for (const char* id : {"exp1", "exp2", "exp3"}) {
    const Assembly a = assemble(ExperimentVariant::Builtin(id), f.train, f.eval, f.gens);
    EXPECT_EQ(a.train.size(), 2000u) << id;
    EXPECT_EQ(a.eval.size(), 990u) << id;
    for (std::size_t i = 0; i < a.train.size(); ++i) {
      ASSERT_EQ(a.train[i].tweet_id, f.train.tweets()[i].id);
      ASSERT_EQ(a.train[i].variant, id);
    }
  }
}

TEST(Assemble, Exp3PromptsCarryDescriptions) {
  const Fixture& f = Full();
  const auto& catalog = corpus::load_catalog();
  const Assembly a = assemble(ExperimentVariant::Builtin("exp3"), f.train, f.eval, f.gens);
  for (const auto* side : {&a.train, &a.eval}) {
    const DatasetSplit& split = side == &a.train ? f.train : f.eval;
    for (std::size_t i = 0; i < side->size(); ++i) {
      const auto& rec = (*side)[i];
      ASSERT_NE(rec.user_text.find(promptkit::JoinDescriptions(split.tweets()[i].labels, catalog)),
                std::string::npos);
      ASSERT_EQ(rec.assistant_text, f.gens.label_aware.at(rec.tweet_id));
    }
  }
}

TEST(Assemble, Exp1HasNoDescriptions) {
  const Fixture& f = Full();
  const auto& catalog = corpus::load_catalog();
  const Assembly a = assemble(ExperimentVariant::Builtin("exp1"), f.train, f.eval, f.gens);
  for (const auto* side : {&a.train, &a.eval}) {
    for (const auto& rec : *side) {
      for (const auto& label : catalog.entries()) {
        ASSERT_EQ(rec.user_text.find(LowerFirst(label.description)), std::string::npos);
        ASSERT_EQ(rec.user_text.find(label.description), std::string::npos);
      }
    }
  }
}

TEST(Assemble, CrossVariantJoins) {
  const Fixture& f = Full();
  const Assembly e1 = assemble(ExperimentVariant::Builtin("exp1"), f.train, f.eval, f.gens);
  const Assembly e2 = assemble(ExperimentVariant::Builtin("exp2"), f.train, f.eval, f.gens);
  const Assembly e3 = assemble(ExperimentVariant::Builtin("exp3"), f.train, f.eval, f.gens);
  const auto m1 = ById(e1.train), m2 = ById(e2.train), m3 = ById(e3.train);
  ASSERT_EQ(m1.size(), 2000u);
  for (const auto& [id, r2] : m2) {
    EXPECT_EQ(r2->assistant_text, m1.at(id)->assistant_text);
    EXPECT_EQ(r2->user_text, m3.at(id)->user_text);
    EXPECT_NE(r2->user_text, m1.at(id)->user_text);
    EXPECT_NE(r2->assistant_text, m3.at(id)->assistant_text);
  }
}

TEST(Assemble, MissingOrBlankGeneration) {
  const DatasetSplit train = testing::SyntheticSplit("train", 30, 1);
  const DatasetSplit eval = testing::SyntheticSplit("test", 30, 2);
  std::vector<corpus::Tweet> all(train.tweets().begin(), train.tweets().end());
  all.insert(all.end(), eval.tweets().begin(), eval.tweets().end());
  GenerationSets gens = testing::SyntheticGenerations(all);
  gens.no_label.erase(train.tweets()[4].id);
  try {
    assemble(ExperimentVariant::Builtin("exp1"), train, eval, gens);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kMissingGeneration);
    EXPECT_NE(std::string(e.what()).find(train.tweets()[4].id), std::string::npos);
  }
  // exp3 does not read no-label targets.
  EXPECT_NO_THROW(assemble(ExperimentVariant::Builtin("exp3"), train, eval, gens));
  gens.label_aware[eval.tweets()[0].id] = "   ";
  EXPECT_THROW(assemble(ExperimentVariant::Builtin("exp3"), train, eval, gens), Error);
}

TEST(ChatMl, WireFormat) {
  const ChatRecord r{"user says", "assistant says", "t1", "exp2"};
  EXPECT_EQ(record_to_json(r).dump(),
            R"({"messages":[{"content":"user says","role":"user"},)"
            R"({"content":"assistant says","role":"assistant"}],)"
            R"("meta":{"tweet_id":"t1","variant":"exp2"}})");
  EXPECT_EQ(record_from_json(record_to_json(r)), r);
  EXPECT_THROW(record_from_json(Json::parse(R"({"messages":[]})")), Error);
  EXPECT_THROW(record_from_json(Json::parse(
                   R"({"messages":[{"role":"assistant","content":"a"},{"role":"user","content":"u"}]})")),
               Error);
}

TEST(ChatMl, ExportImportRoundTrip) {
  testing::TempDir dir("distill");
  const Fixture& f = Full();
  const Assembly a = assemble(ExperimentVariant::Builtin("exp2"), f.train, f.eval, f.gens);
  std::vector<ChatRecord> fifty(a.train.begin(), a.train.begin() + 50);
  fifty[3].user_text += "\nwith a newline, \"quotes\" and unicode \xc3\xa9";

  EXPECT_EQ(export_chatml(fifty, dir / "one.jsonl"), 50u);
  const auto back = import_chatml(dir / "one.jsonl");
  EXPECT_EQ(back, fifty);
  EXPECT_EQ(export_chatml(back, dir / "two.jsonl"), 50u);
  EXPECT_EQ(ReadText(dir / "one.jsonl"), ReadText(dir / "two.jsonl"));

  const std::string text = ReadText(dir / "one.jsonl");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 50);

  std::vector<ChatRecord> three(a.eval.begin(), a.eval.begin() + 3);
  EXPECT_EQ(export_chatml(three, dir / "three.jsonl"), 3u);
  EXPECT_EQ(import_chatml(dir / "three.jsonl"), three);
}

TEST(ChatMl, RejectsEmpty) {
  testing::TempDir dir("distill-empty");
  EXPECT_THROW(export_chatml({}, dir / "x.jsonl"), Error);
  EXPECT_THROW(export_chatml({{"u", "", "t", "exp1"}}, dir / "x.jsonl"), Error);
  EXPECT_FALSE(std::filesystem::exists(dir / "x.jsonl"));
}

}  // namespace
}  // namespace counterarg::distill

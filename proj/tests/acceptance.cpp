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

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "counterarg/distill.hpp"
#include "counterarg/error.hpp"
#include "counterarg/judge.hpp"
#include "counterarg/labeling.hpp"
#include "counterarg/metrics.hpp"
#include "counterarg/pipeline.hpp"
#include "counterarg/promptkit.hpp"
#include "counterarg/survey.hpp"
#include "counterarg/tokenize.hpp"
#include "support/fixtures.hpp"

namespace {

using namespace counterarg;  // NOLINT
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

const fs::path kSource = COUNTERARG_SOURCE_DIR;

// Collects failed checks for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++count_;
  }
  bool ok() const { return count_ == 0; }
  std::string summary() const {
    std::string s = std::to_string(count_) + " failed check(s): ";
    for (std::size_t i = 0; i < failures_.size(); ++i) s += (i ? "; " : "") + failures_[i];
    return s;
  }
  std::string note;

 private:
  std::vector<std::string> failures_;
  std::size_t count_ = 0;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Fixed(double v, int digits = 2) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::vector<std::vector<std::string>> ReadTokens(std::vector<std::string> texts) {
  std::vector<std::vector<std::string>> out;
  for (const auto& t : texts) out.push_back(Tokenize(t));
  return out;
}

// ---- criteria

void MetricOracles(Check& c) {
  const auto start = Clock::now();
  Rng rng(20260101);
  modelgw::OneHotEmbedder onehot({"a", "b", "c", "d", "e", "f"});
  for (int trial = 0; trial < 1000; ++trial) {
    const auto cand = testing::RandomTokens(rng, 1, 8, 4);
    const auto ref = testing::RandomTokens(rng, 2, 8, 4);
    c.expect(metrics::rouge2_tokens(cand, ref) == testing::OracleRouge2(cand, ref),
             "rouge2 trial " + std::to_string(trial));
    c.expect(metrics::rouge_l_tokens(cand, ref) == testing::OracleRougeL(cand, ref),
             "rougeL trial " + std::to_string(trial));

    // BERTScore with the one-hot embedder; letters beyond the vocabulary are
    // out-of-vocabulary zero vectors.
    const auto bc = testing::RandomTokens(rng, 1, 8, 8);
    const auto br = testing::RandomTokens(rng, 1, 8, 8);
    const std::string cs = Join(bc, " "), rs = Join(br, " ");
    const metrics::ScorePair got = metrics::bert_score(cs, rs, onehot);
    std::vector<std::vector<double>> cv, rv;
    for (const auto& t : onehot.embed_tokens(cs)) cv.push_back(t.vector.values);
    for (const auto& t : onehot.embed_tokens(rs)) rv.push_back(t.vector.values);
    const metrics::ScorePair want = testing::OracleBert(cv, rv);
    c.expect(std::abs(got.precision - want.precision) <= 1e-12 &&
                 std::abs(got.recall - want.recall) <= 1e-12 &&
                 std::abs(got.f1 - want.f1) <= 1e-12,
             "bertscore trial " + std::to_string(trial));
  }
  const double secs = Seconds(start);
  c.expect(secs < 10.0, "runtime " + Fixed(secs) + " s >= 10 s");
  c.note = "3000 comparisons in " + Fixed(secs, 3) + " s";
}

void WorkedMetricValues(Check& c) {
  const auto r2 = metrics::rouge2("a b c d", "a b c e");
  c.expect(r2.precision == 2.0 / 3.0 && r2.recall == 2.0 / 3.0 && r2.f1 == 2.0 / 3.0,
           "rouge2 2/3");
  const auto rl = metrics::rouge_l("a b c d", "a c b d");
  c.expect(rl.precision == 0.75 && rl.recall == 0.75 && rl.f1 == 0.75, "rougeL 0.75");
  modelgw::OneHotEmbedder onehot({"a", "b", "c"});
  const auto bs = metrics::bert_score("a b", "a c", onehot);
  c.expect(bs.precision == 0.5 && bs.recall == 0.5 && bs.f1 == 0.5, "bertscore 0.5");
  c.note = "2/3, 0.75, 0.5 exact";
}

void PromptGoldens(Check& c) {
  corpus::Tweet t;
  t.id = "pence";
  t.text =
      "@Mike_Pence @realDonaldTrump @pfizer The only way a \"vaccine\" could have been "
      "formulated in this amount of time is if the virus was man made to begin with.";
  t.labels = corpus::LabelSet::FromKeys(std::vector<std::string>{"conspiracy", "rushed"});
  const fs::path golden = kSource / "tests" / "golden";
  const std::string no_label = promptkit::render_no_label(t, promptkit::kTable).text;
  const std::string aware = promptkit::render_label_aware(t, corpus::load_catalog()).text;
  c.expect(no_label == ReadText(golden / "no_label_prompt.txt"), "no-label golden");
  c.expect(aware == ReadText(golden / "label_aware_prompt.txt"), "label-aware golden");
  c.expect(no_label.rfind("Generate a strong counter-argument for the tweet.", 0) == 0,
           "no-label prefix");
  c.expect(aware.rfind("Generate a strong counter-argument for the tweet. Talk about conspiracy "
                       "theories suggesting hidden motives behind vaccination efforts and claims "
                       "that vaccines were approved or developed without sufficient testing.",
                       0) == 0,
           "label-aware prefix");
}

class Scaled : public modelgw::EmbeddingProvider {
 public:
  explicit Scaled(modelgw::EmbeddingProvider& inner) : inner_(inner) {}
  std::string name() const override { return "scaled"; }
  std::vector<modelgw::TokenEmbedding> embed_tokens(std::string_view t) override {
    auto v = inner_.embed_tokens(t);
    for (auto& x : v) {
      for (double& d : x.vector.values) d *= 3.0;
    }
    return v;
  }
  modelgw::EmbeddingVector embed_sentence(std::string_view t) override {
    auto v = inner_.embed_sentence(t);
    for (double& d : v.values) d *= 3.0;
    return v;
  }

 private:
  modelgw::EmbeddingProvider& inner_;
};

void LabelMatching(Check& c) {
  const auto& catalog = corpus::load_catalog();
  std::vector<std::string> descriptions;
  for (const auto& e : catalog.entries()) descriptions.emplace_back(e.description);
  modelgw::OneHotSentenceEmbedder emb(descriptions);
  Scaled scaled(emb);
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const auto p = labeling::match_descriptions(catalog[i].description, catalog, emb);
    c.expect(p.predicted.indices() == std::vector<std::size_t>{i},
             "single " + std::string(catalog[i].key));
    const auto q = labeling::match_descriptions(catalog[i].description, catalog, scaled);
    c.expect(q.predicted == p.predicted, "scaled single " + std::string(catalog[i].key));
    for (std::size_t j = i + 1; j < catalog.size(); ++j) {
      const std::string text = std::string(catalog[i].description) + ". " +
                               std::string(catalog[j].description) + ".";
      const auto two = labeling::match_descriptions(text, catalog, emb);
      c.expect(two.predicted == corpus::LabelSet::FromBits(
                                    static_cast<std::uint16_t>((1u << i) | (1u << j))),
               "pair " + std::to_string(i) + "," + std::to_string(j));
      const auto two_scaled = labeling::match_descriptions(text, catalog, scaled);
      c.expect(two_scaled.predicted == two.predicted, "scaled pair");
    }
  }
  // Scaling invariance under a dense embedder as well.
  modelgw::HashEmbedder hash(32, 1);
  Scaled hash_scaled(hash);
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto words = testing::RandomTokens(rng, 3, 12, 20);
    std::string text;
    for (std::size_t k = 0; k < words.size(); ++k) {
      text += words[k] + (k % 4 == 3 ? ". " : " ");
    }
    const auto a = labeling::match_descriptions(text, catalog, hash);
    const auto b = labeling::match_descriptions(text, catalog, hash_scaled);
    bool same = a.predicted == b.predicted && a.source_sentences.size() == b.source_sentences.size();
    for (std::size_t k = 0; same && k < a.source_sentences.size(); ++k) {
      same = a.source_sentences[k].label == b.source_sentences[k].label;
    }
    c.expect(same, "hash scaling trial " + std::to_string(trial));
  }
  c.note = "11 singles, 55 pairs, 200 scaled hash trials";
}

void LabelMetricsCriterion(Check& c) {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + UniformBelow(rng, 25);
    std::vector<corpus::LabelSet> pred, gold;
    for (std::size_t i = 0; i < n; ++i) {
      pred.push_back(testing::RandomLabelSet(rng));
      gold.push_back(testing::RandomLabelSet(rng));
    }
    const auto got = labeling::label_metrics(pred, gold);
    const auto want = testing::OracleLabelMetrics(pred, gold);
    c.expect(std::abs(got.f1_macro - want.f1_macro) <= 1e-12 &&
                 std::abs(got.f1_micro - want.f1_micro) <= 1e-12 &&
                 std::abs(got.accuracy_per_label_mean - want.accuracy_per_label_mean) <= 1e-12 &&
                 std::abs(got.accuracy_exact_match - want.accuracy_exact_match) <= 1e-12,
             "oracle trial " + std::to_string(trial));
  }
  const auto a = corpus::LabelSet::FromBits(1), b = corpus::LabelSet::FromBits(2);
  const std::vector<corpus::LabelSet> pred{a, a | b}, gold{a | b, b};
  labeling::MetricOptions two;
  two.label_count = 2;
  const auto m = labeling::label_metrics(pred, gold, two);
  c.expect(std::abs(m.f1_macro - 2.0 / 3.0) <= 1e-15, "hand macro");
  c.expect(std::abs(m.f1_micro - 2.0 / 3.0) <= 1e-15, "hand micro");
  c.note = "macro = micro = " + Fixed(m.f1_macro, 6);
}

void VotePipeline(Check& c) {
  // Ratio bins through the survey service with randomized positions.
  const auto ratio = testing::PublishedRatioChoices();
  survey::ServiceOptions opts;
  opts.token_seed = 1;
  opts.clock = [] { return std::int64_t{0}; };
  survey::SurveyService svc(opts);
  const auto tweets = testing::SyntheticTweets("vp", ratio.size(), corpus::Split::kTest, 3);
  std::vector<survey::AnnotationItem> items;
  for (const auto& t : tweets) items.push_back(survey::make_item(t, {"A " + t.id, "B " + t.id}));
  const std::string study = svc.create_study(items, {4, 99});
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < items.size(); ++i) index[items[i].item_id] = i;
  for (int k = 0; k < 4; ++k) {
    const std::string sess = svc.open_session(study, "ann" + std::to_string(k));
    for (std::size_t n = 0; n < items.size(); ++n) {
      const auto p = svc.next_presentation(sess).first;
      const survey::Side want = ratio[index.at(p.item_id)][k] == judge::Choice::kA
                                    ? survey::Side::kA
                                    : survey::Side::kB;
      svc.submit_vote(sess, p.nonce, survey::randomize(want, p.left_is), "j");
    }
  }
  const auto tally = svc.tally_study(study);
  c.expect(tally.bins.has_value(), "bins present");
  if (tally.bins) {
    for (std::size_t k = 0; k < 5; ++k) {
      c.expect(tally.bins->counts[k] == testing::kPublishedRatioCounts[k],
               "bin " + std::string(judge::RatioBins::Label(k)));
    }
  }

  // Vote-level shares.
  std::vector<judge::VoteTally> share_tallies;
  std::size_t votes = 0;
  const auto shares_fixture = testing::PublishedShareChoices();
  for (std::size_t i = 0; i < shares_fixture.size(); ++i) {
    share_tallies.push_back(judge::tally_choices(std::to_string(i), shares_fixture[i]));
    votes += shares_fixture[i].size();
  }
  const auto shares = judge::aggregate_shares(share_tallies);
  c.expect(votes == 400, "400 votes");
  c.expect(std::abs(shares.vote_level.a - 0.245) <= 1e-12, "share A");
  c.expect(std::abs(shares.vote_level.b - 0.555) <= 1e-12, "share B");
  c.expect(std::abs(shares.vote_level.equal - 0.200) <= 1e-12, "share Equal");

  // 10,000 random presentations.
  survey::SurveyService big(opts);
  const auto many = testing::SyntheticTweets("rt", 100, corpus::Split::kTest, 4);
  std::vector<survey::AnnotationItem> big_items;
  for (const auto& t : many) big_items.push_back(survey::make_item(t, {"A " + t.id, "B " + t.id}));
  const std::string big_study = big.create_study(big_items, {100, 5});
  Rng rng(5);
  std::size_t round_trips = 0;
  for (int k = 0; k < 100; ++k) {
    const std::string sess = big.open_session(big_study, "r" + std::to_string(k));
    for (int n = 0; n < 100; ++n) {
      const auto [p, view] = big.next_presentation(sess);
      const survey::Side want = UniformBelow(rng, 2) ? survey::Side::kA : survey::Side::kB;
      const auto pos = survey::randomize(want, p.left_is);
      const auto v = big.submit_vote(sess, p.nonce, pos, "j");
      const std::string& shown = pos == survey::Position::kLeft ? view.left_text : view.right_text;
      const bool ok = v.picked_identity == want &&
                      shown == (want == survey::Side::kA ? "A " : "B ") + p.item_id.substr(0) &&
                      survey::derandomize(survey::randomize(want, p.left_is), p.left_is) == want;
      round_trips += ok;
    }
  }
  c.expect(round_trips == 10000, std::to_string(round_trips) + "/10000 round trips");
  c.note = "bins 3/24/26/33/15 (sum 101), shares 24.5/55.5/20.0, " +
           std::to_string(round_trips) + " round trips";
}

void Sampling(Check& c) {
  for (std::uint64_t seed : {1u, 2u, 3u, 42u, 2024u}) {
    const auto split = testing::SyntheticSplit("train", 2000, seed);
    const auto sample = corpus::stratified_sample(split, 60, 40, seed);
    c.expect(sample.size() == 100, "size");
    std::size_t multi = 0;
    std::uint16_t covered = 0;
    for (const auto& t : sample) {
      multi += t.multi_labelled();
      covered |= t.labels.bits();
    }
    c.expect(multi == 60, "60 multi");
    c.expect(covered == (1u << corpus::kLabelCount) - 1, "all 11 labels");
    c.expect(corpus::stratified_sample(split, 60, 40, seed) == sample, "deterministic");
  }
  c.note = "5 seeds over 2000-tweet pools";
}

void DistillExport(Check& c) {
  const auto train = testing::SyntheticSplit("train", 2000, 11);
  const auto eval = testing::SyntheticSplit("test", 990, 12);
  std::vector<corpus::Tweet> all(train.tweets().begin(), train.tweets().end());
  all.insert(all.end(), eval.tweets().begin(), eval.tweets().end());
  const auto gens = testing::SyntheticGenerations(all);
  const auto& catalog = corpus::load_catalog();
  testing::TempDir dir("acceptance-distill");
  for (const char* id : {"exp1", "exp2", "exp3"}) {
    const auto variant = distill::ExperimentVariant::Builtin(id);
    const auto a = distill::assemble(variant, train, eval, gens);
    c.expect(a.train.size() == 2000, std::string(id) + " train size");
    c.expect(a.eval.size() == 990, std::string(id) + " eval size");
    const bool label_prompts = std::string(id) != "exp1";
    for (std::size_t i = 0; i < a.train.size(); ++i) {
      const auto& t = train.tweets()[i];
      const auto& rec = a.train[i];
      const std::string joined = promptkit::JoinDescriptions(t.labels, catalog);
      c.expect((rec.user_text.find(joined) != std::string::npos) == label_prompts,
               std::string(id) + " prompt kind for " + t.id);
      const auto& source = variant.train_source == distill::TargetSource::kNoLabel
                               ? gens.no_label
                               : gens.label_aware;
      c.expect(rec.assistant_text == source.at(t.id), std::string(id) + " target for " + t.id);
    }
    for (std::size_t i = 0; i < a.eval.size(); ++i) {
      c.expect(a.eval[i].assistant_text == gens.label_aware.at(eval.tweets()[i].id),
               std::string(id) + " eval target");
    }
    const fs::path one = dir / (std::string(id) + ".1.jsonl");
    const fs::path two = dir / (std::string(id) + ".2.jsonl");
    distill::export_chatml(a.train, one);
    const auto back = distill::import_chatml(one);
    c.expect(back == a.train, std::string(id) + " import equality");
    distill::export_chatml(back, two);
    c.expect(ReadText(one) == ReadText(two), std::string(id) + " byte identity");
  }
  c.note = "3 x (2000 + 990) records";
}

int RunCli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(COUNTERARG_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> Snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = ReadText(e.path());
  }
  return out;
}

struct EndToEnd {
  std::unique_ptr<testing::TempDir> dir;
  bool ran = false;
};

EndToEnd& Shared() {
  static EndToEnd e;
  return e;
}

void EndToEndMockRun(Check& c) {
  EndToEnd& e = Shared();
  e.dir = std::make_unique<testing::TempDir>("acceptance-e2e");
  const std::string config = (kSource / "configs" / "mock_run.json").string();
  const auto start = Clock::now();
  const int first = RunCli("--config " + config + " --out " + (*e.dir / "a").string() + " run",
                           *e.dir / "a.log");
  const double secs = Seconds(start);
  const int second = RunCli("--config " + config + " --out " + (*e.dir / "b").string() + " run",
                            *e.dir / "b.log");
  c.expect(first == 0, "first run exit " + std::to_string(first));
  c.expect(second == 0, "second run exit " + std::to_string(second));
  if (first != 0 || second != 0) return;
  e.ran = true;
  const auto a = Snapshot(*e.dir / "a"), b = Snapshot(*e.dir / "b");
  c.expect(a == b, "fresh runs differ byte-wise");
  const Json report = Json::parse(ReadText(*e.dir / "a" / "report.json"));
  std::size_t stages = 0;
  for (const Json& s : report["stages"]) {
    ++stages;
    c.expect(s["failures"].empty(), s["stage"].get<std::string>() + " has failures");
    c.expect(s["outputs"].get<std::size_t>() > 0, s["stage"].get<std::string>() + " empty");
  }
  c.expect(stages == pipeline::kAllStages.size(), "stage count");
  // A rerun resumes and leaves every file untouched.
  const int third = RunCli("--config " + config + " --out " + (*e.dir / "a").string() + " run",
                           *e.dir / "c.log");
  c.expect(third == 0 && Snapshot(*e.dir / "a") == a, "resume changed outputs");
  c.expect(secs < 30.0, "runtime " + Fixed(secs) + " s");
  c.note = std::to_string(stages) + " stages, " + std::to_string(a.size()) + " files, " +
           Fixed(secs, 2) + " s";
}

void NotReproducible(Check& c) {
  c.note =
      "fine-tuned SLM tables, label-prediction model results, CoT comparison and the "
      "human-vs-LLM BERTScore table need GPU training or paid evaluation and are NOT "
      "reproduced; checked instead that metrics recompute from generation files";
  EndToEnd& e = Shared();
  c.expect(e.ran, "needs the end-to-end run outputs");
  if (!e.ran) return;
  const fs::path run = *e.dir / "a";
  std::vector<Json> cands, refs;
  for (const Json& row : ReadJsonl(run / "generate" / "generations.jsonl")) {
    Json r{{"id", row["tweet_id"]}, {"text", row["text"]}};
    (row["variant"] == "no_label" ? cands : refs).push_back(r);
  }
  WriteJsonl(*e.dir / "cands.jsonl", cands);
  WriteJsonl(*e.dir / "refs.jsonl", refs);
  const std::string config = (kSource / "configs" / "mock_run.json").string();
  const int code = RunCli("--config " + config + " --out " + (*e.dir / "rescored.jsonl").string() +
                              " score --candidates " + (*e.dir / "cands.jsonl").string() +
                              " --references " + (*e.dir / "refs.jsonl").string() +
                              " --embedder embed",
                          *e.dir / "score.log");
  c.expect(code == 0, "score exit " + std::to_string(code));
  if (code != 0) return;
  std::map<std::string, Json> original;
  for (const Json& row : ReadJsonl(run / "score" / "scores.jsonl")) original[row["id"]] = row;
  const auto rescored = ReadJsonl(*e.dir / "rescored.jsonl");
  c.expect(rescored.size() == original.size(), "row count");
  for (const Json& row : rescored) {
    auto it = original.find(row["id"]);
    c.expect(it != original.end() && it->second == row,
             "row " + row["id"].get<std::string>() + " differs");
  }
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Check&)> fn;
  };
  const std::vector<Criterion> criteria{
      {"metric oracle equivalence", MetricOracles},
      {"worked metric values", WorkedMetricValues},
      {"prompt golden files", PromptGoldens},
      {"label matching", LabelMatching},
      {"label metrics", LabelMetricsCriterion},
      {"vote pipeline fidelity", VotePipeline},
      {"stratified sampling", Sampling},
      {"distill export", DistillExport},
      {"end-to-end mock run", EndToEndMockRun},
      {"desk-scale limits stated; metrics recompute from files", NotReproducible},
  };
  int failed = 0;
  for (const auto& criterion : criteria) {
    Check check;
    try {
      criterion.fn(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    if (check.ok()) {
      std::cout << "PASS  " << criterion.name;
      if (!check.note.empty()) std::cout << "  (" << check.note << ")";
      std::cout << "\n";
    } else {
      ++failed;
      std::cout << "FAIL  " << criterion.name << "  " << check.summary() << "\n";
    }
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}

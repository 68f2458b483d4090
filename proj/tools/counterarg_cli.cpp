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

// counterarg: command-line front end.
//
// Exit codes: 0 success, 1 other error, 2 usage or configuration error,
// 3 pipeline stage failure.

#include <csignal>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "counterarg/corpus.hpp"
#include "counterarg/distill.hpp"
#include "counterarg/error.hpp"
#include "counterarg/judge.hpp"
#include "counterarg/labeling.hpp"
#include "counterarg/metrics.hpp"
#include "counterarg/pipeline.hpp"
#include "counterarg/promptkit.hpp"
#include "counterarg/survey.hpp"

namespace ca = counterarg;
namespace fs = std::filesystem;
using ca::Json;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string config;
  std::string out;
};

// Writes JSONL to `out`, or to stdout when empty.
void Emit(const std::vector<Json>& rows, const std::string& out) {
  if (out.empty() || out == "-") {
    for (const Json& row : rows) std::cout << row.dump() << '\n';
  } else {
    ca::WriteJsonl(out, rows);
    std::cerr << "wrote " << rows.size() << " record(s) to " << out << '\n';
  }
}

std::optional<ca::pipeline::RunConfig> MaybeConfig(const Globals& g) {
  if (g.config.empty()) return std::nullopt;
  return ca::pipeline::RunConfig::Load(g.config);
}

// hash, onehot_catalog, or an embedding provider id from --config.
std::shared_ptr<ca::modelgw::EmbeddingProvider> Embedder(const Globals& g,
                                                         const std::string& name,
                                                         std::size_t dim) {
  if (name == "hash") return std::make_shared<ca::modelgw::HashEmbedder>(dim, g.seed);
  if (auto cfg = MaybeConfig(g)) {
    for (const auto& p : cfg->providers) {
      if (p.id == name) return ca::pipeline::MakeEmbeddingProvider(p);
    }
  }
  ca::pipeline::ProviderConfig p;
  p.id = name;
  p.type = name;
  return ca::pipeline::MakeEmbeddingProvider(p);
}

std::unique_ptr<ca::modelgw::Gateway> GatewayFromConfig(const Globals& g) {
  auto cfg = MaybeConfig(g);
  if (!cfg) throw ca::Error(ca::Errc::kConfigInvalid, "--config is required");
  auto gw = std::make_unique<ca::modelgw::Gateway>(cfg->concurrency, cfg->retry);
  for (const auto& p : cfg->providers) {
    if (p.is_text()) {
      gw->register_text(p.id, ca::pipeline::MakeTextProvider(p), p.requests_per_second);
    } else {
      gw->register_embedding(p.id, ca::pipeline::MakeEmbeddingProvider(p));
    }
  }
  return gw;
}

std::string Str(const Json& row, const char* key) {
  if (!row.contains(key) || !row[key].is_string()) {
    throw ca::Error(ca::Errc::kMalformedRecord, std::string("missing string field ") + key);
  }
  return row[key].get<std::string>();
}

void PrintMeans(const std::map<std::string, double>& means) {
  for (const auto& [key, value] : means) {
    const bool rouge = key.rfind("rouge", 0) == 0;
    std::cout << std::left << std::setw(26) << key << std::fixed
              << std::setprecision(rouge ? 2 : 4) << (rouge ? value * 100 : value) << '\n';
  }
}

ca::survey::HttpServer* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counter-argument generation and evaluation toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every randomized step")->default_val(0);
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--out", g.out, "Output file or directory");

  // ---- corpus
  auto* corpus_cmd = app.add_subcommand("corpus", "Dataset ingestion and sampling");
  corpus_cmd->require_subcommand(1);
  std::string input, split = "train";
  auto* ingest_cmd = corpus_cmd->add_subcommand("ingest", "Validate and normalize a JSONL split");
  ingest_cmd->add_option("--input,--path", input)->required();
  ingest_cmd->add_option("--split", split);
  std::size_t n_multi = 60, n_single = 40;
  auto* sample_cmd = corpus_cmd->add_subcommand("sample", "Stratified sample");
  sample_cmd->add_option("--input,--path", input)->required();
  sample_cmd->add_option("--split", split);
  sample_cmd->add_option("--multi", n_multi);
  sample_cmd->add_option("--single", n_single);

  // ---- prompt
  auto* prompt_cmd = app.add_subcommand("prompt", "Prompt rendering");
  prompt_cmd->require_subcommand(1);
  std::string kind = "no_label", template_id, templates_file, examples_file;
  auto* render_cmd = prompt_cmd->add_subcommand("render", "Render prompts for a split");
  render_cmd->add_option("--input", input)->required();
  render_cmd->add_option("--split", split);
  render_cmd->add_option("--variant", kind,
                         "no_label, label_aware, cot_zero_shot, cot_few_shot, label_prediction");
  render_cmd->add_option("--template", template_id);
  render_cmd->add_option("--templates", templates_file, "Extra templates (JSON)");
  render_cmd->add_option("--examples", examples_file,
                         "Few-shot examples (JSONL: tweet, labels, counter_argument)");

  // ---- generate
  std::string prompts_file, model;
  auto* gen_cmd = app.add_subcommand("generate", "Run prompts through a configured model");
  gen_cmd->add_option("--prompts", prompts_file)->required();
  gen_cmd->add_option("--model", model)->required();

  // ---- label
  auto* label_cmd = app.add_subcommand("label", "Label prediction by description matching");
  label_cmd->require_subcommand(1);
  std::string embedder = "hash";
  std::size_t dim = 64;
  std::optional<double> floor;
  auto* match_cmd = label_cmd->add_subcommand("match", "Map generated descriptions to labels");
  match_cmd->add_option("--input,--in", input, "JSONL with tweet_id and text")->required();
  match_cmd->add_option("--embedder", embedder, "hash, onehot_catalog or a provider id");
  match_cmd->add_option("--dim", dim);
  match_cmd->add_option("--floor", floor);
  std::string pred_file, gold_file;
  bool skip_absent = false;
  auto* lscore_cmd = label_cmd->add_subcommand("score", "Multi-label metrics against gold");
  lscore_cmd->add_option("--pred", pred_file)->required();
  lscore_cmd->add_option("--gold", gold_file)->required();
  lscore_cmd->add_flag("--skip-absent", skip_absent);

  // ---- score
  std::string pairs_file, metric_list = "rouge2,rougeL,bertscore";
  auto* score_cmd = app.add_subcommand("score", "ROUGE-2, ROUGE-L and BERTScore");
  std::string cand_file, ref_file;
  auto* pairs_opt =
      score_cmd->add_option("--pairs", pairs_file, "JSONL with id, candidate, reference");
  auto* cand_opt = score_cmd->add_option("--candidates", cand_file, "JSONL with id, text");
  score_cmd->add_option("--references", ref_file, "JSONL with id, text")->needs(cand_opt);
  cand_opt->excludes(pairs_opt);
  score_cmd->add_option("--metrics", metric_list);
  score_cmd->add_option("--embedder", embedder);
  score_cmd->add_option("--dim", dim);

  // ---- judge
  auto* judge_cmd = app.add_subcommand("judge", "Pairwise LLM judging");
  judge_cmd->require_subcommand(1);
  int runs = 4;
  auto* jrun_cmd = judge_cmd->add_subcommand("run", "Judge argument pairs");
  jrun_cmd->add_option("--pairs", pairs_file, "JSONL with item_id, tweet, arg_a, arg_b")
      ->required();
  jrun_cmd->add_option("--runs", runs);
  jrun_cmd->add_option("--model", model)->required();
  std::string votes_file, tallies_file;
  auto* jtally_cmd = judge_cmd->add_subcommand("tally", "Majority vote per item");
  jtally_cmd->add_option("--votes", votes_file)->required();
  auto* jbins_cmd = judge_cmd->add_subcommand("bins", "B:A ratio bins and shares");
  jbins_cmd->add_option("--tallies", tallies_file)->required();

  // ---- survey
  auto* survey_cmd = app.add_subcommand("survey", "Human preference study service");
  survey_cmd->require_subcommand(1);
  std::string host = "127.0.0.1", study_file, log_file, study_id;
  int port = 8080, annotators = 4;
  auto* serve_cmd = survey_cmd->add_subcommand("serve", "Serve the survey HTTP API");
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--study", study_file, "Create a study from this items file");
  serve_cmd->add_option("--study-id", study_id);
  serve_cmd->add_option("--annotators", annotators);
  serve_cmd->add_option("--log", log_file, "Event log (replayed on start)");
  auto* stally_cmd = survey_cmd->add_subcommand("tally", "Tally a study from its event log");
  stally_cmd->add_option("--log", log_file)->required();
  stally_cmd->add_option("--study", study_id)->required();

  // ---- distill
  auto* distill_cmd = app.add_subcommand("distill", "Fine-tuning dataset export");
  distill_cmd->require_subcommand(1);
  std::string variant = "exp3", train_file, test_file, gens_file;
  auto* assemble_cmd = distill_cmd->add_subcommand("assemble", "Assemble one experiment");
  assemble_cmd->add_option("--variant", variant);
  assemble_cmd->add_option("--train", train_file)->required();
  assemble_cmd->add_option("--test", test_file)->required();
  assemble_cmd->add_option("--generations", gens_file,
                           "JSONL with tweet_id, variant (no_label|label_aware), text")
      ->required();

  // ---- run
  std::string stages;
  auto* run_cmd = app.add_subcommand("run", "Run the configured pipeline");
  run_cmd->add_option("--stages", stages, "Comma-separated subset of stages");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (ingest_cmd->parsed()) {
      auto ds = ca::corpus::ingest(input, split);
      const auto c = ds.counts();
      std::cerr << ds.name() << ": " << c.total << " tweets (" << c.multi << " multi, "
                << c.single << " single)\n";
      std::vector<Json> rows;
      for (const auto& t : ds.tweets()) rows.push_back(ca::corpus::tweet_to_json(t));
      Emit(rows, g.out);
    } else if (sample_cmd->parsed()) {
      auto ds = ca::corpus::ingest(input, split);
      std::vector<Json> rows;
      for (const auto& t : ca::corpus::stratified_sample(ds, n_multi, n_single, g.seed)) {
        rows.push_back(ca::corpus::tweet_to_json(t));
      }
      Emit(rows, g.out);
    } else if (render_cmd->parsed()) {
      ca::promptkit::TemplateRegistry registry;
      if (!templates_file.empty()) registry.load_file(templates_file);
      auto k = ca::promptkit::ParseKind(kind);
      if (!k) throw ca::Error(ca::Errc::kInvalidArgument, "unknown variant " + kind);
      std::vector<ca::promptkit::CotExample> examples;
      if (!examples_file.empty()) {
        for (const Json& row : ca::ReadJsonl(examples_file)) {
          examples.push_back({Str(row, "tweet"), row.at("labels").get<std::vector<std::string>>(),
                              Str(row, "counter_argument")});
        }
      }
      std::vector<Json> rows;
      const auto dataset = ca::corpus::ingest(input, split);
      for (const auto& t : dataset.tweets()) {
        ca::promptkit::PromptInstance p;
        using PK = ca::promptkit::PromptKind;
        switch (*k) {
          case PK::kNoLabel:
            p = ca::promptkit::render_no_label(
                t, template_id.empty() ? std::string(ca::promptkit::kBasic) : template_id,
                registry);
            break;
          case PK::kLabelAware:
            p = ca::promptkit::render_label_aware(
                t, ca::corpus::load_catalog(),
                template_id.empty() ? std::string(ca::promptkit::kDefaultLabelAware)
                                    : template_id,
                registry);
            break;
          case PK::kCotZeroShot:
          case PK::kCotFewShot:
            p = ca::promptkit::render_cot(
                t, *k == PK::kCotZeroShot ? ca::promptkit::CotMode::kZeroShot
                                          : ca::promptkit::CotMode::kFewShot,
                t.labels.keys(), examples, registry);
            break;
          case PK::kLabelPrediction:
            p = ca::promptkit::render_label_prediction(t, registry);
            break;
        }
        rows.push_back(ca::promptkit::prompt_to_json(p));
      }
      Emit(rows, g.out);
    } else if (gen_cmd->parsed()) {
      auto gw = GatewayFromConfig(g);
      std::vector<ca::modelgw::GenerationRequest> requests;
      for (const Json& row : ca::ReadJsonl(prompts_file)) {
        ca::modelgw::GenerationRequest req;
        req.prompt = ca::promptkit::prompt_from_json(row);
        req.model_id = model;
        req.seed = static_cast<std::int64_t>(
            ca::MixSeed(g.seed, req.prompt.tweet_id + "/" +
                                    std::string(ca::promptkit::KindName(req.prompt.variant.kind))) >>
            1);
        requests.push_back(std::move(req));
      }
      std::vector<Json> rows;
      int failed = 0;
      for (const auto& o : gw->generate_all(requests)) {
        if (o.record) {
          rows.push_back(ca::modelgw::record_to_json(*o.record));
        } else {
          ++failed;
          std::cerr << "failed: " << o.error->what() << '\n';
        }
      }
      Emit(rows, g.out);
      if (failed > 0) return 1;
    } else if (match_cmd->parsed()) {
      auto emb = Embedder(g, embedder, dim);
      std::vector<Json> rows;
      for (const Json& row : ca::ReadJsonl(input)) {
        auto p = ca::labeling::match_descriptions(Str(row, "text"), ca::corpus::load_catalog(),
                                                  *emb, {floor}, Str(row, "tweet_id"));
        rows.push_back(ca::labeling::prediction_to_json(p));
      }
      Emit(rows, g.out);
    } else if (lscore_cmd->parsed()) {
      auto gold = ca::corpus::ingest(gold_file, "gold");
      std::vector<ca::corpus::LabelSet> pred_sets, gold_sets;
      for (const Json& row : ca::ReadJsonl(pred_file)) {
        auto p = ca::labeling::prediction_from_json(row);
        const ca::corpus::Tweet* t = gold.find(p.tweet_id);
        if (!t) throw ca::Error(ca::Errc::kNotFound, "no gold labels for " + p.tweet_id);
        pred_sets.push_back(p.predicted);
        gold_sets.push_back(t->labels);
      }
      ca::labeling::MetricOptions opts;
      opts.skip_absent = skip_absent;
      std::cout << ca::labeling::metrics_to_json(
                       ca::labeling::label_metrics(pred_sets, gold_sets, opts))
                       .dump(2)
                << '\n';
    } else if (score_cmd->parsed()) {
      std::vector<ca::metrics::Metric> ms;
      for (const std::string& name : ca::SplitCommaList(metric_list)) {
        auto m = ca::metrics::ParseMetric(name);
        if (!m) throw ca::Error(ca::Errc::kInvalidArgument, "unknown metric " + name);
        ms.push_back(*m);
      }
      std::vector<ca::metrics::TextPair> pairs;
      if (!pairs_file.empty()) {
        for (const Json& row : ca::ReadJsonl(pairs_file)) {
          pairs.push_back({Str(row, "id"), Str(row, "candidate"), Str(row, "reference")});
        }
      } else if (!cand_file.empty() && !ref_file.empty()) {
        std::map<std::string, std::string> refs;
        for (const Json& row : ca::ReadJsonl(ref_file)) refs[Str(row, "id")] = Str(row, "text");
        for (const Json& row : ca::ReadJsonl(cand_file)) {
          auto it = refs.find(Str(row, "id"));
          if (it == refs.end()) {
            throw ca::Error(ca::Errc::kNotFound, "no reference for " + Str(row, "id"));
          }
          pairs.push_back({it->first, Str(row, "text"), it->second});
        }
      } else {
        throw ca::Error(ca::Errc::kConfigInvalid, "give --pairs or --candidates with --references");
      }
      auto emb = Embedder(g, embedder, dim);
      auto scores = ca::metrics::score_corpus(pairs, ms, emb.get());
      std::vector<Json> rows;
      for (const auto& r : scores.rows) rows.push_back(ca::metrics::pair_scores_to_json(r));
      if (!g.out.empty()) Emit(rows, g.out);
      PrintMeans(scores.means);
      if (scores.failures > 0) std::cerr << scores.failures << " pair(s) not scored\n";
    } else if (jrun_cmd->parsed()) {
      auto gw = GatewayFromConfig(g);
      ca::judge::JudgeOptions opts;
      opts.model_id = model;
      opts.runs = runs;
      opts.seed = g.seed;
      std::vector<Json> rows;
      for (const Json& row : ca::ReadJsonl(pairs_file)) {
        for (const auto& v : ca::judge::judge_pair(Str(row, "item_id"), Str(row, "tweet"),
                                                   Str(row, "arg_a"), Str(row, "arg_b"), *gw,
                                                   opts)) {
          rows.push_back(ca::judge::vote_to_json(v));
        }
      }
      Emit(rows, g.out);
    } else if (jtally_cmd->parsed()) {
      std::map<std::string, std::vector<ca::judge::JudgeVote>> by_item;
      std::vector<std::string> order;
      for (const Json& row : ca::ReadJsonl(votes_file)) {
        auto v = ca::judge::vote_from_json(row);
        if (!by_item.contains(v.item_id)) order.push_back(v.item_id);
        by_item[v.item_id].push_back(std::move(v));
      }
      std::vector<Json> rows;
      for (const auto& id : order) {
        rows.push_back(ca::judge::tally_to_json(ca::judge::majority(by_item[id])));
      }
      Emit(rows, g.out);
    } else if (jbins_cmd->parsed()) {
      std::vector<ca::judge::VoteTally> tallies;
      for (const Json& row : ca::ReadJsonl(tallies_file)) {
        tallies.push_back(ca::judge::tally_from_json(row));
      }
      Json out{{"shares", ca::judge::shares_to_json(ca::judge::aggregate_shares(tallies))}};
      try {
        out["bins"] = ca::judge::bins_to_json(ca::judge::bin_ratios(tallies));
      } catch (const ca::Error& e) {
        if (e.code() != ca::Errc::kBinningUnsupported) throw;
        out["bins"] = nullptr;
      }
      std::cout << out.dump(2) << '\n';
    } else if (serve_cmd->parsed()) {
      ca::survey::ServiceOptions opts;
      if (!log_file.empty()) opts.log_path = log_file;
      ca::survey::SurveyService service(opts);
      if (!study_file.empty()) {
        ca::survey::StudyConfig sc;
        sc.annotators_per_item = annotators;
        sc.seed = g.seed;
        std::optional<std::string> id;
        if (!study_id.empty()) id = study_id;
        const auto ids = service.study_ids();
        if (id && std::find(ids.begin(), ids.end(), *id) != ids.end()) {
          std::cerr << "study " << *id << " restored from log\n";
        } else {
          std::cerr << "created study "
                    << service.create_study(ca::survey::read_study_file(study_file), sc, id)
                    << '\n';
        }
      }
      ca::survey::HttpServer server(service);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
      });
      std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
      });
      std::cerr << "listening on http://" << host << ":" << bound << '\n';
      server.listen();
      g_server = nullptr;
    } else if (stally_cmd->parsed()) {
      if (!fs::exists(log_file)) {
        throw ca::Error(ca::Errc::kMissingFile, log_file);
      }
      ca::survey::ServiceOptions opts;
      opts.log_path = log_file;
      ca::survey::SurveyService service(opts);
      std::cout << ca::survey::study_tally_to_json(service.tally_study(study_id)).dump(2)
                << '\n';
    } else if (assemble_cmd->parsed()) {
      auto train = ca::corpus::ingest(train_file, "train");
      auto test = ca::corpus::ingest(test_file, "test");
      ca::distill::GenerationSets sets;
      for (const Json& row : ca::ReadJsonl(gens_file)) {
        const std::string v = Str(row, "variant");
        (v == "no_label" ? sets.no_label : sets.label_aware)[Str(row, "tweet_id")] =
            Str(row, "text");
      }
      auto a = ca::distill::assemble(ca::distill::ExperimentVariant::Builtin(variant), train,
                                     test, sets);
      const fs::path dir = g.out.empty() ? fs::path("distill") / variant : fs::path(g.out);
      ca::distill::export_chatml(a.train, dir / "train.chatml.jsonl");
      ca::distill::export_chatml(a.eval, dir / "eval.chatml.jsonl");
      std::cerr << variant << ": " << a.train.size() << " train, " << a.eval.size()
                << " eval records in " << dir.string() << '\n';
    } else if (run_cmd->parsed()) {
      if (g.config.empty()) throw ca::Error(ca::Errc::kConfigInvalid, "--config is required");
      auto cfg = ca::pipeline::RunConfig::Load(g.config);
      if (!g.out.empty()) cfg.output_dir = g.out;
      if (app.get_option("--seed")->count() > 0) cfg.seed = g.seed;
      if (!stages.empty()) {
        cfg.stages.clear();
        for (const std::string& name : ca::SplitCommaList(stages)) {
          auto st = ca::pipeline::ParseStage(name);
          if (!st) throw ca::Error(ca::Errc::kConfigInvalid, "unknown stage " + name);
          cfg.stages.push_back(*st);
        }
      }
      ca::pipeline::RunOptions opts;
      opts.log = &std::cerr;
      auto report = ca::pipeline::run(cfg, opts);
      for (const auto& s : report.stages) {
        if (s.stage == "score" || s.stage == "label" || s.stage == "judge") {
          std::cout << "[" << s.stage << "]\n";
          PrintMeans(s.means);
        }
      }
      const auto failures = report.failures();
      for (const auto& f : failures) {
        std::cerr << "failure " << f.stage << " " << f.item_id << ": " << f.error << '\n';
      }
      std::cerr << "report: " << (cfg.output_dir / "report.json").string() << '\n';
    }
  } catch (const ca::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ca::Errc::kConfigInvalid:
        return 2;
      case ca::Errc::kStageFailed:
        return 3;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

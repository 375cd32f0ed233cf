#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hnce/checkpoint.hpp"
#include "hnce/config.hpp"
#include "hnce/errors.hpp"
#include "hnce/retrieval.hpp"
#include "hnce/training.hpp"
#include "hnce/verify.hpp"

namespace {

using namespace hnce;
using nlohmann::json;

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;
};

struct Options {
  Common common;
  std::optional<std::string> sampler;
  std::optional<double> p;
  std::optional<std::size_t> k;
  std::optional<std::string> arch;
  std::optional<std::size_t> steps;
  std::optional<std::string> objective;
  std::size_t instances = 20;
  std::vector<std::string> checks;
  std::string model;
  std::string corpus_path;
  std::string trace_path;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON config file (see dump-config)");
  cmd->add_option("--seed", c.seed, "Run seed");
  cmd->add_option("--out", c.out, "Output path");
  cmd->add_option("--threads", c.threads, "Worker threads (default: machine parallelism)");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : RunConfig::load(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  cfg.propagate();
  return cfg;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

std::string sibling(const std::string& path, const std::string& tag) {
  const std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + "-" + tag + p.extension().string())).string();
}

ToyCorpus corpus_for(const Options& o, const RunConfig& cfg) {
  return o.corpus_path.empty() ? generate_toy_corpus(cfg.corpus) : ToyCorpus::load(o.corpus_path);
}

std::vector<LabelId> golds_of(const ToyCorpus& corpus, std::span<const std::size_t> ids) {
  std::vector<LabelId> g;
  g.reserve(ids.size());
  for (auto m : ids) g.push_back(corpus.golds[m]);
  return g;
}

void apply_sampler_flags(const Options& o, SamplerSpec& spec) {
  const double p = o.p.value_or(spec.hard_fraction);
  if (o.sampler) spec = SamplerSpec::parse(*o.sampler, p);
  else if (o.p) spec.hard_fraction = p;
}

int cmd_synth_bias(const Options& o) {
  auto cfg = resolve(o.common);
  auto& f = cfg.figure1;
  if (o.k) f.k = *o.k;
  if (o.steps) f.steps = *o.steps;
  if (o.objective) f.objective = parse_objective(*o.objective);
  if (o.p) f.probe.mixed_fraction = *o.p;
  const std::string out = o.common.out.empty() ? "trace.csv" : o.common.out;

  if (o.sampler) {
    // A single run with the requested sampler.
    const auto pop = build_synthetic_population(f.population);
    MlpScorer scorer(pop.input_count(), pop.label_count(), f.mlp);
    TrainConfig tc;
    tc.sampler = SamplerSpec::parse(*o.sampler, o.p.value_or(0.5));
    tc.k = f.k;
    tc.batch_size = f.batch_size;
    tc.epochs = f.steps;
    tc.steps_per_epoch = 1;
    tc.optimizer = f.optimizer;
    tc.objective = f.objective;
    tc.seed = f.seed;
    tc.probe = f.probe;
    tc.threads = f.threads;
    tc.record_wall_time = f.record_wall_time;
    const auto trace = train(scorer, TrainingData{&pop, {}}, tc);
    write_trace_csv(out, trace);
    const auto& last = trace.records.back();
    std::printf("sampler=%s steps=%zu ce_exact=%.6g nce_estimate=%.6g trace=%s\n", trace.sampler.c_str(),
                trace.records.size(), last.ce_exact, last.nce_estimate, out.c_str());
    return 0;
  }
  const auto result = run_figure1(f);
  const std::string random_out = sibling(out, "random");
  write_trace_csv(out, result.hard);
  write_trace_csv(random_out, result.random);
  const auto s = summarize_figure1(result);
  std::printf("last-quartile means (hard run / random run)\n");
  std::printf("  ce_exact      %.6g / %.6g\n", s.hard_ce, s.random_ce);
  std::printf("  nce_estimate  %.6g / %.6g\n", s.hard_nce, s.random_nce);
  std::printf("  own bias norm %.6g / %.6g\n", s.hard_bias, s.random_bias);
  std::printf("traces: %s %s\n", out.c_str(), random_out.c_str());
  return 0;
}

int cmd_verify(const Options& o) {
  auto cfg = resolve(o.common);
  const auto checks = verify_theorems(cfg.seed, o.instances);
  std::ostringstream table;
  table << "# seed=" << cfg.seed << "\n";
  table << "check,instances,max_deviation,tolerance,status\n";
  bool ok = true;
  for (const auto& name : o.checks) {
    const bool known = std::any_of(checks.begin(), checks.end(), [&](const OracleCheck& c) { return c.name == name; });
    if (!known) throw ConfigError("unknown check: " + name);
  }
  for (const auto& c : checks) {
    if (!o.checks.empty() && std::find(o.checks.begin(), o.checks.end(), c.name) == o.checks.end()) continue;
    char dev[32], tol[32];
    std::snprintf(dev, sizeof dev, "%.3e", c.max_deviation);
    std::snprintf(tol, sizeof tol, "%.0e", c.tolerance);
    table << c.name << ',' << c.instances << ',' << dev << ',' << tol << ',' << (c.passed() ? "ok" : "FAIL") << "\n";
    ok = ok && c.passed();
  }
  std::cout << table.str();
  if (!o.common.out.empty()) open_out(o.common.out) << table.str();
  if (!ok) throw NumericalError("oracle deviations exceed tolerance");
  return 0;
}

int cmd_train_retriever(const Options& o) {
  auto cfg = resolve(o.common);
  auto& r = cfg.retriever;
  if (o.arch) r.arch = ArchitectureSpec::parse(*o.arch);
  if (o.k) r.k = *o.k;
  apply_sampler_flags(o, r.sampler);
  const auto corpus = corpus_for(o, cfg);
  const auto trained = train_retriever(corpus, r);
  const std::string out = o.common.out.empty() ? "retriever.json" : o.common.out;
  json meta = {{"seed", cfg.seed},
               {"arch", r.arch.name()},
               {"hidden", r.hidden},
               {"init_scale", r.init_scale},
               {"sampler", sampler_name(r.sampler)},
               {"hard_fraction", r.sampler.hard_fraction},
               {"k", r.k},
               {"config", cfg.to_json()}};
  if (!o.corpus_path.empty()) meta["corpus_path"] = o.corpus_path;
  save_checkpoint(*trained.scorer, out, meta);
  if (!o.trace_path.empty()) write_trace_csv(o.trace_path, trained.trace);
  std::vector<LabelId> golds = golds_of(corpus, corpus.validation_ids);
  const auto k_eval = std::min(cfg.eval_k, corpus.entities.size());
  const auto res = retrieve(*trained.scorer, corpus.validation_ids, golds, k_eval, cfg.retriever.threads);
  std::printf("arch=%s sampler=%s seed=%llu validation_recall@%zu=%.6f checkpoint=%s\n", r.arch.name().c_str(),
              sampler_name(r.sampler).c_str(), static_cast<unsigned long long>(cfg.seed), k_eval,
              recall_at_k(res, golds, k_eval), out.c_str());
  return 0;
}

// Rebuilds the retriever described by a checkpoint and loads its values.
std::unique_ptr<EncoderScorer> load_retriever(const std::string& path, const Options& o, ToyCorpus& corpus) {
  if (path.empty()) throw ConfigError("--model is required");
  const auto meta = read_checkpoint_metadata(path);
  RunConfig stored;
  try {
    stored = RunConfig::from_json(meta.at("config"));
  } catch (const json::exception& e) {
    throw ConfigError("checkpoint metadata incomplete: " + std::string(e.what()));
  }
  Options corpus_opts = o;
  if (corpus_opts.corpus_path.empty() && meta.contains("corpus_path"))
    corpus_opts.corpus_path = meta.at("corpus_path").get<std::string>();
  corpus = corpus_for(corpus_opts, stored);
  const auto views = views_of(corpus);
  EncoderConfig ec;
  ec.vocab_size = corpus.vocab_size;
  ec.hidden = stored.retriever.hidden;
  ec.score = instantiate_named(stored.retriever.arch);
  ec.init_scale = stored.retriever.init_scale;
  ec.seed = stored.seed;
  auto scorer = std::make_unique<EncoderScorer>(views.mentions, views.entities, ec);
  load_checkpoint(*scorer, path);
  return scorer;
}

int cmd_eval_recall(const Options& o) {
  auto cfg = resolve(o.common);
  ToyCorpus corpus;
  const auto scorer = load_retriever(o.model, o, corpus);
  const std::size_t k = o.k.value_or(std::min(cfg.eval_k, corpus.entities.size()));
  const auto golds = golds_of(corpus, corpus.validation_ids);
  const auto res = retrieve(*scorer, corpus.validation_ids, golds, k, cfg.retriever.threads);
  if (!o.common.out.empty()) {
    auto out = open_out(o.common.out);
    write_results_csv(out, res, golds, cfg.seed);
  }
  std::printf("mentions=%zu recall@1=%.6f recall@%zu=%.6f\n", golds.size(), recall_at_k(res, golds, 1), k,
              recall_at_k(res, golds, k));
  return 0;
}

int cmd_rerank(const Options& o) {
  auto cfg = resolve(o.common);
  ToyCorpus corpus;
  const auto retriever = load_retriever(o.model, o, corpus);
  auto& rr = cfg.reranker;
  const std::size_t k = o.k.value_or(std::min(cfg.eval_k, corpus.entities.size()));
  const auto reranker = train_reranker(corpus, *retriever, rr);
  const auto golds = golds_of(corpus, corpus.validation_ids);
  const auto two = two_stage(*retriever, *reranker, corpus.validation_ids, golds, k, rr.threads);
  if (!o.common.out.empty()) {
    auto out = open_out(o.common.out);
    out << "# seed=" << cfg.seed << "\nmention_id,gold,prediction,correct\n";
    for (std::size_t i = 0; i < golds.size(); ++i)
      out << corpus.validation_ids[i] << ',' << golds[i] << ',' << two.predictions[i] << ','
          << (two.predictions[i] == golds[i] ? 1 : 0) << '\n';
  }
  std::printf("mentions=%zu retriever_recall@%zu=%.6f unnormalized_accuracy=%.6f\n", golds.size(), k,
              two.retriever_recall, two.accuracy);
  return 0;
}

int cmd_dump_config(const Options& o) {
  const auto cfg = o.common.config_path.empty() ? RunConfig{} : RunConfig::load(o.common.config_path);
  const std::string text = cfg.to_json().dump(2) + "\n";
  if (o.common.out.empty()) std::cout << text;
  else open_out(o.common.out) << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hard-negative contrastive estimation lab"};
  app.require_subcommand(1);
  Options o;

  auto* synth = app.add_subcommand("synth-bias", "Synthetic bias experiment: hard vs random training traces");
  add_common(synth, o.common);
  synth->add_option("--sampler", o.sampler, "Single run with this sampler (random, hard, mixed, ...)");
  synth->add_option("--p", o.p, "Hard fraction for mixed sampling");
  synth->add_option("--k", o.k, "Candidates per example, gold included");
  synth->add_option("--steps", o.steps, "Optimizer steps per run");
  synth->add_option("--objective", o.objective, "nce or sampled_ce");

  auto* verify = app.add_subcommand("verify-theorems", "Enumeration oracle suite");
  add_common(verify, o.common);
  verify->add_option("--instances", o.instances, "Random instances per check");
  verify->add_option("--check", o.checks, "Report only the named checks (repeatable)");

  auto* train_cmd = app.add_subcommand("train-retriever", "Train a retriever on the toy corpus");
  add_common(train_cmd, o.common);
  train_cmd->add_option("--arch", o.arch, "dual, poly, multi or som");
  train_cmd->add_option("--sampler", o.sampler, "random, hard or mixed");
  train_cmd->add_option("--p", o.p, "Hard fraction for mixed sampling");
  train_cmd->add_option("--k", o.k, "Candidates per example, gold included");
  train_cmd->add_option("--corpus", o.corpus_path, "Corpus JSON (default: generate from config)");
  train_cmd->add_option("--trace", o.trace_path, "Write the training trace CSV here");

  auto* eval = app.add_subcommand("eval-recall", "Recall@K of a trained retriever on the validation split");
  add_common(eval, o.common);
  eval->add_option("--model", o.model, "Retriever checkpoint")->required();
  eval->add_option("--k", o.k, "Cutoff K");
  eval->add_option("--corpus", o.corpus_path, "Corpus JSON (default: as recorded in the checkpoint)");

  auto* rerank = app.add_subcommand("rerank", "Train a reranker on retriever candidates and report two-stage accuracy");
  add_common(rerank, o.common);
  rerank->add_option("--model", o.model, "Retriever checkpoint")->required();
  rerank->add_option("--k", o.k, "Candidates retrieved per mention");
  rerank->add_option("--corpus", o.corpus_path, "Corpus JSON (default: as recorded in the checkpoint)");

  auto* dump = app.add_subcommand("dump-config", "Print the effective configuration as JSON");
  add_common(dump, o.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    if (*synth) return cmd_synth_bias(o);
    if (*verify) return cmd_verify(o);
    if (*train_cmd) return cmd_train_retriever(o);
    if (*eval) return cmd_eval_recall(o);
    if (*rerank) return cmd_rerank(o);
    if (*dump) return cmd_dump_config(o);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

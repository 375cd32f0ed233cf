#include "hnce/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "hnce/errors.hpp"
#include "hnce/parallel.hpp"
#include "hnce/random.hpp"

namespace hnce {

namespace {

constexpr int kCorpusFormatVersion = 1;

}  // namespace

void ToyCorpusConfig::validate() const {
  if (vocab_size < 1) throw ConfigError("vocab_size must be positive");
  if (entity_count < 2) throw ConfigError("entity_count must be at least 2");
  if (mention_count < 1) throw ConfigError("mention_count must be positive");
  if (length < 1) throw ConfigError("length must be positive");
  if (!(corruption >= 0.0 && corruption <= 1.0)) throw ConfigError("corruption must lie in [0, 1]");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation_fraction must lie in [0, 1)");
}

void ToyCorpus::validate() const {
  if (entities.size() < 2) throw ConfigError("corpus needs at least 2 entities");
  if (golds.size() != mentions.size()) throw ConfigError("corpus: one gold per mention");
  auto check_seq = [&](const Sequence& s) {
    if (s.empty()) throw ConfigError("corpus: empty sequence");
    for (int t : s)
      if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) throw ConfigError("corpus: token out of range");
  };
  for (const auto& s : entities) check_seq(s);
  for (const auto& s : mentions) check_seq(s);
  for (auto g : golds)
    if (g >= entities.size()) throw ConfigError("corpus: gold index out of range");
  for (const auto* ids : {&train_ids, &validation_ids})
    for (auto i : *ids)
      if (i >= mentions.size()) throw ConfigError("corpus: split index out of range");
}

void ToyCorpus::save(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["format_version"] = kCorpusFormatVersion;
  j["vocab_size"] = vocab_size;
  j["entities"] = entities;
  j["mentions"] = mentions;
  j["golds"] = golds;
  j["train_ids"] = train_ids;
  j["validation_ids"] = validation_ids;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write corpus: " + path.string());
  out << j.dump() << "\n";
}

ToyCorpus ToyCorpus::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config not found: " + path.string());
  ToyCorpus c;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format_version").get<int>() != kCorpusFormatVersion)
      throw ConfigError("unsupported corpus format_version in " + path.string());
    j.at("vocab_size").get_to(c.vocab_size);
    j.at("entities").get_to(c.entities);
    j.at("mentions").get_to(c.mentions);
    j.at("golds").get_to(c.golds);
    j.at("train_ids").get_to(c.train_ids);
    j.at("validation_ids").get_to(c.validation_ids);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed corpus " + path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

ToyCorpus generate_toy_corpus(const ToyCorpusConfig& config) {
  config.validate();
  Rng rng(config.seed);
  ToyCorpus c;
  c.vocab_size = config.vocab_size;
  const auto token = [&] { return static_cast<int>(uniform_index(rng, config.vocab_size)); };
  c.entities.resize(config.entity_count);
  for (auto& e : c.entities) {
    e.resize(config.length);
    for (auto& t : e) t = token();
  }
  c.mentions.resize(config.mention_count);
  c.golds.resize(config.mention_count);
  for (std::size_t m = 0; m < config.mention_count; ++m) {
    const LabelId gold = uniform_index(rng, config.entity_count);
    c.golds[m] = gold;
    auto& out = c.mentions[m];
    for (int t : c.entities[gold]) {
      if (uniform01(rng) < config.corruption) {
        if (uniform01(rng) < 0.5) continue;  // dropped
        out.push_back(token());
      } else {
        out.push_back(t);
      }
    }
    if (out.empty()) out.push_back(token());
  }
  std::vector<std::size_t> order(config.mention_count);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  const auto n_valid = static_cast<std::size_t>(
      std::llround(config.validation_fraction * static_cast<double>(config.mention_count)));
  c.validation_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_valid));
  c.train_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(n_valid), order.end());
  std::sort(c.validation_ids.begin(), c.validation_ids.end());
  std::sort(c.train_ids.begin(), c.train_ids.end());
  return c;
}

std::vector<LabelId> rank_labels(std::span<const double> scores) {
  std::vector<LabelId> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](LabelId a, LabelId b) { return scores[a] > scores[b]; });
  return order;
}

RetrievalResult retrieve(const Scorer& scorer, std::span<const std::size_t> queries,
                         std::span<const LabelId> golds, std::size_t cutoff, std::size_t threads) {
  if (cutoff < 1 || cutoff > scorer.label_count())
    throw ConfigError("retrieve: cutoff must lie in [1, label count]");
  if (!golds.empty() && golds.size() != queries.size())
    throw ConfigError("retrieve: one gold per query");
  RetrievalResult r;
  r.cutoff = cutoff;
  r.queries.assign(queries.begin(), queries.end());
  r.candidates.resize(queries.size());
  r.scores.resize(queries.size());
  if (!golds.empty()) r.gold_ranks.resize(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    if (queries[i] >= scorer.input_count()) throw ConfigError("retrieve: query out of range");
    const auto scores = scorer.score_all(queries[i]);
    const auto ranked = rank_labels(scores);
    r.candidates[i].assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(cutoff));
    r.scores[i].resize(cutoff);
    for (std::size_t j = 0; j < cutoff; ++j) r.scores[i][j] = scores[ranked[j]];
    if (!golds.empty()) {
      if (golds[i] >= scorer.label_count()) throw ConfigError("retrieve: gold out of range");
      r.gold_ranks[i] = static_cast<std::size_t>(std::find(ranked.begin(), ranked.end(), golds[i]) - ranked.begin()) + 1;
    }
  });
  return r;
}

double recall_at_k(const RetrievalResult& result, std::span<const LabelId> golds, std::size_t k_eval) {
  if (golds.size() != result.candidates.size())
    throw ConfigError("recall_at_k: missing gold index for some query");
  if (k_eval < 1 || k_eval > result.cutoff) throw ConfigError("recall_at_k: K_eval exceeds the candidate count");
  if (golds.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const auto& c = result.candidates[i];
    if (std::find(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(k_eval), golds[i]) !=
        c.begin() + static_cast<std::ptrdiff_t>(k_eval))
      ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(golds.size());
}

TwoStageResult two_stage(const Scorer& retriever, const Scorer& reranker,
                         std::span<const std::size_t> queries, std::span<const LabelId> golds,
                         std::size_t k_retrieve, std::size_t threads) {
  if (golds.size() != queries.size()) throw ConfigError("two_stage: one gold per query");
  const auto first = retrieve(retriever, queries, {}, k_retrieve, threads);
  TwoStageResult out;
  out.predictions.resize(queries.size());
  parallel_for(queries.size(), threads, [&](std::size_t i) {
    const auto& cands = first.candidates[i];
    const auto s = reranker.score_candidates(queries[i], cands);
    std::size_t best = 0;
    for (std::size_t j = 1; j < s.size(); ++j)
      if (s[j] > s[best]) best = j;
    out.predictions[i] = cands[best];
  });
  std::size_t correct = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) correct += out.predictions[i] == golds[i];
  const double n = static_cast<double>(std::max<std::size_t>(1, queries.size()));
  out.accuracy = static_cast<double>(correct) / n;
  out.retriever_recall = queries.empty() ? 0.0 : recall_at_k(first, golds, k_retrieve);
  return out;
}

void write_results_csv(std::ostream& out, const RetrievalResult& result,
                       std::span<const LabelId> golds, std::uint64_t seed) {
  if (golds.size() != result.queries.size() || result.gold_ranks.size() != result.queries.size())
    throw ConfigError("write_results_csv: result lacks gold ranks");
  out << "# seed=" << seed << "\n";
  out << "mention_id,gold,rank_of_gold,top1,recall_hit@" << result.cutoff << "\n";
  for (std::size_t i = 0; i < result.queries.size(); ++i) {
    out << result.queries[i] << ',' << golds[i] << ',' << result.gold_ranks[i] << ','
        << result.candidates[i].front() << ',' << (result.gold_ranks[i] <= result.cutoff ? 1 : 0) << '\n';
  }
}

CorpusViews views_of(const ToyCorpus& corpus) {
  return {std::make_shared<const std::vector<Sequence>>(corpus.mentions),
          std::make_shared<const std::vector<Sequence>>(corpus.entities)};
}

std::vector<std::pair<InputId, LabelId>> training_pairs(const ToyCorpus& corpus) {
  std::vector<std::pair<InputId, LabelId>> pairs;
  pairs.reserve(corpus.train_ids.size());
  for (auto m : corpus.train_ids) pairs.emplace_back(m, corpus.golds[m]);
  return pairs;
}

std::vector<LabelId> all_golds(const ToyCorpus& corpus) { return corpus.golds; }

TrainedRetriever train_retriever(const ToyCorpus& corpus, const RetrieverConfig& config) {
  corpus.validate();
  if (config.k < 2 || config.k > corpus.entities.size()) throw ConfigError("retriever K must lie in [2, entity count]");
  const auto views = views_of(corpus);
  EncoderConfig ec;
  ec.vocab_size = corpus.vocab_size;
  ec.hidden = config.hidden;
  ec.score = instantiate_named(config.arch);
  ec.init_scale = config.init_scale;
  ec.seed = config.seed;
  TrainedRetriever out;
  out.scorer = std::make_unique<EncoderScorer>(views.mentions, views.entities, ec);

  TrainConfig tc;
  tc.sampler = config.sampler;
  tc.k = config.k;
  tc.batch_size = config.batch_size;
  tc.epochs = config.epochs;
  tc.optimizer = config.optimizer;
  tc.seed = config.seed;
  tc.probe.every = 0;
  tc.track_exact_ce = false;
  tc.threads = config.threads;
  TrainingData data{nullptr, training_pairs(corpus)};
  out.trace = train(*out.scorer, data, tc);
  return out;
}

std::unique_ptr<JointScorer> train_reranker(const ToyCorpus& corpus, const Scorer& retriever,
                                            const RerankerConfig& config, ExperimentTrace* trace) {
  corpus.validate();
  if (config.k < 2 || config.k > corpus.entities.size()) throw ConfigError("reranker K must lie in [2, entity count]");
  FixedTupleSampler::Table table;
  for (auto m : corpus.train_ids) {
    const auto ranked = rank_labels(retriever.score_all(m));
    std::vector<LabelId> negatives;
    for (auto y : ranked) {
      if (negatives.size() == config.k - 1) break;
      if (y != corpus.golds[m]) negatives.push_back(y);
    }
    table[{m, corpus.golds[m]}] = std::move(negatives);
  }
  const FixedTupleSampler sampler(std::move(table));
  const auto views = views_of(corpus);
  JointConfig jc;
  jc.vocab_size = corpus.vocab_size;
  jc.hidden = config.hidden;
  jc.init_scale = config.init_scale;
  jc.seed = config.seed;
  auto scorer = std::make_unique<JointScorer>(views.mentions, views.entities, jc);

  TrainConfig tc;
  tc.k = config.k;
  tc.batch_size = config.batch_size;
  tc.epochs = config.epochs;
  tc.optimizer = config.optimizer;
  tc.seed = config.seed;
  tc.probe.every = 0;
  tc.track_exact_ce = false;
  tc.threads = config.threads;
  TrainingData data{nullptr, training_pairs(corpus)};
  auto t = train(*scorer, data, tc, &sampler);
  if (trace) *trace = std::move(t);
  return scorer;
}

}  // namespace hnce

#include "hnce/config.hpp"

#include <fstream>
#include <set>

#include "hnce/errors.hpp"
#include "hnce/parallel.hpp"

namespace hnce {

namespace {

using nlohmann::json;

// Reads known keys from one section and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      j_.at(key).get_to(out);
    } catch (const json::exception&) {
      throw ConfigError("config key '" + name_ + "." + key + "' has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key)) throw ConfigError("unknown config key '" + name_ + "." + key + "'");
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

const char* reference_name(CeReference r) { return r == CeReference::Exact ? "exact" : "same_batch"; }

CeReference parse_reference(const std::string& s) {
  if (s == "exact") return CeReference::Exact;
  if (s == "same_batch") return CeReference::SameBatch;
  throw ConfigError("unknown bias reference: " + s);
}

json optimizer_json(const OptimizerConfig& o) {
  return {{"kind", to_string(o.kind)}, {"learning_rate", o.learning_rate}, {"beta1", o.beta1},
          {"beta2", o.beta2}, {"epsilon", o.epsilon}};
}

void read_optimizer(const json& j, const std::string& name, OptimizerConfig& o) {
  Section s(j, name);
  std::string kind = to_string(o.kind);
  s.read("kind", kind);
  o.kind = parse_optimizer_kind(kind);
  s.read("learning_rate", o.learning_rate);
  s.read("beta1", o.beta1);
  s.read("beta2", o.beta2);
  s.read("epsilon", o.epsilon);
  s.finish();
  o.validate();
}

}  // namespace

std::string sampler_name(const SamplerSpec& spec) {
  switch (spec.kind) {
    case SamplerKind::Uniform: return spec.distinct ? "random" : "uniform";
    case SamplerKind::Marginal: return "marginal";
    case SamplerKind::ModelIid: return "model_iid";
    case SamplerKind::HardDistinct: return "hard";
    case SamplerKind::GreedyTop: return "greedy";
    case SamplerKind::Mixed: return "mixed";
    case SamplerKind::Fixed: return "fixed";
  }
  return "?";
}

RunConfig::RunConfig() {
  retriever.sampler = SamplerSpec::parse("mixed", 0.5);
}

json RunConfig::to_json() const {
  const auto& f = figure1;
  json j;
  j["seed"] = seed;
  j["threads"] = threads;
  j["eval_k"] = eval_k;
  j["population"] = {{"label_count", f.population.label_count},
                     {"input_count", f.population.input_count},
                     {"peakiness", f.population.peakiness},
                     {"seed", f.population.seed}};
  j["figure1"] = {{"steps", f.steps},
                  {"batch_size", f.batch_size},
                  {"k", f.k},
                  {"hidden", f.mlp.hidden},
                  {"init_scale", f.mlp.init_scale},
                  {"objective", to_string(f.objective)},
                  {"optimizer", optimizer_json(f.optimizer)},
                  {"probe_every", f.probe.every},
                  {"simulations", f.probe.simulations},
                  {"reference", reference_name(f.probe.reference)},
                  {"fresh_batches", f.probe.fresh_batches},
                  {"mixed_fraction", f.probe.mixed_fraction},
                  {"record_wall_time", f.record_wall_time}};
  j["corpus"] = {{"vocab_size", corpus.vocab_size},
                 {"entity_count", corpus.entity_count},
                 {"mention_count", corpus.mention_count},
                 {"length", corpus.length},
                 {"corruption", corpus.corruption},
                 {"validation_fraction", corpus.validation_fraction},
                 {"seed", corpus.seed}};
  j["retriever"] = {{"arch", retriever.arch.name()},
                    {"hidden", retriever.hidden},
                    {"init_scale", retriever.init_scale},
                    {"sampler", sampler_name(retriever.sampler)},
                    {"hard_fraction", retriever.sampler.hard_fraction},
                    {"k", retriever.k},
                    {"batch_size", retriever.batch_size},
                    {"epochs", retriever.epochs},
                    {"optimizer", optimizer_json(retriever.optimizer)}};
  j["reranker"] = {{"hidden", reranker.hidden},
                   {"init_scale", reranker.init_scale},
                   {"k", reranker.k},
                   {"batch_size", reranker.batch_size},
                   {"epochs", reranker.epochs},
                   {"optimizer", optimizer_json(reranker.optimizer)}};
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  Section top(j, "config");
  top.read("seed", c.seed);
  top.read("threads", c.threads);
  top.read("eval_k", c.eval_k);
  auto& f = c.figure1;
  if (const auto* p = top.child("population")) {
    Section s(*p, "population");
    s.read("label_count", f.population.label_count);
    s.read("input_count", f.population.input_count);
    s.read("peakiness", f.population.peakiness);
    s.read("seed", f.population.seed);
    s.finish();
    f.population.validate();
  }
  if (const auto* p = top.child("figure1")) {
    Section s(*p, "figure1");
    std::string objective = to_string(f.objective);
    std::string reference = reference_name(f.probe.reference);
    s.read("steps", f.steps);
    s.read("batch_size", f.batch_size);
    s.read("k", f.k);
    s.read("hidden", f.mlp.hidden);
    s.read("init_scale", f.mlp.init_scale);
    s.read("objective", objective);
    s.read("probe_every", f.probe.every);
    s.read("simulations", f.probe.simulations);
    s.read("reference", reference);
    s.read("fresh_batches", f.probe.fresh_batches);
    s.read("mixed_fraction", f.probe.mixed_fraction);
    s.read("record_wall_time", f.record_wall_time);
    if (const auto* o = s.child("optimizer")) read_optimizer(*o, "figure1.optimizer", f.optimizer);
    s.finish();
    f.objective = parse_objective(objective);
    f.probe.reference = parse_reference(reference);
    if (f.k < 2) throw ConfigError("figure1.k must be at least 2");
    if (f.steps < 1 || f.batch_size < 1) throw ConfigError("figure1.steps and batch_size must be positive");
  }
  if (const auto* p = top.child("corpus")) {
    Section s(*p, "corpus");
    s.read("vocab_size", c.corpus.vocab_size);
    s.read("entity_count", c.corpus.entity_count);
    s.read("mention_count", c.corpus.mention_count);
    s.read("length", c.corpus.length);
    s.read("corruption", c.corpus.corruption);
    s.read("validation_fraction", c.corpus.validation_fraction);
    s.read("seed", c.corpus.seed);
    s.finish();
    c.corpus.validate();
  }
  if (const auto* p = top.child("retriever")) {
    Section s(*p, "retriever");
    auto& r = c.retriever;
    std::string arch = r.arch.name();
    std::string sampler = sampler_name(r.sampler);
    double fraction = r.sampler.hard_fraction;
    s.read("arch", arch);
    s.read("hidden", r.hidden);
    s.read("init_scale", r.init_scale);
    s.read("sampler", sampler);
    s.read("hard_fraction", fraction);
    s.read("k", r.k);
    s.read("batch_size", r.batch_size);
    s.read("epochs", r.epochs);
    if (const auto* o = s.child("optimizer")) read_optimizer(*o, "retriever.optimizer", r.optimizer);
    s.finish();
    r.arch = ArchitectureSpec::parse(arch);
    r.sampler = SamplerSpec::parse(sampler, fraction);
  }
  if (const auto* p = top.child("reranker")) {
    Section s(*p, "reranker");
    auto& r = c.reranker;
    s.read("hidden", r.hidden);
    s.read("init_scale", r.init_scale);
    s.read("k", r.k);
    s.read("batch_size", r.batch_size);
    s.read("epochs", r.epochs);
    if (const auto* o = s.child("optimizer")) read_optimizer(*o, "reranker.optimizer", r.optimizer);
    s.finish();
  }
  top.finish();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config not found: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void RunConfig::propagate() {
  const std::size_t t = threads == 0 ? default_thread_count() : threads;
  figure1.seed = seed;
  figure1.mlp.seed = seed;
  figure1.threads = t;
  retriever.seed = seed;
  retriever.threads = t;
  reranker.seed = seed;
  reranker.threads = t;
}

}  // namespace hnce

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "hnce/checkpoint.hpp"
#include "hnce/config.hpp"
#include "hnce/encoder.hpp"
#include "hnce/errors.hpp"
#include "test_support.hpp"

using namespace hnce;
using nlohmann::json;

namespace {

std::filesystem::path temp_file(const char* name) { return std::filesystem::temp_directory_path() / name; }

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

template <class F>
std::string config_error(F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, JsonRoundTrip) {
  RunConfig c;
  c.seed = 11;
  c.threads = 2;
  c.figure1.steps = 77;
  c.figure1.objective = Objective::SampledCrossEntropy;
  c.figure1.probe.reference = CeReference::Exact;
  c.retriever.arch = ArchitectureSpec::parse("poly-4");
  c.retriever.sampler = SamplerSpec::parse("mixed", 0.25);
  c.reranker.optimizer.kind = OptimizerKind::Sgd;
  const json j = c.to_json();
  EXPECT_EQ(RunConfig::from_json(j).to_json(), j);
}

TEST(Config, MissingKeysKeepDefaults) {
  const auto c = RunConfig::from_json(json::parse(R"({"seed": 5, "retriever": {"arch": "som"}})"));
  EXPECT_EQ(c.seed, 5u);
  EXPECT_EQ(c.retriever.arch.name(), "som");
  RunConfig defaults;
  EXPECT_EQ(c.retriever.k, defaults.retriever.k);
  EXPECT_EQ(sampler_name(c.retriever.sampler), "mixed");
  EXPECT_EQ(c.figure1.population.label_count, 1000u);
}

TEST(Config, RejectsUnknownKeysAndWrongTypes) {
  EXPECT_NE(config_error([] { RunConfig::from_json(json::parse(R"({"sed": 1})")); }).find("config.sed"),
            std::string::npos);
  EXPECT_NE(config_error([] { RunConfig::from_json(json::parse(R"({"retriever": {"epoch": 1}})")); })
                .find("retriever.epoch"),
            std::string::npos);
  EXPECT_NE(config_error([] { RunConfig::from_json(json::parse(R"({"seed": "one"})")); }).find("wrong type"),
            std::string::npos);
  EXPECT_THROW(RunConfig::from_json(json::parse(R"({"retriever": 3})")), ConfigError);
  EXPECT_THROW(RunConfig::from_json(json::parse(R"({"figure1": {"optimizer": {"kind": "lbfgs"}}})")), ConfigError);
}

TEST(Config, RejectsInvalidValues) {
  for (const char* text : {R"({"retriever": {"arch": "triple"}})", R"({"retriever": {"sampler": "nonsense"}})",
                           R"({"retriever": {"sampler": "mixed", "hard_fraction": 2}})",
                           R"({"corpus": {"corruption": 1.5}})", R"({"population": {"peakiness": -1}})",
                           R"({"figure1": {"k": 1}})", R"({"figure1": {"objective": "mse"}})",
                           R"({"figure1": {"reference": "nearby"}})"}) {
    EXPECT_THROW(RunConfig::from_json(json::parse(text)), ConfigError) << text;
  }
}

TEST(Config, FileErrors) {
  const auto missing = temp_file("hnce_no_such_config.json");
  std::filesystem::remove(missing);
  EXPECT_EQ(config_error([&] { RunConfig::load(missing); }), "config not found: " + missing.string());
  const auto bad = temp_file("hnce_bad_config.json");
  write_text(bad, "{ not json");
  EXPECT_NE(config_error([&] { RunConfig::load(bad); }).find("malformed config"), std::string::npos);
  write_text(bad, R"({"eval_k": 8})");
  EXPECT_EQ(RunConfig::load(bad).eval_k, 8u);
  std::filesystem::remove(bad);
}

TEST(Config, PropagatePushesSeedAndThreads) {
  RunConfig c;
  c.seed = 9;
  c.threads = 3;
  c.propagate();
  EXPECT_EQ(c.figure1.seed, 9u);
  EXPECT_EQ(c.figure1.mlp.seed, 9u);
  EXPECT_EQ(c.retriever.seed, 9u);
  EXPECT_EQ(c.reranker.seed, 9u);
  EXPECT_EQ(c.figure1.threads, 3u);
  EXPECT_EQ(c.retriever.threads, 3u);
  c.threads = 0;
  c.propagate();
  EXPECT_GE(c.retriever.threads, 1u);
}

TEST(Config, SamplerNameInvertsParse) {
  for (const char* name : {"random", "uniform", "hard", "greedy", "mixed", "model_iid"})
    EXPECT_EQ(sampler_name(SamplerSpec::parse(name)), name);
}

TEST(Checkpoint, RoundTripRestoresScores) {
  MlpConfig c;
  c.hidden = 4;
  c.init_scale = 0.5;
  c.seed = 1;
  const MlpScorer a(3, 5, c);
  const auto path = temp_file("hnce_ckpt.json");
  save_checkpoint(a, path, {{"note", "x"}});
  c.seed = 2;
  MlpScorer b(3, 5, c);
  EXPECT_NE(a.score(1, 2), b.score(1, 2));
  EXPECT_EQ(load_checkpoint(b, path)["note"], "x");
  EXPECT_EQ(read_checkpoint_metadata(path)["note"], "x");
  for (InputId x = 0; x < 3; ++x) EXPECT_EQ(a.score_all(x), b.score_all(x));
  std::filesystem::remove(path);
}

TEST(Checkpoint, EncoderRoundTrip) {
  Rng rng(3);
  auto in = hnce::testing::random_sequences(rng, 3, 8, 1, 3);
  auto lab = hnce::testing::random_sequences(rng, 4, 8, 2, 3);
  EncoderConfig c;
  c.vocab_size = 8;
  c.hidden = 3;
  c.score = instantiate_named("som");
  c.seed = 4;
  const EncoderScorer a(in, lab, c);
  const auto path = temp_file("hnce_ckpt_enc.json");
  save_checkpoint(a, path);
  c.seed = 5;
  EncoderScorer b(in, lab, c);
  load_checkpoint(b, path);
  EXPECT_EQ(a.score_all(2), b.score_all(2));
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsMismatches) {
  MlpConfig c;
  c.hidden = 4;
  const MlpScorer a(3, 5, c);
  const auto path = temp_file("hnce_ckpt_bad.json");
  save_checkpoint(a, path);
  c.hidden = 5;
  MlpScorer wider(3, 5, c);
  EXPECT_NE(config_error([&] { load_checkpoint(wider, path); }).find("layout"), std::string::npos);
  TabularScorer tab(3, 5, std::vector<double>(15, 0.0));
  EXPECT_NE(config_error([&] { load_checkpoint(tab, path); }).find("family"), std::string::npos);

  std::ifstream in(path);
  json j = json::parse(in);
  in.close();
  j["format_version"] = kCheckpointFormatVersion + 1;
  write_text(path, j.dump());
  c.hidden = 4;
  MlpScorer same(3, 5, c);
  EXPECT_THROW(load_checkpoint(same, path), ConfigError);
  write_text(path, "[");
  EXPECT_THROW(load_checkpoint(same, path), ConfigError);
  std::filesystem::remove(path);
  EXPECT_NE(config_error([&] { load_checkpoint(same, path); }).find("not found"), std::string::npos);
}

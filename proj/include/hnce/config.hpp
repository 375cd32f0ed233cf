#pragma once

#include <cstdint>
#include <filesystem>

#include "json.hpp"

#include "hnce/retrieval.hpp"
#include "hnce/training.hpp"

namespace hnce {

// Everything the command-line driver can configure. Missing keys keep their
// defaults; unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;   // training and initialization seed of every run
  std::size_t threads = 0;  // 0 means the machine's parallelism
  Figure1Config figure1;
  ToyCorpusConfig corpus;
  RetrieverConfig retriever;
  RerankerConfig reranker;
  std::size_t eval_k = 64;

  RunConfig();

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  // Throws ConfigError("config not found: ...") for a missing file.
  static RunConfig load(const std::filesystem::path& path);

  // Pushes seed and thread count into the nested configs.
  void propagate();
};

// Inverse of SamplerSpec::parse for the names it accepts.
std::string sampler_name(const SamplerSpec& spec);

}  // namespace hnce

#include "hnce/checkpoint.hpp"

#include <fstream>

#include "hnce/errors.hpp"
#include "hnce/numerics.hpp"

namespace hnce {

void save_checkpoint(const Scorer& scorer, const std::filesystem::path& path,
                     const nlohmann::json& metadata) {
  nlohmann::json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["family"] = std::string(scorer.family());
  j["config"] = scorer.describe();
  j["layout"] = scorer.layout().to_json();
  const auto values = scorer.parameters();
  j["values"] = std::vector<double>(values.begin(), values.end());
  j["metadata"] = metadata;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint: " + path.string());
  out << j.dump() << '\n';
}

namespace {

nlohmann::json read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("checkpoint not found: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed checkpoint: ") + e.what());
  }
  if (j.value("format_version", 0) != kCheckpointFormatVersion)
    throw ConfigError("unsupported checkpoint format_version");
  return j;
}

}  // namespace

nlohmann::json read_checkpoint_metadata(const std::filesystem::path& path) {
  return read_checkpoint(path).value("metadata", nlohmann::json::object());
}

nlohmann::json load_checkpoint(Scorer& scorer, const std::filesystem::path& path) {
  const auto j = read_checkpoint(path);
  if (j.value("family", std::string()) != scorer.family())
    throw ConfigError("checkpoint family does not match the scorer");
  if (j.at("layout") != scorer.layout().to_json())
    throw ConfigError("checkpoint layout does not match the scorer");
  const auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != scorer.parameter_count() || !all_finite(values))
    throw ConfigError("checkpoint values are malformed");
  std::copy(values.begin(), values.end(), scorer.parameters().begin());
  return j.value("metadata", nlohmann::json::object());
}

}  // namespace hnce

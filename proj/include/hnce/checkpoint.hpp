#pragma once

#include <filesystem>

#include "hnce/scorer.hpp"

namespace hnce {

inline constexpr int kCheckpointFormatVersion = 1;

// Writes {format_version, family, config, layout, values}. `metadata` is
// stored verbatim under "metadata".
void save_checkpoint(const Scorer& scorer, const std::filesystem::path& path,
                     const nlohmann::json& metadata = nlohmann::json::object());

// Copies the stored values into an already constructed scorer after checking
// that family and layout agree. Returns the stored metadata.
nlohmann::json load_checkpoint(Scorer& scorer, const std::filesystem::path& path);

// Metadata only, for rebuilding the scorer before load_checkpoint.
nlohmann::json read_checkpoint_metadata(const std::filesystem::path& path);

}  // namespace hnce

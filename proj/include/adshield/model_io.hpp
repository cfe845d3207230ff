#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "adshield/classify.hpp"
#include "adshield/tagger.hpp"

namespace adshield::model_io {

// Container layout (JSON):
//   {"format": "adshield-model", "version": 1, "kind": <kind>,
//    "hyperparameters": {...}, "parameters": {...}}
// kinds: random_forest, linear_svm, dictionary, tagger.
inline constexpr const char* kFormatTag = "adshield-model";
inline constexpr int kFormatVersion = 1;

/// Kind recorded in a model file. Throws DataError on a foreign file.
std::string model_kind(const std::filesystem::path& path);

void save_detector(const classify::Detector& detector, const std::filesystem::path& path);

/// Linear models reference their embedding file; `embeddings` overrides the
/// recorded path.
classify::Detector load_detector(const std::filesystem::path& path,
                                 const std::optional<std::filesystem::path>& embeddings = {});

void save_tagger(const tagger::TaggerModel& model, const std::filesystem::path& path);
tagger::TaggerModel load_tagger(const std::filesystem::path& path);

}  // namespace adshield::model_io

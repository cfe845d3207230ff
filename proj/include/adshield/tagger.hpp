#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "adshield/bio.hpp"
#include "adshield/corpus.hpp"

namespace adshield::tagger {

struct TaggerConfig {
  int epochs = 10;
  /// Feature hashing space is 2^hash_bits; collisions are accepted.
  std::uint32_t hash_bits = 20;
};

using LabelWeights = std::array<double, kNumLabels>;

/// Averaged multiclass perceptron over hashed window features.
struct TaggerModel {
  static constexpr int kFeatureVersion = 1;

  std::unordered_map<std::uint32_t, LabelWeights> weights;
  int feature_version = kFeatureVersion;
  std::uint32_t hash_bits = 20;
  bool averaged = true;
  std::uint64_t seed = 0;

  bool trained() const noexcept { return !weights.empty(); }
};

/// Hashed feature ids for position `i`, given the previously predicted label.
std::vector<std::uint32_t> extract_features(const std::vector<std::string>& tokens,
                                            std::size_t i, BioLabel previous,
                                            std::uint32_t hash_bits);

struct TaggerTrainResult {
  TaggerModel model;
  /// Token accuracy of the final (averaged) model on the training records.
  double train_accuracy = 0.0;
  std::size_t train_tokens = 0;
};

/// Error-driven updates with parameter averaging; the previous-label feature
/// uses the model's own predictions. Only records with tokens and tags are
/// used. Throws InvalidArgument without tagged records or when the tags
/// never leave O.
TaggerTrainResult train_tagger(const corpus::Dataset& dataset, const TaggerConfig& config,
                               std::uint64_t seed);

/// Greedy left-to-right decoding followed by repair_bio.
TagSequence tag_tokens(const TaggerModel& model, const std::vector<std::string>& tokens);

}  // namespace adshield::tagger

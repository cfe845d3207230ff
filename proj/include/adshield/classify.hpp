#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "adshield/corpus.hpp"
#include "adshield/features.hpp"
#include "adshield/forest.hpp"
#include "adshield/linear.hpp"

namespace adshield::classify {

using features::TokenList;

/// A detector's output for one response. Also the ingestion format for
/// predictions produced outside this toolkit.
struct PredictionRecord {
  std::string response_id;
  double prob = 0.0;
  bool decision = false;
  std::optional<std::vector<std::string>> tags;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// One JSON object per line: {"response_id", "prob", "decision", "tags"}.
std::string format_prediction(const PredictionRecord& p);
PredictionRecord parse_prediction(std::string_view line);
void write_predictions(const std::vector<PredictionRecord>& preds,
                       const std::filesystem::path& path);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

/// Record tokens when present, otherwise the tokenizer's output.
TokenList response_tokens(const corpus::LabeledResponse& r);
std::vector<TokenList> response_sentences(const corpus::LabeledResponse& r);

/// Sentence-level training data. A sentence is positive iff one of its
/// tokens carries a non-O tag; negatives without tags contribute all-negative
/// sentences; positives without tags are skipped and counted.
struct SentenceSet {
  std::vector<TokenList> sentences;
  std::vector<bool> labels;
  std::vector<std::size_t> record_index;
  std::size_t skipped_records = 0;
};
SentenceSet sentence_training_set(const corpus::Dataset& dataset);

struct RandomForestDetector {
  features::Vocabulary vocab;
  RandomForestModel forest;
  int min_df = 5;
};

struct LinearSvmDetector {
  LinearMarginModel model;
  std::shared_ptr<const features::EmbeddingTable> embeddings;
  std::string embeddings_path;
};

struct DictionaryModel {
  std::vector<std::string> terms;
  std::unordered_set<std::string> term_set;
  double threshold = 0.5;

  void set_terms(std::vector<std::string> t);
};

using Detector = std::variant<RandomForestDetector, LinearSvmDetector, DictionaryModel>;

std::string_view detector_kind(const Detector& d);
double decision_threshold(const Detector& d);

double sentence_probability(const RandomForestDetector& d, const TokenList& sentence);
double sentence_probability(const LinearSvmDetector& d, const TokenList& sentence);

/// Sentence models: prob = max sentence probability, decision = some
/// sentence reaches the threshold. Dictionary: prob = dictionary score,
/// decision = score >= threshold.
PredictionRecord classify_response(const Detector& detector, const corpus::LabeledResponse& r);

/// Predictions in dataset order; responses are scored in parallel.
std::vector<PredictionRecord> predict_dataset(const Detector& detector,
                                              const corpus::Dataset& dataset);

struct RandomForestTrainConfig {
  int min_df = 5;
  int k = 2000;
  ForestConfig forest;
  std::uint64_t seed = 0;
};

/// Vocabulary and forest from the training sentences; the probability
/// threshold is tuned on response-level validation F1.
RandomForestDetector train_random_forest_detector(const corpus::Dataset& train,
                                                  const corpus::Dataset& validation,
                                                  const RandomForestTrainConfig& config);

/// SVM on mean sentence embeddings; Platt calibration on validation
/// sentences, then response-level threshold tuning on validation.
LinearSvmDetector train_svm_detector(const corpus::Dataset& train,
                                     const corpus::Dataset& validation,
                                     std::shared_ptr<const features::EmbeddingTable> embeddings,
                                     const LinearSvmConfig& config);

/// Top `n_terms` training-response terms by mutual information with has_ad;
/// score threshold tuned on validation.
DictionaryModel train_dictionary(const corpus::Dataset& train, const corpus::Dataset& validation,
                                 int n_terms = 200);

/// Sets the detector's threshold to the F1-optimal value on `validation`.
void tune_detector_threshold(Detector& detector, const corpus::Dataset& validation);

/// Response-level F1 of the detector on a labeled dataset.
double response_f1(const Detector& detector, const corpus::Dataset& dataset);

template <typename Config>
struct GridResult {
  Config best;
  double best_score = -1.0;
  std::vector<std::pair<Config, double>> trials;
};

/// Evaluates every configuration and keeps the first best-scoring one.
template <typename Config>
GridResult<Config> grid_search(const std::vector<Config>& grid,
                               const std::function<double(const Config&)>& score) {
  GridResult<Config> out;
  for (const auto& c : grid) {
    const double s = score(c);
    out.trials.emplace_back(c, s);
    if (s > out.best_score) {
      out.best_score = s;
      out.best = c;
    }
  }
  return out;
}

}  // namespace adshield::classify

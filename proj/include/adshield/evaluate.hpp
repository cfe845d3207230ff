#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "adshield/bio.hpp"
#include "adshield/classify.hpp"
#include "adshield/corpus.hpp"

namespace adshield::evaluate {

using tagger::EntityKind;

struct Entity {
  EntityKind kind = EntityKind::ad;
  std::size_t token_start = 0;
  std::size_t token_end = 0;  // exclusive

  friend auto operator<=>(const Entity&, const Entity&) = default;
};

/// Binary or micro-averaged scores. precision = tp/(tp+fp), recall =
/// tp/(tp+fn) with 0/0 = 0; f1 = 2PR/(P+R), 0 when P+R = 0.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  static Metrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn = 0);
};

/// F1 from precision and recall.
double f1_score(double precision, double recall);

/// Each maximal run B-X (I-X)* becomes one entity of kind X. Throws
/// InvalidArgument when the sequence violates IOB2.
std::vector<Entity> extract_entities(const tagger::TagSequence& tags);

using EntityMap = std::map<std::string, std::vector<Entity>>;

/// Exact (kind, start, end) matching, micro-averaged over all responses.
/// Throws DataError when the response ids differ.
Metrics entity_metrics(const EntityMap& gold, const EntityMap& pred);

/// Binary P/R/F1 over has_ad. Throws DataError (naming the id) when a gold
/// id lacks a prediction, a prediction is duplicated, or an id is unknown.
Metrics response_metrics(const std::vector<classify::PredictionRecord>& preds,
                         const corpus::Dataset& gold);

struct ContingencyTable {
  std::size_t tp_new = 0;
  std::size_t fn_new = 0;
  std::size_t tp_ref = 0;
  std::size_t fn_ref = 0;

  friend bool operator==(const ContingencyTable&, const ContingencyTable&) = default;
};

/// Detection counts over the gold positive ids only. Throws DataError when
/// either prediction set misses a positive id.
ContingencyTable build_contingency(const std::vector<classify::PredictionRecord>& preds_ref,
                                   const std::vector<classify::PredictionRecord>& preds_new,
                                   const std::set<std::string>& gold_positive_ids);

/// Same table from per-response success flags (e.g. all_entities_detected).
ContingencyTable contingency_from_outcomes(const std::map<std::string, bool>& ref,
                                           const std::map<std::string, bool>& fresh);

/// True for a response iff every gold entity has an exact match among the
/// predictions; extra predictions are ignored.
std::map<std::string, bool> all_entities_detected(const EntityMap& gold, const EntityMap& pred);

/// Gold entities of every tagged record in the dataset.
EntityMap gold_entities(const corpus::Dataset& dataset);
/// Entities of predictions carrying tags (repaired before extraction).
EntityMap predicted_entities(const std::vector<classify::PredictionRecord>& preds);

/// Ids of gold positives the predictions missed.
std::set<std::string> false_negative_ids(const std::vector<classify::PredictionRecord>& preds,
                                         const corpus::Dataset& gold);

}  // namespace adshield::evaluate

#include "adshield/classify.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "adshield/bio.hpp"
#include "adshield/error.hpp"
#include "adshield/parallel.hpp"
#include "adshield/text.hpp"

namespace adshield::classify {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------- prediction I/O

std::string format_prediction(const PredictionRecord& p) {
  ordered_json j;
  j["response_id"] = p.response_id;
  j["prob"] = p.prob;
  j["decision"] = p.decision;
  j["tags"] = p.tags ? ordered_json(*p.tags) : ordered_json(nullptr);
  return j.dump();
}

PredictionRecord parse_prediction(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed prediction: ") + e.what());
  }
  PredictionRecord p;
  try {
    p.response_id = j.at("response_id").get<std::string>();
    p.prob = j.at("prob").get<double>();
    const auto& d = j.at("decision");
    p.decision = d.is_boolean() ? d.get<bool>() : d.get<int>() != 0;
    if (auto t = j.find("tags"); t != j.end() && !t->is_null())
      p.tags = t->get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("bad prediction record: ") + e.what(), p.response_id);
  }
  if (!(p.prob >= 0.0 && p.prob <= 1.0))
    throw DataError("prediction probability outside [0,1]", p.response_id);
  return p;
}

void write_predictions(const std::vector<PredictionRecord>& preds,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write predictions " + path.string());
  for (const auto& p : preds) out << format_prediction(p) << '\n';
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read predictions " + path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_prediction(line));
    } catch (const DataError& e) {
      throw DataError(path.filename().string() + ":" + std::to_string(line_no) + ": " +
                          e.what(),
                      e.record_id());
    }
  }
  return out;
}

// ------------------------------------------------------------- sentences

TokenList response_tokens(const corpus::LabeledResponse& r) {
  if (r.tokens) return *r.tokens;
  return text::token_texts(text::tokenize(r.response));
}

std::vector<TokenList> response_sentences(const corpus::LabeledResponse& r) {
  const TokenList tokens = response_tokens(r);
  std::vector<TokenList> out;
  for (const auto& span : text::split_sentences(tokens))
    out.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(span.token_start),
                     tokens.begin() + static_cast<std::ptrdiff_t>(span.token_end));
  return out;
}

SentenceSet sentence_training_set(const corpus::Dataset& dataset) {
  SentenceSet set;
  for (std::size_t ri = 0; ri < dataset.size(); ++ri) {
    const auto& r = dataset.records()[ri];
    if (r.has_ad && !r.tags) {
      ++set.skipped_records;
      continue;
    }
    const TokenList tokens = response_tokens(r);
    for (const auto& span : text::split_sentences(tokens)) {
      bool positive = false;
      if (r.tags)
        for (std::size_t i = span.token_start; i < span.token_end; ++i)
          positive = positive || (*r.tags)[i] != "O";
      set.sentences.emplace_back(tokens.begin() + static_cast<std::ptrdiff_t>(span.token_start),
                                 tokens.begin() + static_cast<std::ptrdiff_t>(span.token_end));
      set.labels.push_back(positive);
      set.record_index.push_back(ri);
    }
  }
  return set;
}

// ------------------------------------------------------------- detectors

void DictionaryModel::set_terms(std::vector<std::string> t) {
  terms = std::move(t);
  term_set = std::unordered_set<std::string>(terms.begin(), terms.end());
}

std::string_view detector_kind(const Detector& d) {
  switch (d.index()) {
    case 0: return "random_forest";
    case 1: return "linear_svm";
    default: return "dictionary";
  }
}

double decision_threshold(const Detector& d) {
  if (auto* rf = std::get_if<RandomForestDetector>(&d)) return rf->forest.threshold;
  if (auto* svm = std::get_if<LinearSvmDetector>(&d)) return svm->model.threshold;
  return std::get<DictionaryModel>(d).threshold;
}

double sentence_probability(const RandomForestDetector& d, const TokenList& sentence) {
  return d.forest.predict_proba(features::bow_indices(sentence, d.vocab));
}

double sentence_probability(const LinearSvmDetector& d, const TokenList& sentence) {
  if (!d.embeddings) throw InvalidArgument("linear detector has no embedding table");
  const auto fv = features::mean_embedding(sentence, *d.embeddings, d.model.lowercase_inputs);
  return d.model.probability(fv.values);
}

namespace {

template <typename SentenceModel>
PredictionRecord any_sentence(const SentenceModel& m, double threshold,
                              const corpus::LabeledResponse& r) {
  PredictionRecord p{r.id, 0.0, false, std::nullopt};
  for (const auto& s : response_sentences(r)) {
    const double prob = sentence_probability(m, s);
    p.prob = std::max(p.prob, prob);
    p.decision = p.decision || prob >= threshold;
  }
  return p;
}

std::vector<double> response_probs(const Detector& d, const corpus::Dataset& data) {
  std::vector<double> probs(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    probs[i] = classify_response(d, data.records()[i]).prob;
  });
  return probs;
}

std::vector<bool> has_ad_labels(const corpus::Dataset& data) {
  std::vector<bool> y;
  y.reserve(data.size());
  for (const auto& r : data.records()) y.push_back(r.has_ad);
  return y;
}

}  // namespace

PredictionRecord classify_response(const Detector& detector, const corpus::LabeledResponse& r) {
  if (auto* rf = std::get_if<RandomForestDetector>(&detector)) {
    if (rf->forest.trees.empty()) throw InvalidArgument("random forest is not trained");
    return any_sentence(*rf, rf->forest.threshold, r);
  }
  if (auto* svm = std::get_if<LinearSvmDetector>(&detector)) {
    if (!svm->model.calibrated) throw InvalidArgument("linear model is not trained/calibrated");
    return any_sentence(*svm, svm->model.threshold, r);
  }
  const auto& dict = std::get<DictionaryModel>(detector);
  if (dict.term_set.empty()) throw InvalidArgument("dictionary model has no terms");
  const double score = features::dictionary_score(response_tokens(r), dict.term_set);
  return {r.id, score, score >= dict.threshold, std::nullopt};
}

std::vector<PredictionRecord> predict_dataset(const Detector& detector,
                                              const corpus::Dataset& dataset) {
  std::vector<PredictionRecord> out(dataset.size());
  parallel_for(dataset.size(), [&](std::size_t i) {
    out[i] = classify_response(detector, dataset.records()[i]);
  });
  return out;
}

void tune_detector_threshold(Detector& detector, const corpus::Dataset& validation) {
  const auto choice = tune_threshold(response_probs(detector, validation), has_ad_labels(validation));
  if (auto* rf = std::get_if<RandomForestDetector>(&detector)) rf->forest.threshold = choice.threshold;
  else if (auto* svm = std::get_if<LinearSvmDetector>(&detector)) svm->model.threshold = choice.threshold;
  else std::get<DictionaryModel>(detector).threshold = choice.threshold;
}

double response_f1(const Detector& detector, const corpus::Dataset& dataset) {
  std::size_t tp = 0, fp = 0, fn = 0;
  const auto preds = predict_dataset(detector, dataset);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool gold = dataset.records()[i].has_ad;
    if (preds[i].decision && gold) ++tp;
    else if (preds[i].decision) ++fp;
    else if (gold) ++fn;
  }
  const double denom = 2.0 * tp + fp + fn;
  return denom > 0 ? 2.0 * tp / denom : 0.0;
}

// -------------------------------------------------------------- training

RandomForestDetector train_random_forest_detector(const corpus::Dataset& train,
                                                  const corpus::Dataset& validation,
                                                  const RandomForestTrainConfig& config) {
  const SentenceSet set = sentence_training_set(train);
  if (set.sentences.empty()) throw InvalidArgument("random forest: no training sentences");
  RandomForestDetector d;
  d.min_df = config.min_df;
  d.vocab = features::build_vocabulary(set.sentences, set.labels, config.min_df, config.k);
  BinaryMatrix m;
  m.n_features = d.vocab.size();
  m.rows.reserve(set.sentences.size());
  for (const auto& s : set.sentences) m.rows.push_back(features::bow_indices(s, d.vocab));
  d.forest = train_random_forest(m, set.labels, config.forest, config.seed);

  Detector tuned = std::move(d);
  tune_detector_threshold(tuned, validation);
  return std::get<RandomForestDetector>(std::move(tuned));
}

LinearSvmDetector train_svm_detector(const corpus::Dataset& train,
                                     const corpus::Dataset& validation,
                                     std::shared_ptr<const features::EmbeddingTable> embeddings,
                                     const LinearSvmConfig& config) {
  if (!embeddings || embeddings->empty())
    throw InvalidArgument("linear SVM: an embedding table is required");
  auto embed = [&](const SentenceSet& set) {
    std::vector<features::FeatureVector> x;
    x.reserve(set.sentences.size());
    for (const auto& s : set.sentences)
      x.push_back(features::mean_embedding(s, *embeddings, config.lowercase_inputs));
    return x;
  };
  const SentenceSet train_set = sentence_training_set(train);
  LinearSvmDetector d;
  d.embeddings = embeddings;
  d.model = train_linear_svm(embed(train_set), train_set.labels, config);

  const SentenceSet val_set = sentence_training_set(validation);
  const auto val_x = embed(val_set);
  std::vector<double> scores;
  scores.reserve(val_x.size());
  for (const auto& x : val_x) scores.push_back(d.model.decision(x.values));
  const auto platt = calibrate_platt(scores, val_set.labels);
  d.model.platt_a = platt.a;
  d.model.platt_b = platt.b;
  d.model.calibrated = true;

  Detector tuned = std::move(d);
  tune_detector_threshold(tuned, validation);
  return std::get<LinearSvmDetector>(std::move(tuned));
}

DictionaryModel train_dictionary(const corpus::Dataset& train, const corpus::Dataset& validation,
                                 int n_terms) {
  std::vector<TokenList> docs;
  std::vector<bool> labels;
  for (const auto& r : train.records()) {
    docs.push_back(response_tokens(r));
    labels.push_back(r.has_ad);
  }
  const auto vocab = features::build_vocabulary(docs, labels, 1, n_terms, nullptr, true);
  DictionaryModel m;
  m.set_terms(vocab.terms);
  Detector tuned = std::move(m);
  tune_detector_threshold(tuned, validation);
  return std::get<DictionaryModel>(std::move(tuned));
}

}  // namespace adshield::classify

#include "adshield/model_io.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "adshield/error.hpp"

namespace adshield::model_io {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json container(const char* kind) {
  ordered_json j;
  j["format"] = kFormatTag;
  j["version"] = kFormatVersion;
  j["kind"] = kind;
  return j;
}

void write_json(const ordered_json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write model file " + path.string());
  out << j.dump() << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed model file " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kFormatTag)
    throw DataError(path.string() + " is not an adshield model file");
  if (j.value("version", 0) != kFormatVersion)
    throw DataError("unsupported model format version in " + path.string());
  return j;
}

std::string loss_name(classify::SvmLoss l) {
  return l == classify::SvmLoss::hinge ? "hinge" : "squared_hinge";
}

classify::SvmLoss parse_loss(const std::string& s) {
  if (s == "hinge") return classify::SvmLoss::hinge;
  if (s == "squared_hinge") return classify::SvmLoss::squared_hinge;
  throw DataError("unknown SVM loss '" + s + "'");
}

ordered_json forest_json(const classify::RandomForestDetector& d) {
  ordered_json j = container("random_forest");
  const auto& f = d.forest;
  j["hyperparameters"] = {{"n_trees", f.config.n_trees},
                          {"max_features", f.config.max_features},
                          {"min_samples_leaf", f.config.min_samples_leaf},
                          {"max_depth", f.config.max_depth},
                          {"bootstrap", f.config.bootstrap},
                          {"min_df", d.min_df},
                          {"k", d.vocab.selected_k},
                          {"seed", f.seed}};
  ordered_json trees = ordered_json::array();
  for (const auto& t : f.trees) {
    ordered_json feat = ordered_json::array(), absent = ordered_json::array(),
                 present = ordered_json::array(), neg = ordered_json::array(),
                 pos = ordered_json::array();
    for (const auto& n : t.nodes) {
      feat.push_back(n.feature);
      absent.push_back(n.absent);
      present.push_back(n.present);
      neg.push_back(n.negative_mass);
      pos.push_back(n.positive_mass);
    }
    trees.push_back({{"feature", feat}, {"absent", absent}, {"present", present},
                     {"negative_mass", neg}, {"positive_mass", pos}});
  }
  j["parameters"] = {{"vocabulary", d.vocab.terms},
                     {"vocabulary_scores", d.vocab.scores},
                     {"n_features", f.n_features},
                     {"class_weights", {f.class_weights.negative, f.class_weights.positive}},
                     {"threshold", f.threshold},
                     {"trees", trees}};
  return j;
}

classify::RandomForestDetector forest_from(const json& j) {
  classify::RandomForestDetector d;
  const auto& h = j.at("hyperparameters");
  const auto& p = j.at("parameters");
  auto& f = d.forest;
  f.config.n_trees = h.at("n_trees");
  f.config.max_features = h.at("max_features");
  f.config.min_samples_leaf = h.at("min_samples_leaf");
  f.config.max_depth = h.at("max_depth");
  f.config.bootstrap = h.at("bootstrap");
  f.seed = h.at("seed");
  d.min_df = h.at("min_df");
  d.vocab.terms = p.at("vocabulary").get<std::vector<std::string>>();
  d.vocab.scores = p.at("vocabulary_scores").get<std::vector<double>>();
  d.vocab.min_df = d.min_df;
  d.vocab.selected_k = h.at("k");
  d.vocab.reindex();
  f.n_features = p.at("n_features");
  f.class_weights = {p.at("class_weights").at(0), p.at("class_weights").at(1)};
  f.threshold = p.at("threshold");
  for (const auto& t : p.at("trees")) {
    classify::DecisionTree tree;
    const auto& feat = t.at("feature");
    tree.nodes.resize(feat.size());
    for (std::size_t i = 0; i < feat.size(); ++i) {
      auto& n = tree.nodes[i];
      n.feature = feat[i];
      n.absent = t.at("absent")[i];
      n.present = t.at("present")[i];
      n.negative_mass = t.at("negative_mass")[i];
      n.positive_mass = t.at("positive_mass")[i];
      const auto limit = static_cast<std::int32_t>(feat.size());
      if (n.feature >= 0 &&
          (n.absent <= static_cast<std::int32_t>(i) || n.absent >= limit ||
           n.present <= static_cast<std::int32_t>(i) || n.present >= limit ||
           n.feature >= static_cast<std::int32_t>(f.n_features)))
        throw DataError("corrupt tree structure in model file");
    }
    if (tree.nodes.empty()) throw DataError("empty tree in model file");
    f.trees.push_back(std::move(tree));
  }
  return d;
}

}  // namespace

std::string model_kind(const std::filesystem::path& path) {
  return read_json(path).at("kind").get<std::string>();
}

void save_detector(const classify::Detector& detector, const std::filesystem::path& path) {
  if (auto* rf = std::get_if<classify::RandomForestDetector>(&detector)) {
    write_json(forest_json(*rf), path);
  } else if (auto* svm = std::get_if<classify::LinearSvmDetector>(&detector)) {
    ordered_json j = container("linear_svm");
    const auto& m = svm->model;
    j["hyperparameters"] = {{"C", m.C},
                            {"loss", loss_name(m.loss)},
                            {"lowercase_inputs", m.lowercase_inputs},
                            {"embeddings_path", svm->embeddings_path}};
    j["parameters"] = {{"weights", m.weights}, {"bias", m.bias},
                       {"calibrated", m.calibrated}, {"platt_a", m.platt_a},
                       {"platt_b", m.platt_b}, {"threshold", m.threshold}};
    write_json(j, path);
  } else {
    const auto& d = std::get<classify::DictionaryModel>(detector);
    ordered_json j = container("dictionary");
    j["hyperparameters"] = {{"n_terms", d.terms.size()}};
    j["parameters"] = {{"terms", d.terms}, {"threshold", d.threshold}};
    write_json(j, path);
  }
}

classify::Detector load_detector(const std::filesystem::path& path,
                                 const std::optional<std::filesystem::path>& embeddings) {
  const json j = read_json(path);
  const std::string kind = j.at("kind");
  try {
    if (kind == "random_forest") return forest_from(j);
    if (kind == "linear_svm") {
      classify::LinearSvmDetector d;
      const auto& h = j.at("hyperparameters");
      const auto& p = j.at("parameters");
      d.model.C = h.at("C");
      d.model.loss = parse_loss(h.at("loss"));
      d.model.lowercase_inputs = h.at("lowercase_inputs");
      d.model.weights = p.at("weights").get<std::vector<double>>();
      d.model.bias = p.at("bias");
      d.model.calibrated = p.at("calibrated");
      d.model.platt_a = p.at("platt_a");
      d.model.platt_b = p.at("platt_b");
      d.model.threshold = p.at("threshold");
      d.embeddings_path = embeddings ? embeddings->string()
                                     : h.at("embeddings_path").get<std::string>();
      if (d.embeddings_path.empty())
        throw DataError("linear model needs an embedding file (none recorded or given)");
      auto table = std::make_shared<features::EmbeddingTable>(
          features::load_embeddings(d.embeddings_path));
      if (table->dimension() != static_cast<int>(d.model.weights.size()))
        throw DataError("embedding dimension does not match the linear model");
      d.embeddings = std::move(table);
      return d;
    }
    if (kind == "dictionary") {
      classify::DictionaryModel d;
      d.set_terms(j.at("parameters").at("terms").get<std::vector<std::string>>());
      d.threshold = j.at("parameters").at("threshold");
      return d;
    }
  } catch (const json::exception& e) {
    throw DataError("bad " + kind + " model file " + path.string() + ": " + e.what());
  }
  throw DataError("model file " + path.string() + " holds a '" + kind +
                  "' model, not a response detector");
}

void save_tagger(const tagger::TaggerModel& model, const std::filesystem::path& path) {
  ordered_json j = container("tagger");
  j["hyperparameters"] = {{"feature_version", model.feature_version},
                          {"hash_bits", model.hash_bits},
                          {"averaged", model.averaged},
                          {"seed", model.seed}};
  std::vector<std::uint32_t> ids;
  ids.reserve(model.weights.size());
  for (const auto& [f, _] : model.weights) ids.push_back(f);
  std::sort(ids.begin(), ids.end());
  ordered_json rows = ordered_json::array();
  for (auto f : ids) {
    ordered_json row = ordered_json::array({f});
    for (double w : model.weights.at(f)) row.push_back(w);
    rows.push_back(std::move(row));
  }
  ordered_json labels = ordered_json::array();
  for (std::size_t k = 0; k < tagger::kNumLabels; ++k)
    labels.push_back(tagger::to_string(static_cast<tagger::BioLabel>(k)));
  j["parameters"] = {{"labels", labels}, {"weights", rows}};
  write_json(j, path);
}

tagger::TaggerModel load_tagger(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (j.at("kind") != "tagger")
    throw DataError("model file " + path.string() + " does not hold a tagger");
  tagger::TaggerModel m;
  try {
    const auto& h = j.at("hyperparameters");
    m.feature_version = h.at("feature_version");
    if (m.feature_version != tagger::TaggerModel::kFeatureVersion)
      throw DataError("tagger feature template version " + std::to_string(m.feature_version) +
                      " is not supported");
    m.hash_bits = h.at("hash_bits");
    m.averaged = h.at("averaged");
    m.seed = h.at("seed");
    const auto& labels = j.at("parameters").at("labels");
    if (labels.size() != tagger::kNumLabels) throw DataError("tagger label list mismatch");
    for (std::size_t k = 0; k < tagger::kNumLabels; ++k)
      if (labels[k] != tagger::to_string(static_cast<tagger::BioLabel>(k)))
        throw DataError("tagger label list mismatch");
    for (const auto& row : j.at("parameters").at("weights")) {
      if (row.size() != tagger::kNumLabels + 1) throw DataError("bad tagger weight row");
      tagger::LabelWeights w{};
      for (std::size_t k = 0; k < tagger::kNumLabels; ++k) w[k] = row[k + 1];
      m.weights.emplace(row[0].get<std::uint32_t>(), w);
    }
  } catch (const json::exception& e) {
    throw DataError("bad tagger model file " + path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace adshield::model_io

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "adshield/classify.hpp"
#include "adshield/error.hpp"
#include "adshield/forest.hpp"
#include "adshield/linear.hpp"
#include "adshield/rng.hpp"
#include "adshield/synth.hpp"
#include "adshield/tagger.hpp"
#include "support.hpp"

using namespace adshield;
using namespace adshield::classify;
using features::FeatureKind;
using features::FeatureVector;

namespace {

FeatureVector dense(std::vector<double> v, FeatureKind k = FeatureKind::mean_embedding) {
  return FeatureVector{std::move(v), k};
}

// Two noisy Gaussian blobs in `dim` dimensions.
void blobs(std::size_t n, int dim, double sep, std::uint64_t seed, std::vector<FeatureVector>& x,
           std::vector<bool>& y) {
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    std::vector<double> v(dim);
    for (int d = 0; d < dim; ++d) v[d] = rng.normal() + (pos ? sep : -sep) * (d == 0 ? 1.0 : 0.3);
    x.push_back(dense(v));
    y.push_back(pos);
  }
}

// Plain full-batch subgradient descent on the primal with a decaying step,
// keeping the best iterate.
double subgradient_optimum(const std::vector<FeatureVector>& x, const std::vector<bool>& y,
                           double C, SvmLoss loss) {
  const std::size_t dim = x[0].values.size();
  std::vector<double> w(dim, 0.0), best_w = w;
  double b = 0.0, best_b = 0.0;
  double best = svm_objective(w, b, x, y, C, loss);
  for (int it = 1; it <= 20000; ++it) {
    std::vector<double> gw = w;
    double gb = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double s = y[i] ? 1.0 : -1.0;
      double m = b;
      for (std::size_t d = 0; d < dim; ++d) m += w[d] * x[i].values[d];
      const double slack = 1.0 - s * m;
      if (slack <= 0) continue;
      const double coef = loss == SvmLoss::hinge ? C : 2.0 * C * slack;
      for (std::size_t d = 0; d < dim; ++d) gw[d] -= coef * s * x[i].values[d];
      gb -= coef * s;
    }
    const double step = 0.5 / (C * x.size() * std::sqrt(static_cast<double>(it)));
    for (std::size_t d = 0; d < dim; ++d) w[d] -= step * gw[d];
    b -= step * gb;
    const double obj = svm_objective(w, b, x, y, C, loss);
    if (obj < best) {
      best = obj;
      best_w = w;
      best_b = b;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("balanced class weights") {
  const auto w = balanced_class_weights({true, false, false, false});
  CHECK(w.positive == doctest::Approx(2.0));
  CHECK(w.negative == doctest::Approx(4.0 / 6.0));
  CHECK_THROWS_AS(balanced_class_weights({true, true}), InvalidArgument);
}

TEST_CASE("forest learns XOR with depth-two trees") {
  std::vector<FeatureVector> x;
  std::vector<bool> y;
  for (int rep = 0; rep < 25; ++rep)
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        x.push_back(dense({double(a), double(b)}, FeatureKind::binary_bow));
        y.push_back(a != b);
      }
  ForestConfig cfg;
  cfg.n_trees = 25;
  cfg.max_features = 2;
  cfg.max_depth = 2;
  cfg.bootstrap = false;
  const auto model = train_random_forest(x, y, cfg, 1);
  for (const auto& t : model.trees) CHECK(t.depth() <= 2);
  using Active = std::vector<std::uint32_t>;
  CHECK(model.predict_proba(Active{}) < 0.5);
  CHECK(model.predict_proba(Active{0}) > 0.5);
  CHECK(model.predict_proba(Active{1}) > 0.5);
  CHECK(model.predict_proba(Active{0, 1}) < 0.5);
}

TEST_CASE("forest training is reproducible from the seed") {
  Rng rng(2);
  BinaryMatrix m;
  m.n_features = 30;
  std::vector<bool> y;
  for (int i = 0; i < 300; ++i) {
    std::vector<std::uint32_t> row;
    for (std::uint32_t f = 0; f < 30; ++f)
      if (rng.below(4) == 0) row.push_back(f);
    const bool label = std::find(row.begin(), row.end(), 3u) != row.end() || rng.below(10) == 0;
    m.rows.push_back(row);
    y.push_back(label);
  }
  ForestConfig cfg;
  cfg.n_trees = 20;
  const auto a = train_random_forest(m, y, cfg, 42);
  const auto b = train_random_forest(m, y, cfg, 42);
  const auto c = train_random_forest(m, y, cfg, 43);
  bool differs = false;
  for (const auto& row : m.rows) {
    CHECK(a.predict_proba(row) == b.predict_proba(row));
    differs = differs || a.predict_proba(row) != c.predict_proba(row);
    const double p = a.predict_proba(row);
    CHECK((p >= 0.0 && p <= 1.0));
  }
  CHECK(differs);
  for (const auto& t : a.trees)
    for (const auto& n : t.nodes)
      if (n.feature < 0) CHECK(n.negative_mass + n.positive_mass > 0);
}

TEST_CASE("linear SVM reaches the primal optimum") {
  for (auto loss : {SvmLoss::hinge, SvmLoss::squared_hinge}) {
    for (std::uint64_t seed : {1u, 2u}) {
      std::vector<FeatureVector> x;
      std::vector<bool> y;
      blobs(80, 3, 0.8, seed, x, y);
      LinearSvmConfig cfg;
      cfg.C = 0.5;
      cfg.loss = loss;
      const auto model = train_linear_svm(x, y, cfg);
      const double ours = svm_objective(model.weights, model.bias, x, y, cfg.C, loss);
      const double oracle = subgradient_optimum(x, y, cfg.C, loss);
      CHECK(ours <= oracle * 1.01);
    }
  }
}

TEST_CASE("linear SVM input checks") {
  LinearSvmConfig cfg;
  CHECK_THROWS_AS(train_linear_svm({dense({1.0}), dense({2.0})}, {true, true}, cfg),
                  InvalidArgument);
  CHECK_THROWS_AS(
      train_linear_svm({dense({1.0}), dense({std::nan("")})}, {true, false}, cfg),
      InvalidArgument);
}

TEST_CASE("Platt calibration minimizes the likelihood") {
  Rng rng(9);
  std::vector<double> scores;
  std::vector<bool> labels;
  for (int i = 0; i < 200; ++i) {
    const bool y = rng.below(2) == 1;
    scores.push_back(rng.normal() + (y ? 1.2 : -1.2));
    labels.push_back(y);
  }
  const auto p = calibrate_platt(scores, labels);
  CHECK(p.a < 0.0);
  const double at = platt_nll(scores, labels, p.a, p.b);

  // coarse-to-fine grid oracle
  double ba = 0, bb = 0, best = platt_nll(scores, labels, 0, 0);
  for (double span : {4.0, 0.4, 0.04, 0.004, 0.0004}) {
    const double ca = ba, cb = bb;
    for (int i = -40; i <= 40; ++i)
      for (int j = -40; j <= 40; ++j) {
        const double a = ca + span * i / 40, b = cb + span * j / 40;
        const double v = platt_nll(scores, labels, a, b);
        if (v < best) best = v, ba = a, bb = b;
      }
  }
  CHECK(at <= best + 1e-6);
  CHECK(p.a == doctest::Approx(ba).epsilon(1e-3));

  CHECK(platt_probability(1e6, -1.0, 0.0) == doctest::Approx(1.0));
  CHECK(platt_probability(-1e6, -1.0, 0.0) == doctest::Approx(0.0));
  CHECK(std::isfinite(platt_probability(1e308, 1e10, 0.0)));
  CHECK_THROWS_AS(calibrate_platt(scores, std::vector<bool>(scores.size(), true)),
                  InvalidArgument);
}

TEST_CASE("threshold tuning matches an exhaustive scan") {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng.below(25);
    std::vector<double> probs;
    std::vector<bool> labels;
    for (std::size_t i = 0; i < n; ++i) {
      probs.push_back(static_cast<double>(rng.below(8)) / 7.0);
      labels.push_back(rng.below(2) == 1);
    }
    std::vector<double> cand = {0.0, 1.0};
    std::vector<double> sorted = probs;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) cand.push_back(0.5 * (sorted[i - 1] + sorted[i]));
    double best_f1 = -1, best_t = 0;
    for (double t : cand) {
      const double f = f1_at(probs, labels, t);
      if (f > best_f1 || (f == best_f1 && t > best_t)) best_f1 = f, best_t = t;
    }
    const auto got = tune_threshold(probs, labels);
    CHECK(got.f1 == doctest::Approx(best_f1));
    CHECK(f1_at(probs, labels, got.threshold) == doctest::Approx(best_f1));
    CHECK(got.threshold == doctest::Approx(best_t));
  }
}

TEST_CASE("prediction records round-trip") {
  testsupport::TempDir dir;
  std::vector<PredictionRecord> preds = {{"a", 0.25, false, std::nullopt},
                                         {"b", 0.9, true, std::vector<std::string>{"O", "B-AD"}}};
  write_predictions(preds, dir / "p.jsonl");
  CHECK(read_predictions(dir / "p.jsonl") == preds);
  CHECK(parse_prediction(R"({"response_id":"x","prob":1,"decision":true})").decision);
  CHECK_THROWS_AS(parse_prediction(R"({"prob":1,"decision":true})"), DataError);
  CHECK_THROWS_AS(parse_prediction(R"({"response_id":"x","prob":1.5,"decision":true})"), DataError);
}

TEST_CASE("sentence training set labels sentences by their tags") {
  synth::SynthConfig cfg;
  cfg.n_records = 60;
  const auto d = synth::generate_corpus(cfg);
  const auto set = sentence_training_set(d);
  CHECK(set.skipped_records == 0);
  REQUIRE(set.sentences.size() == set.labels.size());
  for (std::size_t i = 0; i < set.labels.size(); ++i)
    if (set.labels[i]) CHECK(d.records()[set.record_index[i]].has_ad);
  std::set<std::size_t> positive_records;
  for (std::size_t i = 0; i < set.labels.size(); ++i)
    if (set.labels[i]) positive_records.insert(set.record_index[i]);
  CHECK(positive_records.size() == d.count_positive());
}

TEST_CASE("detectors separate the synthetic corpus and predict deterministically") {
  synth::SynthConfig cfg;
  cfg.n_records = 300;
  const auto d = synth::generate_corpus(cfg);
  const auto train = d.subset(corpus::Split::train);
  const auto val = d.subset(corpus::Split::validation);
  const auto test = d.subset(corpus::Split::test);

  RandomForestTrainConfig rf;
  rf.min_df = 2;
  rf.forest.n_trees = 30;
  rf.seed = 3;
  Detector forest = train_random_forest_detector(train, val, rf);
  CHECK(response_f1(forest, test) > 0.85);
  const auto p1 = predict_dataset(forest, test);
  CHECK(p1 == predict_dataset(forest, test));
  REQUIRE(p1.size() == test.size());
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i].response_id == test.records()[i].id);

  auto emb = std::make_shared<features::EmbeddingTable>(synth::synthetic_embeddings(d, 16, 1, {}));
  LinearSvmConfig svm;
  svm.lowercase_inputs = true;
  Detector lin = train_svm_detector(train, val, emb, svm);
  CHECK(std::get<LinearSvmDetector>(lin).model.calibrated);
  CHECK(response_f1(lin, test) > 0.8);

  Detector dict = train_dictionary(train, val, 50);
  CHECK(detector_kind(dict) == "dictionary");
  CHECK(response_f1(dict, test) > 0.2);
}

TEST_CASE("tagger memorizes a small training set") {
  synth::SynthConfig cfg;
  cfg.n_records = 80;
  const auto d = synth::generate_corpus(cfg);
  const auto result = tagger::train_tagger(d, {.epochs = 15, .hash_bits = 18}, 5);
  CHECK(result.train_accuracy > 0.99);
  for (const auto& r : d.records()) {
    const auto tags = tagger::tag_tokens(result.model, *r.tokens);
    CHECK(tagger::is_valid_iob2(tags.labels));
    CHECK(tagger::response_has_ad(tags) == r.has_ad);
  }
  const auto again = tagger::train_tagger(d, {.epochs = 15, .hash_bits = 18}, 5);
  CHECK(again.model.weights == result.model.weights);
}

TEST_CASE("tagger rejects data without ad tags") {
  corpus::LabeledResponse r;
  r.id = "n";
  r.query = "q";
  r.response = "Fine.";
  r.split = corpus::Split::train;
  r.tokens = std::vector<std::string>{"Fine", "."};
  r.tags = std::vector<std::string>{"O", "O"};
  CHECK_THROWS_AS(tagger::train_tagger(corpus::Dataset("d", {r}), {}, 0), InvalidArgument);
  r.tokens.reset();
  r.tags.reset();
  CHECK_THROWS_AS(tagger::train_tagger(corpus::Dataset("d", {r}), {}, 0), InvalidArgument);
}

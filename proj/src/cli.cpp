#include "adshield/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <type_traits>

#include <CLI11.hpp>
#include <json.hpp>

#include "adshield/classify.hpp"
#include "adshield/corpus.hpp"
#include "adshield/error.hpp"
#include "adshield/evaluate.hpp"
#include "adshield/evasion.hpp"
#include "adshield/http_client.hpp"
#include "adshield/model_io.hpp"
#include "adshield/report.hpp"
#include "adshield/stats.hpp"
#include "adshield/tagger.hpp"

namespace adshield::cli {

namespace fs = std::filesystem;

namespace {

template <typename T>
struct is_vector : std::false_type {};
template <typename T>
struct is_vector<std::vector<T>> : std::true_type {};

template <typename T>
CLI::Option* opt(CLI::App* app, const std::string& name, T& var, const std::string& desc) {
  auto* o = app->add_option(name, var, desc);
  if constexpr (!is_vector<T>::value) o->capture_default_str();
  return o;
}

/// Thrown when a generation run ends with incomplete variants.
class PartialResult : public Error {
 public:
  using Error::Error;
};

// ----------------------------------------------------------------- options

struct IngestOpts {
  std::string input, out, format = "canonical", split, stats;
  bool lenient = false, allow_empty_qualities = false;
};

struct TrainOpts {
  std::string kind, train, validation, out, embeddings, loss = "hinge";
  std::uint64_t seed = 0;
  int min_df = 5, k = 2000, trees = 100, max_features = 0, min_samples_leaf = 1, max_depth = 0;
  double C = 1.0;
  int max_epochs = 1000;
  bool lowercase = false;
  int dict_terms = 200;
  int epochs = 10;
  std::uint32_t hash_bits = 20;
  std::vector<int> grid_k, grid_trees, grid_min_samples_leaf;
  std::vector<double> grid_C;
  bool allow_empty_qualities = false;
};

struct PredictOpts {
  std::string model, input, out, embeddings, split;
  bool allow_empty_qualities = false;
};

struct GenerateOpts {
  std::string reference, templates, out_dir, client = "style-mock", base_url, api_path,
      llm_set = "new", log;
  std::vector<std::string> styles, llms;
  unsigned concurrency = 4;
  long long failure_budget = -1;
  int max_attempts = 5;
  int base_delay_ms = 500;
  double temperature = -1.0;
  int max_tokens = 0;
  bool allow_empty_qualities = false;
};

struct EvaluateOpts {
  std::string gold, preds, out, split;
  bool allow_empty_qualities = false;
};

struct RobustnessOpts {
  std::string reference, preds_dir, out, format = "csv", overlap;
  std::vector<std::string> variants, classifiers;
  double q = 0.05, alpha = 0.05;
  bool allow_empty_qualities = false;
};

struct ReportOpts {
  std::string input, out, format = "csv";
  double q = 0.0;
};

// ----------------------------------------------------------------- helpers

std::optional<corpus::Split> split_option(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto sp = corpus::parse_split(s);
  if (!sp) throw InvalidArgument("unknown split '" + s + "'");
  return sp;
}

corpus::Dataset load(const std::string& path, bool allow_empty_qualities,
                     const std::string& split = {}) {
  corpus::LoadOptions lo;
  lo.allow_empty_qualities = allow_empty_qualities;
  corpus::Dataset d = corpus::load_corpus(path, lo);
  if (auto sp = split_option(split)) return d.subset(*sp);
  return d;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

fs::path sidecar_for(const fs::path& output) {
  auto p = output;
  if (fs::is_directory(p)) return p / "run.ini";
  p += ".run.ini";
  return p;
}

/// Resolved config of the parsed subcommand: every option with its value or
/// default; options never given and without a default are left out.
void write_sidecar(const CLI::App& sub, const fs::path& output) {
  std::istringstream in(sub.config_to_str(true, false));
  std::ostringstream kept;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) {
      const auto value = line.substr(eq + 1);
      if (value == "\"\"" || value == "''" || value == "\"{}\"") continue;
    }
    kept << line << '\n';
  }
  const auto path = sidecar_for(output);
  ensure_parent(path);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write config sidecar " + path.string());
  f << "# resolved configuration; rerun with: adshield --config <this file>\n"
    << "[" << sub.get_name() << "]\n"
    << kept.str();
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

nlohmann::ordered_json metrics_json(const evaluate::Metrics& m) {
  return {{"precision", fmt4(m.precision)}, {"recall", fmt4(m.recall)}, {"f1", fmt4(m.f1)},
          {"tp", m.tp},   {"fp", m.fp},   {"fn", m.fn},   {"tn", m.tn}};
}

// ---------------------------------------------------------------- commands

int run_ingest(const IngestOpts& o, std::ostream& out) {
  corpus::LoadOptions lo;
  lo.strict = !o.lenient;
  lo.allow_empty_qualities = o.allow_empty_qualities;
  corpus::IngestStats st;
  corpus::Dataset d;
  if (o.format == "canonical") {
    d = corpus::load_corpus(o.input, lo, &st);
    if (auto sp = split_option(o.split)) d = d.subset(*sp);
  } else if (o.format == "wgna") {
    d = corpus::import_wgna(o.input, lo, split_option(o.split), &st);
  } else {
    throw InvalidArgument("unknown input format '" + o.format + "' (canonical or wgna)");
  }
  ensure_parent(o.out);
  corpus::write_corpus(d, o.out);

  nlohmann::ordered_json summary;
  summary["input"] = o.input;
  summary["lines"] = st.lines;
  summary["loaded"] = d.size();
  summary["dropped"] = st.dropped;
  nlohmann::ordered_json splits;
  for (const auto& [sp, c] : corpus::count_by_split(d))
    splits[std::string(corpus::to_string(sp))] = {{"total", c.total}, {"positive", c.positive}};
  summary["splits"] = splits;
  out << summary.dump(2) << '\n';
  if (!o.stats.empty()) {
    ensure_parent(o.stats);
    std::ofstream f(o.stats, std::ios::binary | std::ios::trunc);
    f << summary.dump(2) << '\n';
  }
  return kOk;
}

classify::SvmLoss parse_loss(const std::string& s) {
  if (s == "hinge") return classify::SvmLoss::hinge;
  if (s == "squared_hinge") return classify::SvmLoss::squared_hinge;
  throw InvalidArgument("unknown SVM loss '" + s + "' (hinge or squared_hinge)");
}

template <typename T>
std::vector<T> or_single(const std::vector<T>& grid, T value) {
  return grid.empty() ? std::vector<T>{value} : grid;
}

int run_train(const TrainOpts& o, std::ostream& out) {
  const corpus::Dataset all = load(o.train, o.allow_empty_qualities);
  const bool has_splits = o.validation.empty();
  const corpus::Dataset train = has_splits ? all.subset(corpus::Split::train) : all;
  const corpus::Dataset validation =
      has_splits ? all.subset(corpus::Split::validation) : load(o.validation, o.allow_empty_qualities);
  if (train.empty()) throw DataError("no training records in " + o.train);
  ensure_parent(o.out);

  nlohmann::ordered_json summary;
  summary["kind"] = o.kind;
  summary["train_records"] = train.size();
  summary["validation_records"] = validation.size();

  if (o.kind == "tagger") {
    tagger::TaggerConfig tc;
    tc.epochs = o.epochs;
    tc.hash_bits = o.hash_bits;
    const auto res = tagger::train_tagger(train, tc, o.seed);
    model_io::save_tagger(res.model, o.out);
    summary["train_tokens"] = res.train_tokens;
    summary["train_accuracy"] = fmt4(res.train_accuracy);
    out << summary.dump(2) << '\n';
    return kOk;
  }
  if (validation.empty()) throw DataError("threshold tuning needs validation records");

  classify::Detector detector;
  if (o.kind == "random_forest") {
    std::vector<classify::RandomForestTrainConfig> grid;
    for (int k : or_single(o.grid_k, o.k))
      for (int t : or_single(o.grid_trees, o.trees))
        for (int leaf : or_single(o.grid_min_samples_leaf, o.min_samples_leaf)) {
          classify::RandomForestTrainConfig c;
          c.min_df = o.min_df;
          c.k = k;
          c.forest.n_trees = t;
          c.forest.max_features = o.max_features;
          c.forest.min_samples_leaf = leaf;
          c.forest.max_depth = o.max_depth;
          c.seed = o.seed;
          grid.push_back(c);
        }
    std::optional<classify::RandomForestDetector> best;
    double best_f1 = -1.0;
    for (const auto& c : grid) {
      auto d = classify::train_random_forest_detector(train, validation, c);
      const double f1 = classify::response_f1(d, validation);
      if (f1 > best_f1) {
        best_f1 = f1;
        best = std::move(d);
      }
    }
    summary["grid_size"] = grid.size();
    summary["vocabulary"] = best->vocab.size();
    detector = std::move(*best);
  } else if (o.kind == "linear_svm") {
    if (o.embeddings.empty()) throw InvalidArgument("linear_svm needs --embeddings");
    auto table = std::make_shared<const features::EmbeddingTable>(features::load_embeddings(o.embeddings));
    std::optional<classify::LinearSvmDetector> best;
    double best_f1 = -1.0;
    std::size_t trials = 0;
    for (double C : or_single(o.grid_C, o.C)) {
      classify::LinearSvmConfig c;
      c.C = C;
      c.loss = parse_loss(o.loss);
      c.max_epochs = o.max_epochs;
      c.lowercase_inputs = o.lowercase;
      c.seed = o.seed;
      auto d = classify::train_svm_detector(train, validation, table, c);
      ++trials;
      const double f1 = classify::response_f1(d, validation);
      if (f1 > best_f1) {
        best_f1 = f1;
        best = std::move(d);
      }
    }
    best->embeddings_path = fs::absolute(o.embeddings).lexically_normal().string();
    summary["grid_size"] = trials;
    summary["C"] = best->model.C;
    detector = std::move(*best);
  } else if (o.kind == "dictionary") {
    detector = classify::train_dictionary(train, validation, o.dict_terms);
  } else {
    throw InvalidArgument("unknown model kind '" + o.kind +
                          "' (random_forest, linear_svm, dictionary, tagger)");
  }
  summary["threshold"] = fmt4(classify::decision_threshold(detector));
  summary["validation_f1"] = fmt4(classify::response_f1(detector, validation));
  model_io::save_detector(detector, o.out);
  out << summary.dump(2) << '\n';
  return kOk;
}

std::vector<classify::PredictionRecord> tag_dataset(const tagger::TaggerModel& model,
                                                    const corpus::Dataset& d) {
  std::vector<classify::PredictionRecord> preds;
  preds.reserve(d.size());
  for (const auto& r : d.records()) {
    const auto seq = tagger::tag_tokens(model, classify::response_tokens(r));
    classify::PredictionRecord p;
    p.response_id = r.id;
    p.decision = tagger::response_has_ad(seq);
    p.prob = p.decision ? 1.0 : 0.0;
    p.tags = tagger::label_strings(seq.labels);
    preds.push_back(std::move(p));
  }
  return preds;
}

int run_predict(const PredictOpts& o, std::ostream& out, bool tag_only) {
  const corpus::Dataset d = load(o.input, o.allow_empty_qualities, o.split);
  const std::string kind = model_io::model_kind(o.model);
  std::vector<classify::PredictionRecord> preds;
  if (kind == "tagger") {
    preds = tag_dataset(model_io::load_tagger(o.model), d);
  } else {
    if (tag_only) throw InvalidArgument("tag needs a tagger model, got " + kind);
    std::optional<fs::path> emb;
    if (!o.embeddings.empty()) emb = o.embeddings;
    preds = classify::predict_dataset(model_io::load_detector(o.model, emb), d);
  }
  ensure_parent(o.out);
  classify::write_predictions(preds, o.out);
  std::size_t positive = 0;
  for (const auto& p : preds) positive += p.decision;
  out << "predicted " << preds.size() << " responses (" << positive << " with ads) -> " << o.out
      << '\n';
  return kOk;
}

std::unique_ptr<evasion::LlmClient> make_client(const GenerateOpts& o) {
  if (o.client == "style-mock") return std::make_unique<evasion::StyleMockClient>();
  if (o.client == "echo") return std::make_unique<evasion::EchoMockClient>();
  if (o.client == "failing") return std::make_unique<evasion::FailingClient>(true);
  if (o.client == "http") {
    if (o.base_url.empty()) throw InvalidArgument("the http client needs --base-url");
    // local endpoints may not need a credential
    const std::string key = evasion::api_key_from_env().value_or("");
    if (o.api_path.empty()) return std::make_unique<evasion::HttpLlmClient>(o.base_url, key);
    return std::make_unique<evasion::HttpLlmClient>(o.base_url, key, o.api_path);
  }
  throw InvalidArgument("unknown client '" + o.client + "' (style-mock, echo, failing, http)");
}

int run_generate(const GenerateOpts& o, std::ostream& out) {
  const corpus::Dataset reference = load(o.reference, o.allow_empty_qualities);
  const auto pack = evasion::load_prompt_pack(o.templates);
  const auto llm_set = corpus::parse_llm_set(o.llm_set);
  if (!llm_set || *llm_set == corpus::LlmSet::none)
    throw InvalidArgument("--llm-set must be old or new");
  if (o.styles.empty() || o.llms.empty()) throw InvalidArgument("need --styles and --llms");
  auto client = make_client(o);

  fs::create_directories(o.out_dir);
  std::optional<evasion::RequestLog> log;
  if (!o.log.empty()) log.emplace(o.log);
  evasion::GenerationOptions go;
  go.concurrency = o.concurrency;
  go.retry.max_attempts = o.max_attempts;
  go.retry.base_delay = std::chrono::milliseconds(o.base_delay_ms);
  if (o.failure_budget >= 0) go.failure_budget = static_cast<std::size_t>(o.failure_budget);
  if (o.temperature >= 0 || o.max_tokens > 0) {
    evasion::GenerationParams p;
    if (o.temperature >= 0) p.temperature = o.temperature;
    if (o.max_tokens > 0) p.max_tokens = o.max_tokens;
    go.params = p;
  }
  if (log) go.log = &*log;

  const auto results =
      evasion::generate_variants(reference, evasion::cross(o.styles, o.llms, *llm_set), pack,
                                 *client, go);
  bool partial = false;
  for (const auto& r : results) {
    if (r.complete()) {
      const auto path = fs::path(o.out_dir) / (r.name + ".jsonl");
      corpus::write_corpus(*r.dataset, path);
      out << r.name << ": " << r.dataset->size() << " records -> " << path.string() << '\n';
    } else {
      partial = true;
      const auto path = fs::path(o.out_dir) / (r.name + ".failures.jsonl");
      std::ofstream f(path, std::ios::binary | std::ios::trunc);
      for (const auto& fl : r.failures)
        f << nlohmann::ordered_json{{"response_id", fl.response_id},
                                    {"reason", fl.reason},
                                    {"attempts", fl.attempts}}
                 .dump()
          << '\n';
      out << r.name << ": incomplete, " << r.failures.size() << " failed requests -> "
          << path.string() << '\n';
    }
  }
  if (partial) throw PartialResult("some variants are incomplete");
  return kOk;
}

int run_evaluate(const EvaluateOpts& o, std::ostream& out) {
  const corpus::Dataset gold = load(o.gold, o.allow_empty_qualities, o.split);
  const auto preds = classify::read_predictions(o.preds);
  nlohmann::ordered_json j;
  j["gold"] = o.gold;
  j["predictions"] = o.preds;
  j["response"] = metrics_json(evaluate::response_metrics(preds, gold));
  const bool tagged = std::any_of(preds.begin(), preds.end(), [](const auto& p) { return p.tags.has_value(); });
  if (tagged) {
    const auto gold_ents = evaluate::gold_entities(gold);
    auto pred_ents = evaluate::predicted_entities(preds);
    evaluate::EntityMap pred_subset;
    for (const auto& [id, _] : gold_ents) {
      auto it = pred_ents.find(id);
      if (it == pred_ents.end())
        throw DataError("prediction without tags for a tagged gold record", id);
      pred_subset.emplace(id, it->second);
    }
    j["entity"] = metrics_json(evaluate::entity_metrics(gold_ents, pred_subset));
  }
  const std::string text = j.dump(2);
  out << text << '\n';
  if (!o.out.empty()) {
    ensure_parent(o.out);
    std::ofstream f(o.out, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + o.out);
    f << text << '\n';
  }
  return kOk;
}

report::ReportFormat parse_format(const std::string& s) {
  if (s == "csv") return report::ReportFormat::csv;
  if (s == "structured" || s == "json") return report::ReportFormat::structured;
  throw InvalidArgument("unknown report format '" + s + "' (csv or structured)");
}

int run_robustness(const RobustnessOpts& o, std::ostream& out) {
  stats::StatConfig sc;
  sc.alpha = o.alpha;
  sc.fdr_q = o.q;
  if (!(o.alpha > 0 && o.alpha < 1)) throw InvalidArgument("--alpha must lie in (0,1)");
  sc.z = stats::two_sided_z(o.alpha);
  const auto format = parse_format(o.format);

  const corpus::Dataset reference = load(o.reference, o.allow_empty_qualities);
  std::vector<corpus::Dataset> variants;
  for (const auto& v : o.variants) variants.push_back(load(v, o.allow_empty_qualities));

  std::vector<std::string> classifiers = o.classifiers;
  if (classifiers.empty()) {
    for (const auto& e : fs::directory_iterator(o.preds_dir))
      if (e.is_directory()) classifiers.push_back(e.path().filename().string());
    std::sort(classifiers.begin(), classifiers.end());
  }
  if (classifiers.empty()) throw DataError("no classifier directories under " + o.preds_dir);

  report::PredictionTable table;
  auto read_set = [&](const std::string& c, const corpus::Dataset& d) {
    const auto path = fs::path(o.preds_dir) / c / (d.name() + ".jsonl");
    if (!fs::exists(path)) throw DataError("missing prediction file " + path.string());
    table[c][d.name()] = classify::read_predictions(path);
  };
  for (const auto& c : classifiers) {
    read_set(c, reference);
    for (const auto& v : variants) read_set(c, v);
  }

  const auto rep = report::robustness_report(reference, variants, table, sc);
  ensure_parent(o.out);
  report::write_report(rep, o.out, format);
  if (!o.overlap.empty()) {
    ensure_parent(o.overlap);
    report::write_overlap(report::false_negative_overlap(reference, variants, table), o.overlap);
  }
  std::size_t sig = 0;
  for (const auto& r : rep.rows) sig += r.significant;
  out << rep.odds_ratio_rows() << " odds-ratio rows over " << classifiers.size()
      << " classifiers, " << sig << " significant after FDR control -> " << o.out << '\n';
  return kOk;
}

int run_report(const ReportOpts& o, std::ostream& out) {
  auto rep = report::read_report(o.input);
  if (o.q > 0) report::apply_fdr(rep, o.q);
  ensure_parent(o.out);
  report::write_report(rep, o.out, parse_format(o.format));
  out << rep.rows.size() << " rows -> " << o.out << '\n';
  return kOk;
}

}  // namespace

int execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"adshield: detect generated native ads in LLM responses and measure robustness",
               "adshield"};
  app.set_config("--config", "", "Read options from a key=value config file");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  IngestOpts io;
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus file and write the canonical format");
  opt(ingest, "--input", io.input, "Corpus or WGNA release file")->required();
  opt(ingest, "--out", io.out, "Canonical corpus output")->required();
  opt(ingest, "--format", io.format, "canonical or wgna");
  opt(ingest, "--split", io.split, "Keep (canonical) or assign (wgna) this split");
  opt(ingest, "--stats", io.stats, "Write the ingestion summary here as well");
  ingest->add_flag("--lenient", io.lenient, "Drop and count invalid records instead of failing");
  ingest->add_flag("--allow-empty-qualities", io.allow_empty_qualities, "Accept ads without qualities");

  TrainOpts to;
  auto* train = app.add_subcommand("train", "Train a detector or the BIO tagger");
  opt(train, "--kind", to.kind, "random_forest, linear_svm, dictionary or tagger")->required();
  opt(train, "--train", to.train, "Training corpus (split field selects train/validation)")->required();
  opt(train, "--validation", to.validation, "Separate validation corpus");
  opt(train, "--out", to.out, "Model file")->required();
  opt(train, "--seed", to.seed, "Random seed");
  opt(train, "--min-df", to.min_df, "Minimum document frequency of vocabulary terms");
  opt(train, "--k", to.k, "Vocabulary size");
  opt(train, "--trees", to.trees, "Number of trees");
  opt(train, "--max-features", to.max_features, "Features per split (0: sqrt)");
  opt(train, "--min-samples-leaf", to.min_samples_leaf, "Minimum rows per leaf");
  opt(train, "--max-depth", to.max_depth, "Maximum tree depth (0: unlimited)");
  opt(train, "--C", to.C, "SVM regularization constant");
  opt(train, "--loss", to.loss, "hinge or squared_hinge");
  opt(train, "--max-epochs", to.max_epochs, "SVM coordinate-descent epochs");
  opt(train, "--embeddings", to.embeddings, "Word vectors (text format) for linear_svm");
  train->add_flag("--lowercase", to.lowercase, "Lowercase tokens before embedding lookup");
  opt(train, "--dict-terms", to.dict_terms, "Dictionary size");
  opt(train, "--epochs", to.epochs, "Tagger training epochs");
  opt(train, "--hash-bits", to.hash_bits, "Tagger feature hashing bits");
  opt(train, "--grid-k", to.grid_k, "Grid over vocabulary sizes")->delimiter(',');
  opt(train, "--grid-trees", to.grid_trees, "Grid over tree counts")->delimiter(',');
  opt(train, "--grid-min-samples-leaf", to.grid_min_samples_leaf, "Grid over leaf sizes")->delimiter(',');
  opt(train, "--grid-C", to.grid_C, "Grid over C")->delimiter(',');
  train->add_flag("--allow-empty-qualities", to.allow_empty_qualities, "Accept ads without qualities");

  PredictOpts po;
  auto* predict = app.add_subcommand("predict", "Score responses with a trained model");
  auto* tag = app.add_subcommand("tag", "Tag response tokens with a trained tagger");
  for (auto* sub : {predict, tag}) {
    opt(sub, "--model", po.model, "Model file")->required();
    opt(sub, "--input", po.input, "Corpus to score")->required();
    opt(sub, "--out", po.out, "Prediction file")->required();
    opt(sub, "--split", po.split, "Only score records of this split");
    opt(sub, "--embeddings", po.embeddings, "Override the embedding file of a linear model");
    sub->add_flag("--allow-empty-qualities", po.allow_empty_qualities, "Accept ads without qualities");
  }

  GenerateOpts go;
  auto* generate = app.add_subcommand("generate", "Regenerate the reference ads in new styles");
  opt(generate, "--reference", go.reference, "Reference test set")->required();
  opt(generate, "--templates", go.templates, "Directory of prompt templates")->required();
  opt(generate, "--out-dir", go.out_dir, "Output directory for variant test sets")->required();
  opt(generate, "--styles", go.styles, "Template ids")->required()->delimiter(',');
  opt(generate, "--llms", go.llms, "Model identifiers")->required()->delimiter(',');
  opt(generate, "--llm-set", go.llm_set, "old or new");
  opt(generate, "--client", go.client, "style-mock, echo, failing or http");
  opt(generate, "--base-url", go.base_url, "Endpoint of an OpenAI-compatible API");
  opt(generate, "--api-path", go.api_path, "Request path of the chat completion endpoint");
  opt(generate, "--concurrency", go.concurrency, "Requests in flight");
  opt(generate, "--failure-budget", go.failure_budget, "Abort after this many failed requests (-1: never)");
  opt(generate, "--max-attempts", go.max_attempts, "Attempts per request");
  opt(generate, "--base-delay-ms", go.base_delay_ms, "First retry delay");
  opt(generate, "--temperature", go.temperature, "Sampling temperature (-1: per-model default)");
  opt(generate, "--max-tokens", go.max_tokens, "Completion token limit (0: default)");
  opt(generate, "--log", go.log, "Request log file");
  generate->add_flag("--allow-empty-qualities", go.allow_empty_qualities, "Accept ads without qualities");

  EvaluateOpts eo;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions against gold labels");
  opt(evaluate_cmd, "--gold", eo.gold, "Gold corpus")->required();
  opt(evaluate_cmd, "--preds", eo.preds, "Prediction file")->required();
  opt(evaluate_cmd, "--split", eo.split, "Only evaluate this split");
  opt(evaluate_cmd, "--out", eo.out, "Write the metrics here as well");
  evaluate_cmd->add_flag("--allow-empty-qualities", eo.allow_empty_qualities, "Accept ads without qualities");

  RobustnessOpts ro;
  auto* robustness = app.add_subcommand("robustness", "Odds ratios of every classifier on every variant");
  opt(robustness, "--reference", ro.reference, "Reference test set")->required();
  opt(robustness, "--variants", ro.variants, "Variant test sets")->required();
  opt(robustness, "--preds-dir", ro.preds_dir, "Predictions as <dir>/<classifier>/<test set>.jsonl")->required();
  opt(robustness, "--classifiers", ro.classifiers, "Classifier subdirectories (default: all)")->delimiter(',');
  opt(robustness, "--q", ro.q, "False discovery rate");
  opt(robustness, "--alpha", ro.alpha, "Confidence interval level is 1 - alpha");
  opt(robustness, "--out", ro.out, "Report file")->required();
  opt(robustness, "--format", ro.format, "csv or structured");
  opt(robustness, "--overlap", ro.overlap, "Write mean false-negative Jaccard overlaps here");
  robustness->add_flag("--allow-empty-qualities", ro.allow_empty_qualities, "Accept ads without qualities");

  ReportOpts rpo;
  auto* report_cmd = app.add_subcommand("report", "Convert a report between formats");
  opt(report_cmd, "--input", rpo.input, "Report (.csv or .json)")->required();
  opt(report_cmd, "--out", rpo.out, "Output report")->required();
  opt(report_cmd, "--format", rpo.format, "csv or structured");
  opt(report_cmd, "--q", rpo.q, "Recompute significance at this FDR level (0: keep)");

  for (auto* sub : app.get_subcommands({})) sub->configurable();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    if (!app.get_subcommands().empty()) err << app.get_subcommands().front()->help();
    else err << app.help();
    return kUsageError;
  }

  try {
    int rc = kOk;
    fs::path output;
    if (ingest->parsed()) {
      rc = run_ingest(io, out);
      output = io.out;
    } else if (train->parsed()) {
      rc = run_train(to, out);
      output = to.out;
    } else if (predict->parsed() || tag->parsed()) {
      rc = run_predict(po, out, tag->parsed());
      output = po.out;
    } else if (generate->parsed()) {
      output = go.out_dir;
      try {
        rc = run_generate(go, out);
      } catch (const PartialResult& e) {
        write_sidecar(*app.get_subcommands().front(), output);
        err << "partial result: " << e.what() << '\n';
        return kPartialGeneration;
      }
    } else if (evaluate_cmd->parsed()) {
      rc = run_evaluate(eo, out);
      output = eo.out.empty() ? fs::path(eo.preds).concat(".eval") : fs::path(eo.out);
    } else if (robustness->parsed()) {
      rc = run_robustness(ro, out);
      output = ro.out;
    } else if (report_cmd->parsed()) {
      rc = run_report(rpo, out);
      output = rpo.out;
    }
    write_sidecar(*app.get_subcommands().front(), output);
    return rc;
  } catch (const evasion::GenerationError& e) {
    err << "error: " << e.what() << '\n';
    return kPartialGeneration;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

int execute(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return execute(args, std::cout, std::cerr);
}

}  // namespace adshield::cli

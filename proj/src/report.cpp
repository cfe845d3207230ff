#include "adshield/report.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "adshield/error.hpp"
#include "adshield/evaluate.hpp"

namespace adshield::report {

namespace {

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s = buf;
  if (s == "-0.0000") s = "0.0000";
  return s;
}

double round4(double v) { return std::stod(fixed4(v)); }

std::string opt4(const std::optional<double>& v) { return v ? fixed4(*v) : std::string(); }

std::set<std::string> positive_ids(const corpus::Dataset& d) {
  std::set<std::string> ids;
  for (const auto& r : d.records())
    if (r.has_ad) ids.insert(r.id);
  return ids;
}

const std::vector<classify::PredictionRecord>& lookup(const PredictionTable& table,
                                                      const std::string& classifier,
                                                      const std::string& test_set) {
  const auto c = table.find(classifier);
  if (c != table.end()) {
    const auto t = c->second.find(test_set);
    if (t != c->second.end()) return t->second;
  }
  throw DataError("no predictions of classifier '" + classifier + "' for test set '" +
                  test_set + "'");
}

ReportRow metrics_row(const std::string& classifier, const std::string& test_set,
                      const evaluate::Metrics& m) {
  ReportRow row;
  row.classifier = classifier;
  row.test_set = test_set;
  row.tp = m.tp;
  row.fp = m.fp;
  row.fn = m.fn;
  row.tn = m.tn;
  row.precision = m.precision;
  row.recall = m.recall;
  row.f1 = m.f1;
  return row;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::optional<double> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace

std::size_t Report::odds_ratio_rows() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.odds_ratio.has_value();
  return n;
}

void apply_fdr(Report& report, double q) {
  std::vector<double> p;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    report.rows[i].significant = false;
    if (report.rows[i].p_value) {
      p.push_back(*report.rows[i].p_value);
      where.push_back(i);
    }
  }
  if (p.empty()) return;
  const auto reject = stats::benjamini_hochberg(p, q);
  for (std::size_t k = 0; k < where.size(); ++k) report.rows[where[k]].significant = reject[k];
}

Report robustness_report(const corpus::Dataset& reference,
                         const std::vector<corpus::Dataset>& variants,
                         const PredictionTable& predictions, const stats::StatConfig& config) {
  stats::validate(config);
  const auto gold_pos = positive_ids(reference);
  Report report;
  for (const auto& [classifier, _] : predictions) {
    const auto& ref_preds = lookup(predictions, classifier, reference.name());
    report.rows.push_back(metrics_row(classifier, reference.name(),
                                      evaluate::response_metrics(ref_preds, reference)));
    for (const auto& v : variants) {
      const auto& preds = lookup(predictions, classifier, v.name());
      ReportRow row = metrics_row(classifier, v.name(), evaluate::response_metrics(preds, v));
      const auto table = evaluate::build_contingency(ref_preds, preds, gold_pos);
      const auto orr = stats::odds_ratio(table, config);
      row.odds_ratio = orr.odds_ratio;
      row.ci_low = orr.ci_low;
      row.ci_high = orr.ci_high;
      row.p_value = orr.p_value;
      report.rows.push_back(std::move(row));
    }
  }
  apply_fdr(report, config.fdr_q);
  return report;
}

std::vector<OverlapRow> false_negative_overlap(const corpus::Dataset& reference,
                                               const std::vector<corpus::Dataset>& variants,
                                               const PredictionTable& predictions) {
  std::vector<const corpus::Dataset*> sets{&reference};
  for (const auto& v : variants) sets.push_back(&v);
  std::vector<std::string> names;
  for (const auto& [c, _] : predictions) names.push_back(c);
  std::map<std::string, std::vector<std::set<std::string>>> fns;
  for (const auto& c : names)
    for (const auto* d : sets)
      fns[c].push_back(evaluate::false_negative_ids(lookup(predictions, c, d->name()), *d));
  std::vector<OverlapRow> out;
  for (std::size_t a = 0; a < names.size(); ++a)
    for (std::size_t b = a + 1; b < names.size(); ++b) {
      std::vector<double> per_set;
      for (std::size_t s = 0; s < sets.size(); ++s)
        per_set.push_back(stats::jaccard_index(fns[names[a]][s], fns[names[b]][s]));
      out.push_back({names[a], names[b], stats::mean(per_set)});
    }
  return out;
}

void write_overlap(const std::vector<OverlapRow>& rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "classifier_a,classifier_b,mean_jaccard\n";
  for (const auto& r : rows)
    out << csv_cell(r.classifier_a) << ',' << csv_cell(r.classifier_b) << ','
        << fixed4(r.mean_jaccard) << '\n';
}

std::filesystem::path plot_data_path(const std::filesystem::path& report_path) {
  auto p = report_path;
  p.replace_filename(report_path.stem().string() + ".plot.csv");
  return p;
}

void write_report(const Report& report, const std::filesystem::path& path, ReportFormat format) {
  if (format == ReportFormat::csv) {
    auto out = open_out(path);
    out << kCsvHeader << '\n';
    for (const auto& r : report.rows) {
      out << csv_cell(r.classifier) << ',' << csv_cell(r.test_set) << ',' << r.tp << ','
          << r.fp << ',' << r.fn << ',' << r.tn << ',' << fixed4(r.precision) << ','
          << fixed4(r.recall) << ',' << fixed4(r.f1) << ',' << opt4(r.odds_ratio) << ','
          << opt4(r.ci_low) << ',' << opt4(r.ci_high) << ',' << opt4(r.p_value) << ','
          << (r.p_value ? (r.significant ? "true" : "false") : "") << '\n';
    }
  } else {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    auto num = [](const std::optional<double>& v) {
      return v ? nlohmann::ordered_json(round4(*v)) : nlohmann::ordered_json(nullptr);
    };
    for (const auto& r : report.rows) {
      nlohmann::ordered_json j;
      j["classifier"] = r.classifier;
      j["test_set"] = r.test_set;
      j["tp"] = r.tp;
      j["fp"] = r.fp;
      j["fn"] = r.fn;
      j["tn"] = r.tn;
      j["precision"] = round4(r.precision);
      j["recall"] = round4(r.recall);
      j["f1"] = round4(r.f1);
      j["odds_ratio"] = num(r.odds_ratio);
      j["ci_low"] = num(r.ci_low);
      j["ci_high"] = num(r.ci_high);
      j["p_value"] = num(r.p_value);
      j["significant"] = r.p_value ? nlohmann::ordered_json(r.significant) : nullptr;
      rows.push_back(std::move(j));
    }
    auto out = open_out(path);
    out << nlohmann::ordered_json{{"rows", rows}}.dump(2) << '\n';
  }

  auto plot = open_out(plot_data_path(path));
  plot << "classifier,test_set,or,ci_low,ci_high\n";
  for (const auto& r : report.rows)
    if (r.odds_ratio)
      plot << csv_cell(r.classifier) << ',' << csv_cell(r.test_set) << ','
           << fixed4(*r.odds_ratio) << ',' << opt4(r.ci_low) << ',' << opt4(r.ci_high) << '\n';
}

Report read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read report " + path.string());
  Report report;
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      in >> j;
      for (const auto& o : j.at("rows")) {
        ReportRow r;
        r.classifier = o.at("classifier");
        r.test_set = o.at("test_set");
        r.tp = o.at("tp");
        r.fp = o.at("fp");
        r.fn = o.at("fn");
        r.tn = o.at("tn");
        r.precision = o.at("precision");
        r.recall = o.at("recall");
        r.f1 = o.at("f1");
        auto opt = [&](const char* key) -> std::optional<double> {
          if (o.at(key).is_null()) return std::nullopt;
          return o.at(key).get<double>();
        };
        r.odds_ratio = opt("odds_ratio");
        r.ci_low = opt("ci_low");
        r.ci_high = opt("ci_high");
        r.p_value = opt("p_value");
        r.significant = o.at("significant").is_boolean() && o.at("significant").get<bool>();
        report.rows.push_back(std::move(r));
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed report " + path.string() + ": " + e.what());
    }
    return report;
  }
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw DataError("report " + path.string() + " lacks the expected header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 14)
      throw DataError("report " + path.string() + ":" + std::to_string(lineno) +
                      ": expected 14 columns");
    try {
      ReportRow r;
      r.classifier = c[0];
      r.test_set = c[1];
      r.tp = std::stoull(c[2]);
      r.fp = std::stoull(c[3]);
      r.fn = std::stoull(c[4]);
      r.tn = std::stoull(c[5]);
      r.precision = std::stod(c[6]);
      r.recall = std::stod(c[7]);
      r.f1 = std::stod(c[8]);
      r.odds_ratio = parse_opt(c[9]);
      r.ci_low = parse_opt(c[10]);
      r.ci_high = parse_opt(c[11]);
      r.p_value = parse_opt(c[12]);
      r.significant = c[13] == "true";
      report.rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw DataError("report " + path.string() + ":" + std::to_string(lineno) +
                      ": bad number");
    }
  }
  return report;
}

}  // namespace adshield::report

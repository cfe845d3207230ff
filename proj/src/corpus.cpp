#include "adshield/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "adshield/bio.hpp"
#include "adshield/error.hpp"

namespace adshield::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "?";
}

std::string_view to_string(LlmSet s) {
  switch (s) {
    case LlmSet::old_llms: return "old";
    case LlmSet::new_llms: return "new";
    case LlmSet::none: return "none";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "validation" || s == "val" || s == "valid") return Split::validation;
  if (s == "test") return Split::test;
  return std::nullopt;
}

std::optional<LlmSet> parse_llm_set(std::string_view s) {
  if (s == "old") return LlmSet::old_llms;
  if (s == "new") return LlmSet::new_llms;
  if (s == "none") return LlmSet::none;
  return std::nullopt;
}

// ---------------------------------------------------------------- Dataset

Dataset::Dataset(std::string name, std::vector<LabeledResponse> records)
    : name_(std::move(name)), records_(std::move(records)) {
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (!index_.emplace(records_[i].id, i).second)
      throw DataError("duplicate id in dataset '" + name_ + "'", records_[i].id);
  }
}

const LabeledResponse* Dataset::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::size_t Dataset::count_positive() const {
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [](const auto& r) { return r.has_ad; }));
}

Dataset Dataset::subset(Split split) const {
  std::vector<LabeledResponse> out;
  for (const auto& r : records_)
    if (r.split == split) out.push_back(r);
  return Dataset(name_ + "." + std::string(to_string(split)), std::move(out));
}

std::size_t IngestStats::total_dropped() const {
  std::size_t n = 0;
  for (const auto& [_, c] : dropped) n += c;
  return n;
}

// ------------------------------------------------------------- validation

std::vector<std::string> validate(const LabeledResponse& r, bool allow_empty_qualities) {
  std::vector<std::string> reasons;
  if (r.id.empty()) reasons.emplace_back("empty-id");
  if (r.has_ad != r.ad.has_value()) reasons.emplace_back("ad-annotation-mismatch");
  if (r.ad) {
    if (r.ad->item.empty()) reasons.emplace_back("empty-item");
    if (r.ad->advertiser.empty()) reasons.emplace_back("empty-advertiser");
    if (r.ad->qualities.empty() && !allow_empty_qualities)
      reasons.emplace_back("empty-qualities");
  }
  if ((r.meta.llm_set == LlmSet::none) == r.has_ad) reasons.emplace_back("llm-set-mismatch");
  if (r.tags.has_value() != r.tokens.has_value()) {
    reasons.emplace_back("tags-without-tokens");
  } else if (r.tags) {
    if (r.tags->size() != r.tokens->size()) {
      reasons.emplace_back("tag-token-length-mismatch");
    } else {
      bool unknown = false;
      bool any_ad = false;
      for (const auto& t : *r.tags) {
        auto l = tagger::parse_label(t);
        if (!l) unknown = true;
        else if (*l != tagger::BioLabel::O) any_ad = true;
      }
      if (unknown) reasons.emplace_back("unknown-tag");
      else if (r.has_ad && !any_ad) reasons.emplace_back("positive-without-ad-tags");
      else if (!r.has_ad && any_ad) reasons.emplace_back("negative-with-ad-tags");
    }
  }
  return reasons;
}

// ------------------------------------------------------------ record I/O

namespace {

std::string get_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string())
    throw DataError(std::string("missing or non-string field '") + key + "'");
  return it->get<std::string>();
}

std::optional<std::string> get_opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string())
    throw DataError(std::string("field '") + key + "' must be a string or null");
  return it->get<std::string>();
}

std::optional<std::vector<std::string>> get_opt_string_list(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_array()) throw DataError(std::string("field '") + key + "' must be a list or null");
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string()) throw DataError(std::string("field '") + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

json null_or(const std::optional<std::vector<std::string>>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

LabeledResponse parse_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed record: ") + e.what());
  }
  if (!j.is_object()) throw DataError("record is not an object");

  LabeledResponse r;
  r.id = get_string(j, "id");
  try {
    r.query = get_string(j, "query");
    r.response = get_string(j, "response");
    const auto split = parse_split(get_string(j, "split"));
    if (!split) throw DataError("bad split value");
    r.split = *split;

    auto label = j.find("label");
    if (label == j.end() || !label->is_number_integer() ||
        (label->get<int>() != 0 && label->get<int>() != 1))
      throw DataError("label must be 0 or 1");
    r.has_ad = label->get<int>() == 1;

    json meta = j.value("meta", json::object());
    if (!meta.is_object()) throw DataError("meta must be an object");
    r.meta.source_engine = get_opt_string(meta, "service").value_or("");
    const auto llm = get_opt_string(meta, "llm");
    const auto style = get_opt_string(meta, "style");
    const auto llm_set = get_opt_string(meta, "llm_set");
    if (llm_set) {
      auto s = parse_llm_set(*llm_set);
      if (!s) throw DataError("bad meta.llm_set value");
      r.meta.llm_set = *s;
    } else {
      r.meta.llm_set = r.has_ad ? LlmSet::old_llms : LlmSet::none;
    }

    auto ad = j.find("ad");
    if (ad != j.end() && !ad->is_null()) {
      if (!ad->is_object()) throw DataError("ad must be an object or null");
      AdAnnotation a;
      a.item = get_string(*ad, "item");
      a.advertiser = get_string(*ad, "advertiser");
      a.qualities = get_opt_string_list(*ad, "qualities").value_or(std::vector<std::string>{});
      a.generator_llm = llm.value_or("");
      a.style_id = style.value_or("");
      r.ad = std::move(a);
    }
    r.tokens = get_opt_string_list(j, "tokens");
    r.tags = get_opt_string_list(j, "tags");
  } catch (const DataError& e) {
    throw DataError(e.what(), r.id);
  }
  return r;
}

std::string format_record(const LabeledResponse& r) {
  ordered_json j;
  j["id"] = r.id;
  j["query"] = r.query;
  j["response"] = r.response;
  j["split"] = to_string(r.split);
  j["label"] = r.has_ad ? 1 : 0;
  ordered_json meta;
  meta["service"] = r.meta.source_engine;
  meta["llm"] = r.ad ? ordered_json(r.ad->generator_llm) : ordered_json(nullptr);
  meta["style"] = r.ad ? ordered_json(r.ad->style_id) : ordered_json(nullptr);
  meta["llm_set"] = to_string(r.meta.llm_set);
  j["meta"] = std::move(meta);
  if (r.ad) {
    ordered_json ad;
    ad["item"] = r.ad->item;
    ad["qualities"] = r.ad->qualities;
    ad["advertiser"] = r.ad->advertiser;
    j["ad"] = std::move(ad);
  } else {
    j["ad"] = nullptr;
  }
  j["tokens"] = null_or(r.tokens);
  j["tags"] = null_or(r.tags);
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

// ------------------------------------------------------------- loading

namespace {

template <typename ParseLine>
Dataset load_lines(const std::filesystem::path& path, const LoadOptions& options,
                   IngestStats* stats, ParseLine parse_line) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read corpus file " + path.string());

  IngestStats local;
  IngestStats& st = stats ? *stats : local;
  st = IngestStats{};

  std::vector<LabeledResponse> records;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  auto drop = [&](const std::string& reason, const std::string& detail,
                  const std::string& id) {
    if (options.strict)
      throw DataError(path.filename().string() + ":" + std::to_string(line_no) + ": " +
                          reason + (detail.empty() ? "" : " (" + detail + ")"),
                      id);
    ++st.dropped[reason];
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    ++st.lines;
    LabeledResponse r;
    try {
      r = parse_line(line);
    } catch (const DataError& e) {
      drop("malformed-line", e.what(), e.record_id());
      continue;
    }
    auto reasons = validate(r, options.allow_empty_qualities);
    if (!reasons.empty()) {
      drop(reasons.front(), {}, r.id);
      continue;
    }
    if (!seen.insert(r.id).second) {
      drop("duplicate-id", {}, r.id);
      continue;
    }
    records.push_back(std::move(r));
  }
  st.loaded = records.size();
  return Dataset(path.stem().string(), std::move(records));
}

}  // namespace

Dataset load_corpus(const std::filesystem::path& path, const LoadOptions& options,
                    IngestStats* stats) {
  return load_lines(path, options, stats,
                    [](const std::string& line) { return parse_record(line); });
}

Dataset load_corpus(const std::filesystem::path& path, bool strict) {
  return load_corpus(path, LoadOptions{.strict = strict});
}

void write_corpus(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  for (const auto& r : dataset.records()) out << format_record(r) << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

// --------------------------------------------------------- WGNA adapter

namespace {

const json* first_of(const json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    auto it = j.find(k);
    if (it != j.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

std::string as_text(const json* v) {
  if (!v) return {};
  if (v->is_string()) return v->get<std::string>();
  if (v->is_number_integer()) return std::to_string(v->get<long long>());
  return v->dump();
}

std::vector<std::string> as_list(const json* v) {
  std::vector<std::string> out;
  if (!v) return out;
  if (v->is_array()) {
    for (const auto& e : *v) out.push_back(as_text(&e));
    return out;
  }
  // a single string holding a delimited list
  const std::string s = as_text(v);
  std::stringstream ss(s);
  std::string part;
  const char delim = s.find(';') != std::string::npos ? ';' : ',';
  while (std::getline(ss, part, delim)) {
    const auto b = part.find_first_not_of(" \t");
    const auto e = part.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(part.substr(b, e - b + 1));
  }
  return out;
}

LabeledResponse parse_wgna(const std::string& line, std::optional<Split> split_override) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed record: ") + e.what());
  }
  if (!j.is_object()) throw DataError("record is not an object");

  LabeledResponse r;
  r.id = as_text(first_of(j, {"id", "response_id", "uuid"}));
  if (r.id.empty()) throw DataError("record without id");
  try {
    r.query = as_text(first_of(j, {"query", "meta_topic", "question"}));
    r.response = as_text(first_of(j, {"response", "text", "answer"}));

    if (split_override) {
      r.split = *split_override;
    } else {
      auto s = parse_split(as_text(first_of(j, {"split", "partition"})));
      if (!s) throw DataError("record without split and no split override given");
      r.split = *s;
    }

    const json* label = first_of(j, {"label", "has_ad", "contains_ad", "ad"});
    if (!label) throw DataError("record without label");
    if (label->is_boolean()) r.has_ad = label->get<bool>();
    else if (label->is_number_integer()) r.has_ad = label->get<int>() != 0;
    else if (label->is_object()) r.has_ad = true;
    else throw DataError("unrecognized label value");

    r.meta.source_engine = as_text(first_of(j, {"service", "source", "search_engine", "engine"}));
    if (r.has_ad) {
      // ad fields either nested under "ad"/"advertisement" or flat
      const json* nested = first_of(j, {"ad", "advertisement"});
      const json& src = nested && nested->is_object() ? *nested : j;
      AdAnnotation a;
      a.item = as_text(first_of(src, {"item", "product"}));
      a.advertiser = as_text(first_of(src, {"advertiser", "brand", "url"}));
      a.qualities = as_list(first_of(src, {"qualities", "claims", "features"}));
      a.generator_llm = as_text(first_of(j, {"llm", "model", "generator"}));
      a.style_id = as_text(first_of(j, {"style", "prompt", "prompt_id"}));
      r.ad = std::move(a);
      auto set = first_of(j, {"llm_set"});
      r.meta.llm_set = set ? parse_llm_set(as_text(set)).value_or(LlmSet::old_llms)
                           : LlmSet::old_llms;
    }

    if (const json* toks = first_of(j, {"tokens", "words"})) r.tokens = as_list(toks);
    if (const json* tags = first_of(j, {"tags", "ner_tags", "bio_tags", "labels"})) {
      std::vector<std::string> out;
      for (const auto& t : *tags) {
        if (t.is_number_integer()) {
          const auto idx = t.get<int>();
          if (idx < 0 || idx >= static_cast<int>(tagger::kNumLabels))
            throw DataError("tag index out of range");
          out.emplace_back(tagger::to_string(static_cast<tagger::BioLabel>(idx)));
        } else {
          out.push_back(as_text(&t));
        }
      }
      r.tags = std::move(out);
    }
    // negatives released without tags get an all-O sequence when tokens exist
    if (!r.tags && r.tokens && !r.has_ad)
      r.tags = std::vector<std::string>(r.tokens->size(), "O");
  } catch (const DataError& e) {
    throw DataError(e.what(), r.id);
  } catch (const json::exception& e) {
    throw DataError(e.what(), r.id);
  }
  return r;
}

}  // namespace

Dataset import_wgna(const std::filesystem::path& path, const LoadOptions& options,
                    std::optional<Split> split_override, IngestStats* stats) {
  return load_lines(path, options, stats, [&](const std::string& line) {
    return parse_wgna(line, split_override);
  });
}

// -------------------------------------------------------------- variants

Dataset build_variant_testset(const Dataset& reference,
                              const std::vector<LabeledResponse>& new_positives,
                              std::string name) {
  std::unordered_map<std::string, const LabeledResponse*> by_id;
  by_id.reserve(new_positives.size());
  for (const auto& p : new_positives) {
    if (!p.has_ad || !p.ad)
      throw DataError("new positive lacks an ad annotation", p.id);
    const LabeledResponse* ref = reference.find(p.id);
    if (!ref || !ref->has_ad)
      throw DataError("new positive does not replace a reference positive", p.id);
    if (!by_id.emplace(p.id, &p).second) throw DataError("duplicate new positive", p.id);
  }

  std::vector<LabeledResponse> records;
  records.reserve(reference.size());
  for (const auto& r : reference.records()) {
    if (!r.has_ad) {
      records.push_back(r);
      continue;
    }
    auto it = by_id.find(r.id);
    if (it == by_id.end()) throw DataError("no new version for reference positive", r.id);
    records.push_back(*it->second);
  }
  return Dataset(std::move(name), std::move(records));
}

std::map<Split, ClassCounts> count_by_split(const Dataset& dataset) {
  std::map<Split, ClassCounts> out;
  for (const auto& r : dataset.records()) {
    auto& c = out[r.split];
    ++c.total;
    if (r.has_ad) ++c.positive;
  }
  return out;
}

}  // namespace adshield::corpus

#include "adshield/evaluate.hpp"

#include <algorithm>
#include <unordered_map>

#include "adshield/error.hpp"

namespace adshield::evaluate {

double f1_score(double precision, double recall) {
  return precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

Metrics Metrics::from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

std::vector<Entity> extract_entities(const tagger::TagSequence& tags) {
  const auto& l = tags.labels;
  if (!tagger::is_valid_iob2(l))
    throw InvalidArgument("extract_entities: tag sequence is not valid IOB2");
  std::vector<Entity> out;
  std::size_t i = 0;
  while (i < l.size()) {
    if (!tagger::is_begin(l[i])) {
      ++i;
      continue;
    }
    const auto kind = tagger::kind_of(l[i]);
    const auto inside = tagger::inside_of(kind);
    std::size_t j = i + 1;
    while (j < l.size() && l[j] == inside) ++j;
    out.push_back({kind, i, j});
    i = j;
  }
  return out;
}

namespace {

void require_same_ids(const EntityMap& gold, const EntityMap& pred) {
  auto g = gold.begin();
  auto p = pred.begin();
  for (; g != gold.end() && p != pred.end(); ++g, ++p)
    if (g->first != p->first)
      throw DataError("gold and predicted entity sets cover different responses",
                      std::min(g->first, p->first));
  if (g != gold.end()) throw DataError("response has no predicted entity list", g->first);
  if (p != pred.end()) throw DataError("prediction for unknown response", p->first);
}

}  // namespace

Metrics entity_metrics(const EntityMap& gold, const EntityMap& pred) {
  require_same_ids(gold, pred);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& [id, g] : gold) {
    std::set<Entity> gs(g.begin(), g.end());
    const auto& pv = pred.at(id);
    std::set<Entity> ps(pv.begin(), pv.end());
    std::size_t hit = 0;
    for (const auto& e : ps) hit += gs.count(e);
    tp += hit;
    fp += ps.size() - hit;
    fn += gs.size() - hit;
  }
  return Metrics::from_counts(tp, fp, fn);
}

Metrics response_metrics(const std::vector<classify::PredictionRecord>& preds,
                         const corpus::Dataset& gold) {
  std::unordered_map<std::string, bool> decision;
  decision.reserve(preds.size());
  for (const auto& p : preds) {
    if (!gold.find(p.response_id)) throw DataError("prediction for unknown response", p.response_id);
    if (!decision.emplace(p.response_id, p.decision).second)
      throw DataError("duplicate prediction", p.response_id);
  }
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& r : gold.records()) {
    auto it = decision.find(r.id);
    if (it == decision.end()) throw DataError("missing prediction", r.id);
    if (it->second) (r.has_ad ? tp : fp)++;
    else (r.has_ad ? fn : tn)++;
  }
  return Metrics::from_counts(tp, fp, fn, tn);
}

namespace {

std::unordered_map<std::string, bool> decisions_by_id(
    const std::vector<classify::PredictionRecord>& preds) {
  std::unordered_map<std::string, bool> out;
  out.reserve(preds.size());
  for (const auto& p : preds)
    if (!out.emplace(p.response_id, p.decision).second)
      throw DataError("duplicate prediction", p.response_id);
  return out;
}

}  // namespace

ContingencyTable build_contingency(const std::vector<classify::PredictionRecord>& preds_ref,
                                   const std::vector<classify::PredictionRecord>& preds_new,
                                   const std::set<std::string>& gold_positive_ids) {
  const auto ref = decisions_by_id(preds_ref);
  const auto fresh = decisions_by_id(preds_new);
  ContingencyTable t;
  for (const auto& id : gold_positive_ids) {
    auto r = ref.find(id);
    if (r == ref.end()) throw DataError("reference predictions miss a positive", id);
    auto n = fresh.find(id);
    if (n == fresh.end()) throw DataError("variant predictions miss a positive", id);
    (r->second ? t.tp_ref : t.fn_ref)++;
    (n->second ? t.tp_new : t.fn_new)++;
  }
  return t;
}

ContingencyTable contingency_from_outcomes(const std::map<std::string, bool>& ref,
                                           const std::map<std::string, bool>& fresh) {
  ContingencyTable t;
  for (const auto& [_, ok] : ref) (ok ? t.tp_ref : t.fn_ref)++;
  for (const auto& [_, ok] : fresh) (ok ? t.tp_new : t.fn_new)++;
  return t;
}

std::map<std::string, bool> all_entities_detected(const EntityMap& gold, const EntityMap& pred) {
  require_same_ids(gold, pred);
  std::map<std::string, bool> out;
  for (const auto& [id, g] : gold) {
    const auto& pv = pred.at(id);
    std::set<Entity> ps(pv.begin(), pv.end());
    out[id] = std::all_of(g.begin(), g.end(), [&](const Entity& e) { return ps.contains(e); });
  }
  return out;
}

EntityMap gold_entities(const corpus::Dataset& dataset) {
  EntityMap out;
  for (const auto& r : dataset.records()) {
    if (!r.tags) continue;
    auto seq = tagger::repair_bio({tagger::parse_labels(*r.tags), false});
    out[r.id] = extract_entities(seq);
  }
  return out;
}

EntityMap predicted_entities(const std::vector<classify::PredictionRecord>& preds) {
  EntityMap out;
  for (const auto& p : preds) {
    if (!p.tags) continue;
    std::vector<tagger::BioLabel> labels;
    try {
      labels = tagger::parse_labels(*p.tags);
    } catch (const DataError& e) {
      throw DataError(e.what(), p.response_id);
    }
    if (!out.emplace(p.response_id, extract_entities(tagger::repair_bio({labels, false}))).second)
      throw DataError("duplicate prediction", p.response_id);
  }
  return out;
}

std::set<std::string> false_negative_ids(const std::vector<classify::PredictionRecord>& preds,
                                         const corpus::Dataset& gold) {
  const auto d = decisions_by_id(preds);
  std::set<std::string> out;
  for (const auto& r : gold.records()) {
    if (!r.has_ad) continue;
    auto it = d.find(r.id);
    if (it == d.end()) throw DataError("missing prediction", r.id);
    if (!it->second) out.insert(r.id);
  }
  return out;
}

}  // namespace adshield::evaluate

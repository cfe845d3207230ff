#include <doctest.h>

#include <map>

#include "adshield/error.hpp"
#include "adshield/evaluate.hpp"
#include "support.hpp"

using namespace adshield;
using tagger::BioLabel;
using tagger::EntityKind;
using evaluate::Entity;

namespace {

corpus::Dataset labeled(const std::vector<std::pair<std::string, bool>>& rows) {
  std::vector<corpus::LabeledResponse> recs;
  for (const auto& [id, y] : rows) {
    corpus::LabeledResponse r;
    r.id = id;
    r.query = "q";
    r.response = "some text";
    r.has_ad = y;
    if (y) r.ad = corpus::AdAnnotation{"item", {"cheap"}, "maker", "", ""};
    recs.push_back(r);
  }
  return corpus::Dataset("gold", recs);
}

std::vector<classify::PredictionRecord> decisions(const std::vector<std::pair<std::string, bool>>& rows) {
  std::vector<classify::PredictionRecord> out;
  for (const auto& [id, d] : rows) out.push_back({id, d ? 1.0 : 0.0, d, std::nullopt});
  return out;
}

}  // namespace

TEST_CASE("label strings round-trip") {
  for (std::size_t k = 0; k < tagger::kNumLabels; ++k) {
    const auto l = static_cast<BioLabel>(k);
    CHECK(tagger::parse_label(tagger::to_string(l)) == l);
  }
  CHECK_FALSE(tagger::parse_label("B-PER").has_value());
  CHECK_THROWS_AS(tagger::parse_labels({"O", "X"}), DataError);
}

TEST_CASE("repair_bio examples") {
  using L = BioLabel;
  auto rep = [](std::vector<L> v) { return tagger::repair_bio({v, false}).labels; };
  CHECK(rep({L::O, L::I_ITEM, L::I_ITEM}) == std::vector<L>{L::O, L::B_ITEM, L::I_ITEM});
  CHECK(rep({L::B_AD, L::I_ITEM}) == std::vector<L>{L::B_AD, L::B_ITEM});
  const std::vector<L> ok = {L::B_AD, L::I_AD, L::O, L::B_ADVERTISER};
  CHECK(rep(ok) == ok);
  CHECK(tagger::repair_bio({ok, false}).repaired);
  CHECK(rep({}).empty());
}

TEST_CASE("repair_bio output is valid, idempotent and only rewrites stray I- labels") {
  testsupport::Rng rng(21);
  for (int t = 0; t < 2000; ++t) {
    const auto raw = testsupport::random_labels(rng, 30);
    const auto once = tagger::repair_bio({raw, false});
    REQUIRE(tagger::is_valid_iob2(once.labels));
    REQUIRE(tagger::repair_bio(once) == once);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == once.labels[i]) continue;
      REQUIRE(tagger::is_inside(raw[i]));
      REQUIRE(once.labels[i] == tagger::begin_of(tagger::kind_of(raw[i])));
    }
  }
}

TEST_CASE("response_has_ad") {
  CHECK_FALSE(tagger::response_has_ad({{BioLabel::O, BioLabel::O}, true}));
  CHECK(tagger::response_has_ad({{BioLabel::O, BioLabel::B_ITEM}, true}));
  CHECK_FALSE(tagger::response_has_ad({}));
}

TEST_CASE("extract_entities examples") {
  using L = BioLabel;
  const auto e = evaluate::extract_entities({{L::B_ITEM, L::I_ITEM, L::O, L::B_AD}, true});
  REQUIRE(e.size() == 2);
  CHECK(e[0] == Entity{EntityKind::item, 0, 2});
  CHECK(e[1] == Entity{EntityKind::ad, 3, 4});
  CHECK(evaluate::extract_entities({{L::O, L::O}, true}).empty());
  CHECK(evaluate::extract_entities({{L::B_AD, L::B_AD}, true}).size() == 2);
  CHECK_THROWS_AS(evaluate::extract_entities({{L::O, L::I_AD}, false}), InvalidArgument);
}

TEST_CASE("extract_entities matches run enumeration and never overlaps") {
  testsupport::Rng rng(8);
  for (int t = 0; t < 1000; ++t) {
    const auto seq = tagger::repair_bio({testsupport::random_labels(rng, 30), false});
    const auto got = evaluate::extract_entities(seq);
    REQUIRE(got == testsupport::enumerate_runs(seq.labels));
    for (std::size_t i = 1; i < got.size(); ++i) REQUIRE(got[i - 1].token_end <= got[i].token_start);
  }
}

TEST_CASE("entity_metrics") {
  const evaluate::EntityMap gold = {{"a", {{EntityKind::item, 0, 2}, {EntityKind::ad, 3, 5}}},
                                    {"b", {}}};
  auto m = evaluate::entity_metrics(gold, gold);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);

  auto shifted = gold;
  shifted["a"][0] = {EntityKind::item, 1, 2};
  m = evaluate::entity_metrics(gold, shifted);
  CHECK(m.tp == 1);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);

  evaluate::EntityMap other = {{"a", {}}};
  CHECK_THROWS_AS(evaluate::entity_metrics(gold, other), DataError);
}

TEST_CASE("entity_metrics matches a set-intersection oracle under random perturbation") {
  testsupport::Rng rng(99);
  for (int round = 0; round < 20; ++round) {
    evaluate::EntityMap gold, pred;
    std::set<std::tuple<std::string, int, std::size_t, std::size_t>> gs, ps;
    for (int r = 0; r < 200; ++r) {
      const std::string id = "r" + std::to_string(r);
      const auto g = testsupport::random_valid_labels(rng, 30);
      auto p = g;
      for (auto& l : p)
        if (rng.below(12) == 0) l = testsupport::random_label(rng);
      gold[id] = evaluate::extract_entities({g, true});
      pred[id] = evaluate::extract_entities(tagger::repair_bio({p, false}));
      for (const auto& e : gold[id]) gs.emplace(id, static_cast<int>(e.kind), e.token_start, e.token_end);
      for (const auto& e : pred[id]) ps.emplace(id, static_cast<int>(e.kind), e.token_start, e.token_end);
    }
    std::size_t inter = 0;
    for (const auto& x : ps) inter += gs.count(x);
    const auto m = evaluate::entity_metrics(gold, pred);
    REQUIRE(m.tp == inter);
    REQUIRE(m.fp == ps.size() - inter);
    REQUIRE(m.fn == gs.size() - inter);
    REQUIRE(m.tp + m.fn == gs.size());

    const auto all = evaluate::all_entities_detected(gold, pred);
    for (const auto& [id, ok] : all) {
      bool subset = true;
      for (const auto& e : gold[id])
        subset = subset && ps.count({id, static_cast<int>(e.kind), e.token_start, e.token_end});
      REQUIRE(ok == subset);
    }
  }
}

TEST_CASE("all_entities_detected ignores extra predictions") {
  evaluate::EntityMap gold = {{"a", {{EntityKind::item, 0, 1}}}, {"b", {{EntityKind::ad, 2, 4}}}};
  auto pred = gold;
  pred["a"].push_back({EntityKind::advertiser, 5, 6});
  auto r = evaluate::all_entities_detected(gold, pred);
  CHECK(r["a"]);
  CHECK(r["b"]);
  pred["b"].clear();
  r = evaluate::all_entities_detected(gold, pred);
  CHECK(r["a"]);
  CHECK_FALSE(r["b"]);
}

TEST_CASE("response metrics") {
  const auto gold = labeled({{"1", true}, {"2", true}, {"3", false}, {"4", false}});
  auto m = evaluate::response_metrics(decisions({{"1", true}, {"2", true}, {"3", false}, {"4", false}}), gold);
  CHECK(m.f1 == 1.0);
  CHECK(m.tn == 2);
  m = evaluate::response_metrics(decisions({{"1", false}, {"2", false}, {"3", false}, {"4", false}}), gold);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
  m = evaluate::response_metrics(decisions({{"1", true}, {"2", false}, {"3", true}, {"4", false}}), gold);
  CHECK(m.precision == 0.5);
  CHECK(m.recall == 0.5);

  try {
    evaluate::response_metrics(decisions({{"1", true}, {"2", true}, {"3", false}}), gold);
    FAIL("missing prediction accepted");
  } catch (const DataError& e) {
    CHECK(e.record_id() == "4");
  }
  CHECK_THROWS_AS(evaluate::response_metrics(
                      decisions({{"1", true}, {"1", true}, {"2", true}, {"3", false}, {"4", false}}), gold),
                  DataError);
  CHECK_THROWS_AS(evaluate::response_metrics(
                      decisions({{"1", true}, {"2", true}, {"3", false}, {"4", false}, {"9", false}}), gold),
                  DataError);
  CHECK(evaluate::f1_score(0.883, 0.914) == doctest::Approx(0.898).epsilon(0.0005 / 0.898));
  CHECK(evaluate::f1_score(0.0, 0.0) == 0.0);
}

TEST_CASE("contingency counts equal a filter-and-count oracle") {
  testsupport::Rng rng(4);
  for (int t = 0; t < 500; ++t) {
    std::vector<classify::PredictionRecord> ref, fresh;
    std::set<std::string> pos;
    std::size_t a = 0, b = 0, c = 0, d = 0;
    const auto n = 1 + rng.below(40);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string id = "x" + std::to_string(i);
      const bool is_pos = rng.below(3) != 0;
      const bool dr = rng.below(2), dn = rng.below(2);
      ref.push_back({id, 0.0, dr, std::nullopt});
      fresh.push_back({id, 0.0, dn, std::nullopt});
      if (!is_pos) continue;
      pos.insert(id);
      dn ? ++a : ++b;
      dr ? ++c : ++d;
    }
    const auto tab = evaluate::build_contingency(ref, fresh, pos);
    REQUIRE(tab == evaluate::ContingencyTable{a, b, c, d});
    REQUIRE(tab.tp_new + tab.fn_new == tab.tp_ref + tab.fn_ref);
    const auto same = evaluate::build_contingency(ref, ref, pos);
    REQUIRE(same.tp_new == same.tp_ref);
  }
  CHECK_THROWS_AS(evaluate::build_contingency({}, {}, {"missing"}), DataError);
}

TEST_CASE("contingency from per-response outcomes and false negatives") {
  const auto t = evaluate::contingency_from_outcomes({{"a", true}, {"b", false}},
                                                     {{"a", false}, {"b", false}});
  CHECK(t == evaluate::ContingencyTable{0, 2, 1, 1});
  const auto gold = labeled({{"1", true}, {"2", true}, {"3", false}});
  CHECK(evaluate::false_negative_ids(decisions({{"1", false}, {"2", true}, {"3", true}}), gold) ==
        std::set<std::string>{"1"});
}

TEST_CASE("gold and predicted entities go through repair") {
  corpus::LabeledResponse r;
  r.id = "t";
  r.query = "q";
  r.response = "Try Acme Blender";
  r.has_ad = true;
  r.ad = corpus::AdAnnotation{"Acme Blender", {"fast"}, "Acme", "", ""};
  r.tokens = std::vector<std::string>{"Try", "Acme", "Blender"};
  r.tags = std::vector<std::string>{"B-AD", "I-ITEM", "I-ITEM"};
  const auto g = evaluate::gold_entities(corpus::Dataset("d", {r}));
  REQUIRE(g.at("t").size() == 2);
  CHECK(g.at("t")[1] == Entity{EntityKind::item, 1, 3});

  classify::PredictionRecord p{"t", 1.0, true, std::vector<std::string>{"O", "I-AD", "O"}};
  const auto pe = evaluate::predicted_entities({p});
  CHECK(pe.at("t") == std::vector<Entity>{{EntityKind::ad, 1, 2}});
  p.tags = std::vector<std::string>{"O", "B-XYZ", "O"};
  CHECK_THROWS_AS(evaluate::predicted_entities({p}), DataError);
}

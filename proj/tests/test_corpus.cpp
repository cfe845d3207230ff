#include <doctest.h>

#include "adshield/corpus.hpp"
#include "adshield/error.hpp"
#include "adshield/synth.hpp"
#include "support.hpp"

using namespace adshield;
using corpus::LabeledResponse;

namespace {

LabeledResponse positive(const std::string& id) {
  LabeledResponse r;
  r.id = id;
  r.query = "best running shoes?";
  r.response = "Stretch first. Try Zoom Runner from Acme for grip.";
  r.split = corpus::Split::test;
  r.has_ad = true;
  r.ad = corpus::AdAnnotation{"Zoom Runner", {"grip", "light"}, "Acme", "gpt-4o", "old-prompt-1"};
  r.tokens = std::vector<std::string>{"Stretch", "first", ".", "Try", "Zoom", "Runner", "from", "Acme",
                                      "for", "grip", "."};
  r.tags = std::vector<std::string>{"O",      "O",      "O",    "B-AD",
                                    "B-ITEM", "I-ITEM", "B-AD", "B-ADVERTISER",
                                    "B-AD",   "I-AD",   "I-AD"};
  r.meta = {"youchat", corpus::LlmSet::old_llms};
  return r;
}

LabeledResponse negative(const std::string& id) {
  LabeledResponse r;
  r.id = id;
  r.query = "q";
  r.response = "Plain answer.";
  r.split = corpus::Split::train;
  r.meta = {"bing", corpus::LlmSet::none};
  return r;
}

}  // namespace

TEST_CASE("record validation reasons") {
  CHECK(corpus::validate(positive("p"), false).empty());
  CHECK(corpus::validate(negative("n"), false).empty());

  auto r = positive("p");
  r.tags->pop_back();
  CHECK(corpus::validate(r, false) == std::vector<std::string>{"tag-token-length-mismatch"});
  r = positive("p");
  r.ad.reset();
  CHECK(corpus::validate(r, false).front() == "ad-annotation-mismatch");
  r = positive("p");
  r.ad->qualities.clear();
  CHECK(corpus::validate(r, false) == std::vector<std::string>{"empty-qualities"});
  CHECK(corpus::validate(r, true).empty());
  r = positive("p");
  r.tags = std::vector<std::string>(r.tokens->size(), "O");
  CHECK(corpus::validate(r, false) == std::vector<std::string>{"positive-without-ad-tags"});
  auto n = negative("n");
  n.tokens = std::vector<std::string>{"Plain", "answer", "."};
  n.tags = std::vector<std::string>{"O", "B-AD", "O"};
  CHECK(corpus::validate(n, false) == std::vector<std::string>{"negative-with-ad-tags"});
  n.tags = std::vector<std::string>{"O", "B-FOO", "O"};
  CHECK(corpus::validate(n, false) == std::vector<std::string>{"unknown-tag"});
  n = negative("n");
  n.meta.llm_set = corpus::LlmSet::new_llms;
  CHECK(corpus::validate(n, false) == std::vector<std::string>{"llm-set-mismatch"});
}

TEST_CASE("records round-trip through the corpus format") {
  const auto p = positive("p1");
  CHECK(corpus::parse_record(corpus::format_record(p)) == p);
  const auto n = negative("n1");
  CHECK(corpus::parse_record(corpus::format_record(n)) == n);

  // meta.llm_set may be omitted; it follows the label
  const auto minimal = corpus::parse_record(
      R"({"id":"m","query":"q","response":"r","split":"validation","label":0,"ad":null})");
  CHECK(minimal.meta.llm_set == corpus::LlmSet::none);
  CHECK(minimal.split == corpus::Split::validation);
  CHECK_FALSE(minimal.tokens.has_value());

  CHECK_THROWS_AS(corpus::parse_record("{not json"), DataError);
  CHECK_THROWS_AS(corpus::parse_record(R"({"id":"x","query":"q","response":"r","split":"dev","label":0})"),
                  DataError);
  try {
    corpus::parse_record(R"({"id":"x7","query":"q","response":"r","split":"test","label":2})");
    FAIL("bad label accepted");
  } catch (const DataError& e) {
    CHECK(e.record_id() == "x7");
  }
}

TEST_CASE("load and write corpus files") {
  testsupport::TempDir dir;
  testsupport::write_file(dir / "empty.jsonl", "");
  CHECK(corpus::load_corpus(dir / "empty.jsonl", true).empty());
  CHECK_THROWS_AS(corpus::load_corpus(dir / "absent.jsonl", true), DataError);

  corpus::Dataset d("set", {positive("a"), negative("b"), positive("c")});
  corpus::write_corpus(d, dir / "set.jsonl");
  const auto back = corpus::load_corpus(dir / "set.jsonl", true);
  CHECK(back == d);
  CHECK(back.find("c")->ad->item == "Zoom Runner");
  CHECK(back.count_positive() == 2);
  CHECK(back.subset(corpus::Split::train).size() == 1);
  CHECK(corpus::load_corpus(dir / "set.jsonl", true) == back);
}

TEST_CASE("strict and lenient ingestion") {
  testsupport::TempDir dir;
  auto bad = positive("bad");
  bad.tags->pop_back();
  testsupport::write_file(dir / "one.jsonl", corpus::format_record(bad) + "\n");
  corpus::IngestStats st;
  const auto lenient = corpus::load_corpus(dir / "one.jsonl", {.strict = false}, &st);
  CHECK(lenient.empty());
  CHECK(st.total_dropped() == 1);
  CHECK(st.dropped.at("tag-token-length-mismatch") == 1);
  try {
    corpus::load_corpus(dir / "one.jsonl", true);
    FAIL("strict load accepted a bad record");
  } catch (const DataError& e) {
    CHECK(e.record_id() == "bad");
    CHECK(std::string(e.what()).find("one.jsonl:1") != std::string::npos);
  }

  const std::string lines = corpus::format_record(negative("x")) + "\n" + "garbage\n" +
                            corpus::format_record(negative("x")) + "\n\n" +
                            corpus::format_record(positive("y")) + "\n";
  testsupport::write_file(dir / "mixed.jsonl", lines);
  const auto mixed = corpus::load_corpus(dir / "mixed.jsonl", {.strict = false}, &st);
  CHECK(mixed.size() == 2);
  CHECK(st.lines == 4);
  CHECK(st.dropped.at("malformed-line") == 1);
  CHECK(st.dropped.at("duplicate-id") == 1);
  CHECK_THROWS_AS(corpus::Dataset("dup", {negative("z"), negative("z")}), DataError);
}

TEST_CASE("WGNA-style import with field aliases") {
  testsupport::TempDir dir;
  const std::string content =
      R"({"response_id":"w1","meta_topic":"shoes","text":"Try Zoom now.","has_ad":true,)"
      R"("advertisement":{"product":"Zoom","brand":"Acme","claims":"grip; light"},"model":"gpt-4",)"
      R"("words":["Try","Zoom","now","."],"ner_tags":[1,3,2,2]})"
      "\n"
      R"({"uuid":"w2","question":"q","answer":"Fine.","label":0,"words":["Fine","."]})"
      "\n";
  testsupport::write_file(dir / "wgna.jsonl", content);
  corpus::IngestStats st;
  const auto d = corpus::import_wgna(dir / "wgna.jsonl", {}, corpus::Split::test, &st);
  REQUIRE(d.size() == 2);
  const auto* p = d.find("w1");
  CHECK(p->has_ad);
  CHECK(p->ad->item == "Zoom");
  CHECK(p->ad->advertiser == "Acme");
  CHECK(p->ad->qualities == std::vector<std::string>{"grip", "light"});
  CHECK(p->ad->generator_llm == "gpt-4");
  CHECK(*p->tags == std::vector<std::string>{"B-AD", "B-ITEM", "I-AD", "I-AD"});
  const auto* n = d.find("w2");
  CHECK(*n->tags == std::vector<std::string>{"O", "O"});
  CHECK(n->meta.llm_set == corpus::LlmSet::none);

  testsupport::write_file(dir / "nosplit.jsonl", R"({"id":"a","query":"q","response":"r","label":0})" "\n");
  CHECK_THROWS_AS(corpus::import_wgna(dir / "nosplit.jsonl", {}), DataError);
}

TEST_CASE("variant test sets keep negatives and replace positives") {
  const corpus::Dataset ref("ref", {negative("n1"), positive("p1"), negative("n2"), positive("p2")});
  std::vector<LabeledResponse> own = {positive("p2"), positive("p1")};
  CHECK(corpus::build_variant_testset(ref, own, "ref") == ref);

  auto a = positive("p1"), b = positive("p2");
  a.response = "Changed one.";
  b.response = "Changed two.";
  a.tokens.reset();
  a.tags.reset();
  const auto v = corpus::build_variant_testset(ref, {b, a}, "v");
  REQUIRE(v.size() == ref.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(v.records()[i].id == ref.records()[i].id);
    if (!ref.records()[i].has_ad) CHECK(corpus::format_record(v.records()[i]) == corpus::format_record(ref.records()[i]));
  }
  CHECK(v.find("p1")->response == "Changed one.");
  CHECK(v.count_positive() == ref.count_positive());

  CHECK_THROWS_AS(corpus::build_variant_testset(ref, {a}, "v"), DataError);
  CHECK_THROWS_AS(corpus::build_variant_testset(ref, {a, b, positive("n1")}, "v"), DataError);
  CHECK_THROWS_AS(corpus::build_variant_testset(ref, {a, a, b}, "v"), DataError);
  auto no_ad = b;
  no_ad.ad.reset();
  CHECK_THROWS_AS(corpus::build_variant_testset(ref, {a, no_ad}, "v"), DataError);
}

TEST_CASE("synthetic corpora satisfy the record invariants") {
  synth::SynthConfig cfg;
  cfg.n_records = 300;
  const auto d = synth::generate_corpus(cfg);
  CHECK(d.size() == 300);
  for (const auto& r : d.records()) REQUIRE(corpus::validate(r, false).empty());
  CHECK(synth::generate_corpus(cfg) == d);
  cfg.seed = 8;
  CHECK_FALSE(synth::generate_corpus(cfg) == d);
  const auto counts = corpus::count_by_split(d);
  CHECK(counts.at(corpus::Split::validation).total == 45);
  CHECK(counts.at(corpus::Split::test).total == 60);
}

TEST_CASE("bundled fixture loads with its declared counts") {
  const std::filesystem::path dir = std::filesystem::path(ADSHIELD_SOURCE_DIR) / "data" / "fixtures";
  const auto d = corpus::load_corpus(dir / "synthetic_fixture.jsonl", true);
  CHECK(d.size() == 200);
  const auto declared = testsupport::read_file(dir / "synthetic_fixture.counts.json");
  for (const auto& [split, c] : corpus::count_by_split(d)) {
    const std::string key = "\"" + std::string(corpus::to_string(split)) + "\"";
    CHECK(declared.find(key) != std::string::npos);
  }
}

#include <doctest.h>

#include <atomic>
#include <httplib.h>
#include <json.hpp>
#include <thread>

#include "adshield/error.hpp"
#include "adshield/evasion.hpp"
#include "adshield/http_client.hpp"
#include "adshield/synth.hpp"
#include "support.hpp"

using namespace adshield;
using namespace adshield::evasion;

namespace {

GenerationRequest request() {
  return {"r1", "best shoes?", "Stretch first.", "Zoom Runner", {"grip", "light"}, "Acme",
          "overt-rational", "gpt-4o"};
}

PromptPack pack_with(std::string id, std::string body) {
  PromptPack p;
  p.add(parse_template(std::move(id), body));
  return p;
}

corpus::Dataset small_reference(std::size_t positives) {
  synth::SynthConfig cfg;
  cfg.n_records = 40;
  cfg.positive_rate = 0.5;
  const auto d = synth::generate_corpus(cfg);
  std::vector<corpus::LabeledResponse> keep;
  std::size_t pos = 0;
  for (const auto& r : d.records()) {
    if (r.has_ad && pos == positives) continue;
    if (r.has_ad) ++pos;
    keep.push_back(r);
  }
  REQUIRE(pos == positives);
  return corpus::Dataset("ref", keep);
}

class FlakyClient final : public LlmClient {
 public:
  explicit FlakyClient(int failures) : remaining_(failures) {}
  std::string send(const LlmRequest& request) override {
    ++calls;
    if (remaining_-- > 0) throw TransientLlmError("busy");
    return "Fresh text about " + request.source->item + ".";
  }
  std::atomic<int> calls{0};

 private:
  std::atomic<int> remaining_;
};

RetryPolicy fast_retry(int attempts) {
  return {attempts, std::chrono::milliseconds(1), std::chrono::milliseconds(2)};
}

}  // namespace

TEST_CASE("style identifiers") {
  CHECK(all_styles().size() == 4);
  for (auto s : all_styles()) CHECK(parse_style(style_id(s)) == s);
  CHECK(style_id({Explicitness::covert, Appeal::rational}) == "covert-rational");
  CHECK_FALSE(parse_style("old-prompt-1").has_value());
}

TEST_CASE("templates parse metadata and render in one pass") {
  const auto t = parse_template("overt-rational", "# version: 3\n# note: x\nQ={query} I={item}\n");
  CHECK(t.version == 3);
  CHECK(t.style == AdStyle{Explicitness::overt, Appeal::rational});
  CHECK(t.body.find("# version") == std::string::npos);

  auto req = request();
  req.query = "what about {item}?";
  const auto out = render_prompt(req, pack_with("overt-rational", "Q={query} I={item} A={advertiser} V={qualities}"));
  CHECK(out.rendered == "Q=what about {item}? I=Zoom Runner A=Acme V=grip, light");
  CHECK(out.template_version == 1);
  CHECK(out.style.has_value());

  const auto literal = render_prompt(request(), pack_with("overt-rational", "json {\"a\": 1} {Item}"));
  CHECK(literal.rendered == "json {\"a\": 1} {Item}");
}

TEST_CASE("rendering rejects incomplete requests") {
  const auto pack = pack_with("overt-rational", "{item} {qualities}");
  auto req = request();
  req.style_id = "covert-emotional";
  CHECK_THROWS_AS(render_prompt(req, pack), InvalidArgument);
  req = request();
  req.item.clear();
  CHECK_THROWS_AS(render_prompt(req, pack), InvalidArgument);
  req = request();
  req.qualities.clear();
  CHECK_THROWS_AS(render_prompt(req, pack), InvalidArgument);
  CHECK_NOTHROW(render_prompt(req, pack_with("overt-rational", "# allow-empty-qualities: true\n{item}")));
  CHECK_THROWS_AS(render_prompt(request(), pack_with("overt-rational", "{budget}")), InvalidArgument);
}

TEST_CASE("bundled template pack") {
  const auto pack = load_prompt_pack(std::filesystem::path(ADSHIELD_SOURCE_DIR) / "data" / "templates");
  for (auto s : all_styles()) REQUIRE(pack.find(style_id(s)) != nullptr);
  REQUIRE(pack.find("old-prompt-1") != nullptr);
  for (const auto& id : pack.ids()) {
    auto req = request();
    req.style_id = id;
    const auto out = render_prompt(req, pack);
    CHECK(out.rendered.find("Zoom Runner") != std::string::npos);
    CHECK(out.rendered.find('{') == std::string::npos);
  }
}

TEST_CASE("ad-free text drops tagged sentences") {
  synth::SynthConfig cfg;
  cfg.n_records = 60;
  const auto d = synth::generate_corpus(cfg);
  for (const auto& r : d.records()) {
    const auto text = ad_free_text(r);
    if (!r.has_ad) {
      CHECK(text == r.response);
      continue;
    }
    CHECK(text.find(r.ad->advertiser) == std::string::npos);
    CHECK(text.size() < r.response.size());
  }
  corpus::LabeledResponse r;
  r.response = "A b. Buy X now. C d.";
  r.tokens = std::vector<std::string>{"A", "b", ".", "Buy", "X", "now", ".", "C", "d", "."};
  r.tags = std::vector<std::string>{"O", "O", "O", "B-AD", "B-ITEM", "B-AD", "I-AD", "O", "O", "O"};
  CHECK(ad_free_text(r) == "A b. C d.");
  r.response = "A  b .Buy X now. C d.";
  r.tokens = std::vector<std::string>{"A", "b.", "Buy", "X", "now", ".", "C", "d", "."};
  r.tags = std::vector<std::string>{"O", "O", "B-AD", "B-ITEM", "B-AD", "I-AD", "O", "O", "O"};
  CHECK(ad_free_text(r).find("Buy") == std::string::npos);
}

TEST_CASE("echo mock regenerates every positive and keeps negatives") {
  const auto ref = small_reference(10);
  const auto pack = load_prompt_pack(std::filesystem::path(ADSHIELD_SOURCE_DIR) / "data" / "templates");
  EchoMockClient client;
  RequestLog log;
  GenerationOptions opt;
  opt.log = &log;
  const auto specs = cross({"overt-emotional", "covert-rational"}, {"m1", "m2"});
  const auto results = generate_variants(ref, specs, pack, client, opt);
  REQUIRE(results.size() == 4);
  CHECK(log.entries() == 40);
  for (const auto& v : results) {
    REQUIRE(v.complete());
    CHECK(v.dataset->name() == v.name);
    REQUIRE(v.dataset->size() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const auto& a = ref.records()[i];
      const auto& b = v.dataset->records()[i];
      CHECK(a.id == b.id);
      if (!a.has_ad) {
        CHECK(a == b);
        continue;
      }
      CHECK(b.response == ad_free_text(a) + " [AD " + a.ad->item + " by " + a.ad->advertiser + "]");
      CHECK(b.ad->generator_llm == v.spec.llm_id);
      CHECK(b.ad->style_id == v.spec.style_id);
      CHECK(b.meta.llm_set == corpus::LlmSet::new_llms);
      CHECK_FALSE(b.tags.has_value());
    }
  }
}

TEST_CASE("failures make a variant incomplete and the budget aborts") {
  const auto ref = small_reference(5);
  const auto pack = load_prompt_pack(std::filesystem::path(ADSHIELD_SOURCE_DIR) / "data" / "templates");
  FailingClient permanent(false);
  const auto res = generate_variants(ref, cross({"covert-emotional"}, {"m"}), pack, permanent);
  REQUIRE(res.size() == 1);
  CHECK_FALSE(res[0].complete());
  CHECK(res[0].failures.size() == 5);
  CHECK(res[0].failures[0].attempts == 1);

  FailingClient transient(true);
  GenerationOptions opt;
  opt.retry = fast_retry(3);
  const auto res2 = generate_variants(ref, cross({"covert-emotional"}, {"m"}), pack, transient, opt);
  CHECK(res2[0].failures.front().attempts == 3);

  opt.failure_budget = 2;
  opt.concurrency = 1;
  CHECK_THROWS_AS(generate_variants(ref, cross({"covert-emotional"}, {"m"}), pack, transient, opt),
                  GenerationError);
}

TEST_CASE("transient errors are retried") {
  const auto ref = small_reference(3);
  const auto pack = load_prompt_pack(std::filesystem::path(ADSHIELD_SOURCE_DIR) / "data" / "templates");
  testsupport::TempDir dir;
  RequestLog log(dir / "log.jsonl");
  FlakyClient client(2);
  GenerationOptions opt;
  opt.retry = fast_retry(4);
  opt.concurrency = 1;
  opt.log = &log;
  const auto res = generate_variants(ref, cross({"overt-rational"}, {"m"}), pack, client, opt);
  CHECK(res[0].complete());
  CHECK(client.calls == 5);
  std::size_t lines = 0, retries = 0;
  std::istringstream in(testsupport::read_file(dir / "log.jsonl"));
  for (std::string line; std::getline(in, line); ++lines) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("timestamp"));
    CHECK(j["llm_id"] == "m");
    if (j["status"] == "retry") ++retries;
  }
  CHECK(lines == 5);
  CHECK(retries == 2);
}

TEST_CASE("HTTP client against a local endpoint") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const int n = ++hits;
    const auto body = nlohmann::json::parse(req.body);
    if (body["model"] == "busy" && n == 1) {
      res.status = 503;
      return;
    }
    if (body["model"] == "denied") {
      res.status = 401;
      res.set_content("no key", "text/plain");
      return;
    }
    nlohmann::json reply;
    reply["choices"] = nlohmann::json::array(
        {{{"message", {{"role", "assistant"}, {"content", "echo: " + body["messages"][0]["content"].get<std::string>()}}}}});
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpLlmClient client("http://127.0.0.1:" + std::to_string(port), "k");
  LlmRequest r{"hello", "ok-model", {}, nullptr};
  CHECK(client.send(r) == "echo: hello");
  r.llm_id = "denied";
  CHECK_THROWS_AS(client.send(r), PermanentLlmError);
  hits = 0;
  r.llm_id = "busy";
  CHECK_THROWS_AS(client.send(r), TransientLlmError);
  CHECK(client.send(r) == "echo: hello");

  server.stop();
  t.join();
  HttpLlmClient down("http://127.0.0.1:" + std::to_string(port), "k", "/v1/chat/completions",
                     std::chrono::seconds(1));
  r.llm_id = "x";
  CHECK_THROWS_AS(down.send(r), TransientLlmError);
}

#include "adshield/evasion.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <ctime>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "adshield/parallel.hpp"
#include "adshield/text.hpp"

namespace adshield::evasion {

std::vector<AdStyle> all_styles() {
  return {{Explicitness::overt, Appeal::emotional},
          {Explicitness::overt, Appeal::rational},
          {Explicitness::covert, Appeal::emotional},
          {Explicitness::covert, Appeal::rational}};
}

std::string style_id(AdStyle style) {
  std::string s = style.explicitness == Explicitness::overt ? "overt" : "covert";
  s += style.appeal == Appeal::emotional ? "-emotional" : "-rational";
  return s;
}

std::optional<AdStyle> parse_style(std::string_view id) {
  for (auto s : all_styles())
    if (style_id(s) == id) return s;
  return std::nullopt;
}

// --------------------------------------------------------------- templates

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

PromptTemplate parse_template(std::string id, std::string_view file_text) {
  PromptTemplate t;
  t.id = std::move(id);
  t.style = parse_style(t.id);
  std::size_t pos = 0;
  while (pos < file_text.size() && file_text[pos] == '#') {
    auto eol = file_text.find('\n', pos);
    if (eol == std::string_view::npos) eol = file_text.size();
    const std::string line = trim(file_text.substr(pos + 1, eol - pos - 1));
    const auto colon = line.find(':');
    if (colon != std::string::npos) {
      const std::string key = trim(line.substr(0, colon));
      const std::string value = trim(line.substr(colon + 1));
      if (key == "version") t.version = std::stoi(value);
      else if (key == "allow-empty-qualities") t.allow_empty_qualities = value == "true";
      else if (key == "note") t.note = value;
    }
    pos = eol + 1;
  }
  t.body = pos < file_text.size() ? std::string(file_text.substr(pos)) : std::string();
  return t;
}

void PromptPack::add(PromptTemplate t) {
  auto id = t.id;
  templates_.insert_or_assign(std::move(id), std::move(t));
}

const PromptTemplate* PromptPack::find(std::string_view id) const {
  auto it = templates_.find(id);
  return it == templates_.end() ? nullptr : &it->second;
}

std::vector<std::string> PromptPack::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : templates_) out.push_back(id);
  return out;
}

PromptPack load_prompt_pack(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw DataError("template directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  PromptPack pack;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    pack.add(parse_template(f.stem().string(), ss.str()));
  }
  return pack;
}

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

StyledPrompt render_prompt(const GenerationRequest& request, const PromptPack& pack) {
  const PromptTemplate* t = pack.find(request.style_id);
  if (!t) throw InvalidArgument("no prompt template for style '" + request.style_id + "'");
  auto require = [&](const std::string& v, const char* field) {
    if (v.empty())
      throw InvalidArgument(std::string("generation request has an empty ") + field +
                            (request.response_id.empty() ? "" : " (record " + request.response_id + ")"));
  };
  require(request.query, "query");
  require(request.response, "response");
  require(request.item, "item");
  require(request.advertiser, "advertiser");
  if (request.qualities.empty() && !t->allow_empty_qualities)
    throw InvalidArgument("template '" + t->id + "' requires item qualities");

  const std::string qualities = join(request.qualities, ", ");
  auto value_of = [&](std::string_view name) -> const std::string* {
    if (name == "query") return &request.query;
    if (name == "response") return &request.response;
    if (name == "item") return &request.item;
    if (name == "qualities") return &qualities;
    if (name == "advertiser") return &request.advertiser;
    return nullptr;
  };

  std::string out;
  const std::string& body = t->body;
  out.reserve(body.size() + request.response.size());
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] != '{') {
      out.push_back(body[i++]);
      continue;
    }
    std::size_t j = i + 1;
    while (j < body.size() && (std::islower(static_cast<unsigned char>(body[j])) || body[j] == '_'))
      ++j;
    if (j < body.size() && body[j] == '}' && j > i + 1) {
      const std::string_view name(body.data() + i + 1, j - i - 1);
      const std::string* v = value_of(name);
      if (!v)
        throw InvalidArgument("template '" + t->id + "' has unfilled placeholder {" +
                              std::string(name) + "}");
      out += *v;
      i = j + 1;
    } else {
      out.push_back(body[i++]);
    }
  }
  return {t->style, t->id, t->version, std::move(out)};
}

GenerationParams default_params(std::string_view llm_id) {
  GenerationParams p;
  // reasoning-tuned gpt-5 models only accept their default temperature
  if (llm_id.rfind("gpt-5", 0) == 0) p.temperature = 1.0;
  return p;
}

// ------------------------------------------------------------------ mocks

std::string EchoMockClient::send(const LlmRequest& request) {
  if (!request.source) throw PermanentLlmError("echo mock needs the source request");
  const auto& s = *request.source;
  return s.response + " [AD " + s.item + " by " + s.advertiser + "]";
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fill(std::string_view pattern, const GenerationRequest& s) {
  const std::string q1 = s.qualities.empty() ? "good value" : s.qualities[0];
  const std::string q2 = s.qualities.size() > 1 ? s.qualities[1] : q1;
  std::string out;
  for (std::size_t i = 0; i < pattern.size();) {
    auto take = [&](std::string_view key, const std::string& v) {
      if (pattern.substr(i, key.size()) != key) return false;
      out += v;
      i += key.size();
      return true;
    };
    if (take("{item}", s.item) || take("{advertiser}", s.advertiser) || take("{q1}", q1) ||
        take("{q2}", q2))
      continue;
    out.push_back(pattern[i++]);
  }
  return out;
}

}  // namespace

std::string StyleMockClient::send(const LlmRequest& request) {
  if (!request.source) throw PermanentLlmError("style mock needs the source request");
  const auto& s = *request.source;
  static const std::vector<std::string_view> kOvertEmotional = {
      "You will absolutely love {item} from {advertiser} - treat yourself today and feel the amazing difference!",
      "Imagine the joy of {item} by {advertiser}: the wonderful experience you deserve, so grab it now!",
      "Fall in love with {item} from {advertiser} - an incredible, unforgettable choice that will make you smile!"};
  static const std::vector<std::string_view> kOvertRational = {
      "The best choice is {item} from {advertiser}, offering {q1} and {q2} - check it out today!",
      "{advertiser} delivers {item} with {q1} and {q2}, the smartest deal available right now!",
      "Get {item} from {advertiser} for {q1} - unbeatable value you should not miss!"};
  static const std::vector<std::string_view> kCovertEmotional = {
      "Some people say that something like {item} gave them peace of mind, although plenty of alternatives work just as well.",
      "For some, {item} quietly became part of a calmer routine, much like other similar choices.",
      "A friend once mentioned that {item} made a stressful week feel lighter, though tastes differ."};
  static const std::vector<std::string_view> kCovertRational = {
      "Alternatives such as {item} list {q1} among their features, which is worth comparing with other options.",
      "Among several comparable options, {item} is one that mentions {q1}.",
      "Comparable offerings, {item} among them, typically differ in {q1} and pricing."};
  static const std::vector<std::string_view> kOldPrompt = {
      "Try {item} from {advertiser} for {q1}.",
      "For {q1}, check out {item} by {advertiser}."};

  const auto style = parse_style(s.style_id);
  const std::vector<std::string_view>* pool = &kOldPrompt;
  if (style) {
    const bool overt = style->explicitness == Explicitness::overt;
    const bool emotional = style->appeal == Appeal::emotional;
    pool = overt ? (emotional ? &kOvertEmotional : &kOvertRational)
                 : (emotional ? &kCovertEmotional : &kCovertRational);
  }
  const auto h = fnv1a(request.llm_id, fnv1a(s.response_id.empty() ? s.response : s.response_id));
  const std::string ad = fill((*pool)[h % pool->size()], s);
  return s.response + " " + ad;
}

std::string FailingClient::send(const LlmRequest& request) {
  if (transient_) throw TransientLlmError("simulated outage for " + request.llm_id);
  throw PermanentLlmError("simulated rejection for " + request.llm_id);
}

// ---------------------------------------------------------------- logging

RequestLog::RequestLog(const std::filesystem::path& path)
    : out_(std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::app)) {
  if (!*out_) throw DataError("cannot open request log " + path.string());
}

void RequestLog::record(std::string_view llm_id, std::string_view style,
                        std::string_view response_id, std::string_view status, int attempt,
                        std::string_view detail) {
  std::lock_guard lock(mu_);
  ++entries_;
  if (!out_) return;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char ts[32];
  std::strftime(ts, sizeof ts, "%Y-%m-%dT%H:%M:%SZ", &tm);
  nlohmann::ordered_json j;
  j["timestamp"] = ts;
  j["llm_id"] = llm_id;
  j["style"] = style;
  j["response_id"] = response_id;
  j["status"] = status;
  j["attempt"] = attempt;
  if (!detail.empty()) j["detail"] = detail;
  *out_ << j.dump() << '\n';
  out_->flush();
}

std::size_t RequestLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

// --------------------------------------------------------------- batching

std::string ad_free_text(const corpus::LabeledResponse& r) {
  if (!r.tokens || !r.tags || r.tokens->size() != r.tags->size()) return r.response;
  const auto& tags = *r.tags;
  auto tagged = [&](const text::SentenceSpan& sp) {
    for (std::size_t i = sp.token_start; i < sp.token_end; ++i)
      if (tags[i] != "O") return true;
    return false;
  };
  const auto tokens = text::tokenize(r.response);
  std::string out;
  if (text::token_texts(tokens) == *r.tokens) {
    for (const auto& sp : text::split_sentences(tokens, r.response)) {
      if (sp.size() == 0 || tagged(sp)) continue;
      const auto begin = tokens[sp.token_start].char_start;
      const auto end = tokens[sp.token_end - 1].char_end;
      if (!out.empty()) out += ' ';
      out.append(r.response, begin, end - begin);
    }
    return out;
  }
  // Tokens from another tokenizer: rebuild from the kept tokens.
  for (const auto& sp : text::split_sentences(*r.tokens)) {
    if (tagged(sp)) continue;
    for (std::size_t i = sp.token_start; i < sp.token_end; ++i) {
      if (!out.empty()) out += ' ';
      out += (*r.tokens)[i];
    }
  }
  return out;
}

std::string VariantSpec::name() const { return style_id + "@" + llm_id; }

std::vector<VariantSpec> cross(const std::vector<std::string>& style_ids,
                               const std::vector<std::string>& llm_ids, corpus::LlmSet llm_set) {
  std::vector<VariantSpec> out;
  for (const auto& s : style_ids)
    for (const auto& l : llm_ids) out.push_back({s, l, llm_set});
  return out;
}

std::vector<VariantResult> generate_variants(const corpus::Dataset& reference,
                                             const std::vector<VariantSpec>& specs,
                                             const PromptPack& pack, LlmClient& client,
                                             const GenerationOptions& options) {
  std::vector<const corpus::LabeledResponse*> positives;
  for (const auto& r : reference.records())
    if (r.has_ad) {
      if (!r.ad) throw DataError("reference positive lacks an ad annotation", r.id);
      positives.push_back(&r);
    }
  if (positives.empty()) throw InvalidArgument("reference has no positives to regenerate");
  std::sort(positives.begin(), positives.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });

  const std::size_t per_spec = positives.size();
  const std::size_t total = specs.size() * per_spec;
  std::vector<std::optional<std::string>> texts(total);
  std::vector<std::optional<GenerationFailure>> failures(total);
  std::atomic<std::size_t> failed{0};
  std::atomic<bool> aborted{false};
  const int max_attempts = std::max(1, options.retry.max_attempts);

  auto log = [&](const VariantSpec& spec, const std::string& id, std::string_view status,
                 int attempt, std::string_view detail = {}) {
    if (options.log) options.log->record(spec.llm_id, spec.style_id, id, status, attempt, detail);
  };

  parallel_for(
      total,
      [&](std::size_t task) {
        if (aborted.load()) return;
        const VariantSpec& spec = specs[task / per_spec];
        const corpus::LabeledResponse& r = *positives[task % per_spec];
        GenerationRequest req{r.id,           r.query,          ad_free_text(r), r.ad->item,
                              r.ad->qualities, r.ad->advertiser, spec.style_id, spec.llm_id};
        auto fail = [&](std::string reason, int attempts) {
          log(spec, r.id, "failed", attempts, reason);
          failures[task] = GenerationFailure{r.id, std::move(reason), attempts};
          if (++failed > options.failure_budget) aborted = true;
        };

        StyledPrompt prompt;
        try {
          prompt = render_prompt(req, pack);
        } catch (const InvalidArgument& e) {
          fail(e.what(), 0);
          return;
        }
        LlmRequest call{prompt.rendered, spec.llm_id,
                        options.params.value_or(default_params(spec.llm_id)), &req};
        std::string last_error;
        for (int attempt = 1; attempt <= max_attempts; ++attempt) {
          try {
            std::string text = client.send(call);
            if (trim(text).empty()) throw TransientLlmError("empty response");
            log(spec, r.id, "ok", attempt);
            texts[task] = std::move(text);
            return;
          } catch (const PermanentLlmError& e) {
            fail(e.what(), attempt);
            return;
          } catch (const TransientLlmError& e) {
            last_error = e.what();
            if (attempt == max_attempts) break;
            log(spec, r.id, "retry", attempt, last_error);
            auto delay = options.retry.base_delay * (1LL << std::min(attempt - 1, 20));
            std::this_thread::sleep_for(
                std::min<std::chrono::milliseconds>(delay, options.retry.max_delay));
          }
        }
        fail(last_error, max_attempts);
      },
      std::max(1u, options.concurrency));

  if (aborted)
    throw GenerationError("generation aborted: " + std::to_string(failed.load()) +
                          " failed requests exceed the failure budget of " +
                          std::to_string(options.failure_budget));

  std::vector<VariantResult> results;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    VariantResult vr{specs[s], specs[s].name(), std::nullopt, {}};
    std::vector<corpus::LabeledResponse> fresh;
    for (std::size_t k = 0; k < per_spec; ++k) {
      const std::size_t task = s * per_spec + k;
      if (failures[task]) {
        vr.failures.push_back(*failures[task]);
        continue;
      }
      corpus::LabeledResponse r = *positives[k];
      r.response = std::move(*texts[task]);
      r.tokens.reset();
      r.tags.reset();
      r.ad->generator_llm = specs[s].llm_id;
      r.ad->style_id = specs[s].style_id;
      r.meta.llm_set = specs[s].llm_set;
      fresh.push_back(std::move(r));
    }
    if (vr.failures.empty())
      vr.dataset = corpus::build_variant_testset(reference, fresh, vr.name);
    results.push_back(std::move(vr));
  }
  return results;
}

}  // namespace adshield::evasion

#include "adshield/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <unordered_set>

#include "adshield/error.hpp"
#include "adshield/rng.hpp"
#include "adshield/text.hpp"

namespace adshield::synth {

namespace {

using corpus::LabeledResponse;

constexpr std::array kItemHeads = {
    "Zenith", "Nova",   "Aurora", "Vertex", "Solace", "Ember",  "Cobalt", "Lumen",
    "Atlas",  "Quartz", "Summit", "Breeze", "Falcon", "Harbor", "Orbit",  "Pioneer",
    "Cascade", "Maple", "Onyx",   "Sierra", "Tundra", "Velvet", "Willow", "Apex"};
constexpr std::array kItemNouns = {
    "Blender",  "Headphones", "Backpack", "Kettle",  "Planner",    "Yoga Mat",
    "Air Fryer", "Smartwatch", "Tent",    "Desk Lamp", "Water Bottle", "Running Shoes",
    "Notebook", "Vacuum",     "Router",   "Mattress", "Course",     "Journal",
    "Camera",   "Scooter",    "Toolkit",  "Speaker",  "Grill",      "Monitor"};
constexpr std::array kItemSuffixes = {"Pro", "Max", "Lite", "2", "Plus", "Mini"};
constexpr std::array kSyllables = {"bri", "vor", "ka",  "len", "tro", "mi",  "zan", "qua",
                                   "del", "ro",  "fen", "sa",  "tal", "ny",  "gor", "ve",
                                   "lin", "mar", "co",  "dex", "sol", "pra", "ki",  "nox"};
constexpr std::array kCompanySuffixes = {"Labs", "Co", "Inc", "Outfitters", "Goods",
                                         "Works", "Studio", "Supply", "Group", "Brands"};
constexpr std::array kQualities = {
    "long battery life",    "a quiet motor",        "fast shipping",     "a lifetime warranty",
    "durable materials",    "an intuitive design",  "great value",       "eco-friendly packaging",
    "precise controls",     "all-day comfort",      "easy cleaning",     "a compact size",
    "reliable performance", "expert support",       "a sleek finish",    "flexible pricing",
    "lightweight build",    "crisp sound",          "quick setup",       "smart features",
    "a generous trial",     "premium ingredients",  "low energy use",    "sturdy handles"};

struct Topic {
  const char* subject;
  const char* query;
  std::array<const char*, 4> factors;
  std::array<const char*, 4> actions;
};

constexpr std::array kTopics = {
    Topic{"sleep quality", "How can I sleep better at night?",
          {"room temperature", "screen time", "caffeine intake", "daily routine"},
          {"keeping a fixed bedtime", "reducing late meals", "dimming the lights", "stretching gently"}},
    Topic{"home cooking", "What are tips for cooking healthy meals at home?",
          {"fresh vegetables", "portion size", "meal planning", "cooking oil"},
          {"preparing ingredients early", "tasting as you go", "batch cooking on weekends", "using less salt"}},
    Topic{"remote work", "How do I stay productive while working from home?",
          {"a dedicated workspace", "clear boundaries", "regular breaks", "natural light"},
          {"setting daily goals", "muting notifications", "planning the week", "taking short walks"}},
    Topic{"hiking", "What should I bring on a day hike?",
          {"weather conditions", "trail length", "water supply", "sun exposure"},
          {"checking the forecast", "packing layers", "telling someone your route", "starting early"}},
    Topic{"personal finance", "How can I start saving money each month?",
          {"monthly expenses", "interest rates", "emergency funds", "recurring subscriptions"},
          {"tracking every purchase", "automating transfers", "reviewing bills", "cooking at home"}},
    Topic{"learning a language", "What is the fastest way to learn a new language?",
          {"daily practice", "listening skills", "vocabulary size", "speaking confidence"},
          {"reading short stories", "talking with native speakers", "reviewing flashcards", "watching films"}},
    Topic{"gardening", "How do I keep houseplants healthy?",
          {"soil drainage", "light levels", "watering frequency", "air humidity"},
          {"checking the soil", "rotating the pots", "trimming dead leaves", "repotting in spring"}},
    Topic{"fitness", "How should a beginner start working out?",
          {"recovery time", "training volume", "proper form", "protein intake"},
          {"warming up first", "increasing weight slowly", "resting between sets", "logging each session"}},
    Topic{"travel planning", "How do I plan an affordable trip abroad?",
          {"flight prices", "local transport", "travel insurance", "peak seasons"},
          {"booking early", "comparing routes", "packing light", "learning basic phrases"}},
    Topic{"photography", "How can I take better photos with my phone?",
          {"lighting", "composition", "lens cleanliness", "background clutter"},
          {"using the grid", "shooting at golden hour", "holding the phone steady", "editing lightly"}},
    Topic{"studying", "What are effective study techniques for exams?",
          {"sleep", "spaced repetition", "active recall", "study breaks"},
          {"testing yourself", "teaching the material", "summarizing notes", "removing distractions"}},
    Topic{"coffee brewing", "How do I make better coffee at home?",
          {"grind size", "water temperature", "bean freshness", "brew ratio"},
          {"weighing the beans", "preheating the cup", "cleaning the equipment", "adjusting brew time"}}};

constexpr std::array kOrganicShapes = {
    "When it comes to {subject}, {factor} matters more than most people expect.",
    "Many people find that {action} makes a noticeable difference.",
    "It also helps to pay attention to {factor} and {factor2}.",
    "A common mistake is ignoring {factor} for too long.",
    "Experts often recommend {action} as a simple first step.",
    "Over time, {action} tends to build a lasting habit.",
    "Keep in mind that {factor} can change from week to week.",
    "If progress stalls, try {action} for a few days and compare the results.",
    "In short, {subject} improves when {factor} is handled consistently.",
    "Small changes, such as {action}, usually add up."};

constexpr std::array kMentionShapes = {
    "Reviews of products like {item} vary a lot between sources.",
    "Some guides published by {advertiser} discuss {factor} in detail.",
    "Forums sometimes compare {item} with older alternatives."};

enum class Role { ad, item, advertiser };

struct Segment {
  std::string text;
  Role role;
};

// Ad sentence shapes: alternating literal ad text and role slots.
struct AdShape {
  std::vector<std::pair<const char*, int>> parts;  // slot: 0 text, 1 item, 2 advertiser, 3 q1, 4 q2
};

const std::vector<AdShape>& ad_shapes() {
  static const std::vector<AdShape> shapes = {
      {{{"Try ", 0}, {"", 1}, {" from ", 0}, {"", 2}, {" — ", 0}, {"", 3}, {".", 0}}},
      {{{"For ", 0}, {"", 3}, {", check out ", 0}, {"", 1}, {" by ", 0}, {"", 2}, {".", 0}}},
      {{{"", 2}, {" offers ", 0}, {"", 1}, {" with ", 0}, {"", 3}, {" and ", 0}, {"", 4},
        {".", 0}}},
      {{{"Consider ", 0}, {"", 1}, {" from ", 0}, {"", 2}, {", known for ", 0}, {"", 3},
        {".", 0}}},
      {{{"We recommend ", 0}, {"", 1}, {" by ", 0}, {"", 2}, {" for ", 0}, {"", 3}, {"!", 0}}}};
  return shapes;
}

template <typename Array>
std::string pick(Rng& rng, const Array& a) {
  return a[rng.below(a.size())];
}

std::string make_item(Rng& rng) {
  std::string s = pick(rng, kItemHeads) + " " + pick(rng, kItemNouns);
  if (rng.uniform() < 0.3) s += " " + pick(rng, kItemSuffixes);
  return s;
}

std::string make_advertiser(Rng& rng) {
  const int n = 2 + static_cast<int>(rng.below(2));
  std::string name;
  for (int i = 0; i < n; ++i) name += pick(rng, kSyllables);
  name[0] = static_cast<char>(name[0] - 'a' + 'A');
  return name + " " + pick(rng, kCompanySuffixes);
}

std::string replace_all(std::string s, std::string_view key, std::string_view value) {
  for (std::size_t pos = s.find(key); pos != std::string::npos;
       pos = s.find(key, pos + value.size()))
    s.replace(pos, key.size(), value);
  return s;
}

std::string organic_sentence(Rng& rng, const Topic& t, double mention_rate) {
  std::string s;
  if (rng.uniform() < mention_rate) {
    s = pick(rng, kMentionShapes);
    s = replace_all(s, "{item}", make_item(rng));
    s = replace_all(s, "{advertiser}", make_advertiser(rng));
  } else {
    s = pick(rng, kOrganicShapes);
  }
  const auto f1 = rng.below(t.factors.size());
  const auto f2 = (f1 + 1 + rng.below(t.factors.size() - 1)) % t.factors.size();
  s = replace_all(s, "{subject}", t.subject);
  s = replace_all(s, "{factor2}", t.factors[f2]);
  s = replace_all(s, "{factor}", t.factors[f1]);
  s = replace_all(s, "{action}", t.actions[rng.below(t.actions.size())]);
  return s;
}

struct AdSentence {
  std::vector<Segment> segments;
  corpus::AdAnnotation annotation;
  std::size_t shape = 0;
};

AdSentence ad_sentence(Rng& rng) {
  AdSentence out;
  out.shape = rng.below(ad_shapes().size());
  auto& ann = out.annotation;
  ann.item = make_item(rng);
  ann.advertiser = make_advertiser(rng);
  const auto q1 = rng.below(kQualities.size());
  const auto q2 = (q1 + 1 + rng.below(kQualities.size() - 1)) % kQualities.size();
  ann.qualities = {kQualities[q1], kQualities[q2]};
  for (const auto& [lit, slot] : ad_shapes()[out.shape].parts) {
    switch (slot) {
      case 0: out.segments.push_back({lit, Role::ad}); break;
      case 1: out.segments.push_back({ann.item, Role::item}); break;
      case 2: out.segments.push_back({ann.advertiser, Role::advertiser}); break;
      case 3: out.segments.push_back({ann.qualities[0], Role::ad}); break;
      default: out.segments.push_back({ann.qualities[1], Role::ad}); break;
    }
  }
  return out;
}

std::string role_prefix(Role r) {
  switch (r) {
    case Role::item: return "ITEM";
    case Role::advertiser: return "ADVERTISER";
    default: return "AD";
  }
}

// Labels tokens from the character ranges of the ad segments. A new entity
// starts at each segment boundary.
std::vector<std::string> tags_for(const std::vector<text::Token>& tokens, std::size_t ad_begin,
                                  const std::vector<Segment>& segments) {
  std::vector<std::size_t> seg_start;
  std::size_t pos = ad_begin;
  for (const auto& s : segments) {
    seg_start.push_back(pos);
    pos += s.text.size();
  }
  const std::size_t ad_end = pos;
  std::vector<std::string> tags(tokens.size(), "O");
  std::size_t prev_seg = static_cast<std::size_t>(-1);
  Role prev_role = Role::ad;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto c = tokens[i].char_start;
    if (c < ad_begin || c >= ad_end) {
      prev_seg = static_cast<std::size_t>(-1);
      continue;
    }
    const auto seg = static_cast<std::size_t>(
        std::upper_bound(seg_start.begin(), seg_start.end(), c) - seg_start.begin() - 1);
    const Role role = segments[seg].role;
    // literal text segments of the same role merge with their neighbours
    const bool continues = prev_seg != static_cast<std::size_t>(-1) && role == prev_role &&
                           (seg == prev_seg || role == Role::ad);
    tags[i] = (continues ? "I-" : "B-") + role_prefix(role);
    prev_seg = seg;
    prev_role = role;
  }
  return tags;
}

constexpr std::array kGeneratorLlms = {"gpt-4o", "llama-3-70b", "mixtral-8x7b"};
constexpr std::array kEngines = {"youchat", "perplexity", "copilot"};

}  // namespace

corpus::Dataset generate_corpus(const SynthConfig& config, std::string name) {
  if (config.n_records == 0) throw InvalidArgument("synthetic corpus needs at least one record");
  if (config.min_sentences < 1 || config.max_sentences < config.min_sentences)
    throw InvalidArgument("bad sentence count range");
  if (config.validation_fraction < 0 || config.test_fraction < 0 ||
      config.validation_fraction + config.test_fraction >= 1.0)
    throw InvalidArgument("split fractions must leave room for training data");

  Rng rng(mix_seed(config.seed, 0x5e7));
  const std::size_t n = config.n_records;
  const auto n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * n));
  const auto n_test = static_cast<std::size_t>(std::llround(config.test_fraction * n));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<corpus::Split> split(n, corpus::Split::train);
  for (std::size_t k = 0; k < n_val; ++k) split[order[k]] = corpus::Split::validation;
  for (std::size_t k = n_val; k < n_val + n_test && k < n; ++k)
    split[order[k]] = corpus::Split::test;

  const int width = static_cast<int>(std::to_string(n).size());
  std::vector<LabeledResponse> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng r(mix_seed(config.seed, i + 1));
    const Topic& topic = kTopics[r.below(kTopics.size())];
    LabeledResponse rec;
    std::string num = std::to_string(i + 1);
    rec.id = config.id_prefix + "-" + std::string(width - num.size(), '0') + num;
    rec.query = topic.query;
    rec.split = split[i];
    rec.has_ad = r.uniform() < config.positive_rate;
    rec.meta.source_engine = pick(r, kEngines);

    const int n_sent = config.min_sentences +
                       static_cast<int>(r.below(config.max_sentences - config.min_sentences + 1));
    std::vector<std::string> sentences;
    for (int s = 0; s < n_sent; ++s)
      sentences.push_back(organic_sentence(r, topic, config.organic_mention_rate));

    std::size_t ad_begin = 0;
    AdSentence ad;
    if (rec.has_ad) {
      ad = ad_sentence(r);
      const auto slot = 1 + r.below(sentences.size());  // never before the opening sentence
      std::string text;
      for (std::size_t s = 0; s < sentences.size(); ++s) {
        if (s == slot) {
          if (!text.empty()) text += ' ';
          ad_begin = text.size();
          for (const auto& seg : ad.segments) text += seg.text;
        }
        if (!text.empty()) text += ' ';
        text += sentences[s];
      }
      if (slot == sentences.size()) {
        text += ' ';
        ad_begin = text.size();
        for (const auto& seg : ad.segments) text += seg.text;
      }
      rec.response = std::move(text);
      ad.annotation.generator_llm = pick(r, kGeneratorLlms);
      ad.annotation.style_id = "template-" + std::to_string(ad.shape + 1);
      rec.ad = ad.annotation;
      rec.meta.llm_set = corpus::LlmSet::old_llms;
    } else {
      std::string text;
      for (const auto& s : sentences) {
        if (!text.empty()) text += ' ';
        text += s;
      }
      rec.response = std::move(text);
      rec.meta.llm_set = corpus::LlmSet::none;
    }
    const auto tokens = text::tokenize(rec.response);
    rec.tokens = text::token_texts(tokens);
    rec.tags = rec.has_ad ? tags_for(tokens, ad_begin, ad.segments)
                          : std::vector<std::string>(tokens.size(), "O");
    records.push_back(std::move(rec));
  }
  return corpus::Dataset(std::move(name), std::move(records));
}

std::string_view lexical_group(std::string_view token) {
  static const std::unordered_set<std::string_view> promo = {
      "try",    "check",   "out",      "offers",  "consider", "recommend", "best",
      "deal",   "love",    "get",      "grab",    "today",    "unbeatable", "amazing",
      "smartest", "choice", "treat",   "deserve", "incredible", "wonderful", "known",
      "value",  "miss",    "now",      "delivers", "available", "imagine",  "joy"};
  static const std::unordered_set<std::string_view> quality = [] {
    std::unordered_set<std::string_view> q;
    static std::vector<std::string> words;
    for (const char* phrase : kQualities)
      for (const auto& t : text::tokenize(phrase)) words.push_back(t.text);
    for (const auto& w : words) q.insert(w);
    q.erase("a");
    q.erase("an");
    return q;
  }();
  if (promo.count(token)) return "promo";
  if (quality.count(token)) return "quality";
  return {};
}

features::EmbeddingTable synthetic_embeddings(const corpus::Dataset& dataset, int dimension,
                                              std::uint64_t seed,
                                              const std::vector<std::string>& extra) {
  if (dimension <= 0) throw InvalidArgument("embedding dimension must be positive");
  std::set<std::string> vocab;
  for (const auto& r : dataset.records()) {
    const auto toks = r.tokens ? *r.tokens : text::token_texts(text::tokenize(r.response));
    for (const auto& t : toks) vocab.insert(text::lowercase(t));
  }
  for (const auto& t : extra) vocab.insert(text::lowercase(t));

  auto hash = [](std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ull;
    return h;
  };
  auto gaussian = [&](std::string_view key) {
    Rng rng(mix_seed(seed, hash(key)));
    std::vector<float> v(dimension);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    return v;
  };
  features::EmbeddingTable table(dimension);
  for (const auto& tok : vocab) {
    auto v = gaussian(tok);
    const auto group = lexical_group(tok);
    if (!group.empty()) {
      const auto center = gaussian(std::string("#group:") + std::string(group));
      for (int d = 0; d < dimension; ++d) v[d] = 0.5f * v[d] + 1.5f * center[d];
    }
    table.add(tok, std::move(v));
  }
  return table;
}

}  // namespace adshield::synth

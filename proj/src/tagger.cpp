#include "adshield/tagger.hpp"

#include <numeric>

#include "adshield/error.hpp"
#include "adshield/rng.hpp"
#include "adshield/text.hpp"

namespace adshield::tagger {
namespace {

std::uint32_t hash_feature(std::string_view s, std::uint32_t bits) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return static_cast<std::uint32_t>(h & ((std::uint64_t{1} << bits) - 1));
}

std::string shape(std::string_view w) {
  std::string out;
  for (unsigned char c : w) {
    char k;
    if (c >= 'A' && c <= 'Z') k = 'X';
    else if (c >= 'a' && c <= 'z') k = 'x';
    else if (c >= '0' && c <= '9') k = 'd';
    else if (c >= 0x80) k = 'u';
    else k = static_cast<char>(c);
    if (out.empty() || out.back() != k) out.push_back(k);
  }
  return out;
}

std::string context(const std::vector<std::string>& tokens, std::ptrdiff_t j) {
  if (j < 0) return "<s>";
  if (j >= static_cast<std::ptrdiff_t>(tokens.size())) return "</s>";
  return text::lowercase(tokens[static_cast<std::size_t>(j)]);
}

std::size_t argmax(const LabelWeights& s) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < s.size(); ++k)
    if (s[k] > s[best]) best = k;
  return best;
}

template <typename Lookup>
LabelWeights score(const std::vector<std::uint32_t>& feats, Lookup lookup) {
  LabelWeights s{};
  for (auto f : feats)
    if (const LabelWeights* w = lookup(f))
      for (std::size_t k = 0; k < kNumLabels; ++k) s[k] += (*w)[k];
  return s;
}

}  // namespace

std::vector<std::uint32_t> extract_features(const std::vector<std::string>& tokens,
                                            std::size_t i, BioLabel previous,
                                            std::uint32_t hash_bits) {
  const std::string& w = tokens[i];
  const std::string lw = text::lowercase(w);
  const auto pi = static_cast<std::ptrdiff_t>(i);
  const std::string prev(to_string(previous));
  std::vector<std::uint32_t> f;
  f.reserve(14);
  auto add = [&](const std::string& s) { f.push_back(hash_feature(s, hash_bits)); };
  add("bias");
  add("w=" + w);
  add("lw=" + lw);
  add("sh=" + shape(w));
  add("p3=" + lw.substr(0, 3));
  add("s3=" + (lw.size() > 3 ? lw.substr(lw.size() - 3) : lw));
  add("w-1=" + context(tokens, pi - 1));
  add("w+1=" + context(tokens, pi + 1));
  add("w-2=" + context(tokens, pi - 2));
  add("w+2=" + context(tokens, pi + 2));
  add("t-1=" + prev);
  add("t-1,lw=" + prev + " " + lw);
  add("t-1,w+1=" + prev + " " + context(tokens, pi + 1));
  return f;
}

TagSequence tag_tokens(const TaggerModel& model, const std::vector<std::string>& tokens) {
  if (!model.trained()) throw InvalidArgument("tagger model is not trained");
  TagSequence raw;
  raw.labels.reserve(tokens.size());
  BioLabel prev = BioLabel::O;
  auto lookup = [&](std::uint32_t f) -> const LabelWeights* {
    auto it = model.weights.find(f);
    return it == model.weights.end() ? nullptr : &it->second;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto s = score(extract_features(tokens, i, prev, model.hash_bits), lookup);
    prev = static_cast<BioLabel>(argmax(s));
    raw.labels.push_back(prev);
  }
  return repair_bio(raw);
}

TaggerTrainResult train_tagger(const corpus::Dataset& dataset, const TaggerConfig& config,
                               std::uint64_t seed) {
  if (config.epochs < 1) throw InvalidArgument("train_tagger: epochs must be >= 1");
  if (config.hash_bits < 1 || config.hash_bits > 30)
    throw InvalidArgument("train_tagger: hash_bits must be in [1, 30]");

  struct Example {
    const std::vector<std::string>* tokens;
    std::vector<BioLabel> gold;
  };
  std::vector<Example> examples;
  bool any_o = false, any_entity = false;
  for (const auto& r : dataset.records()) {
    if (!r.tokens || !r.tags) continue;
    Example ex{&*r.tokens, parse_labels(*r.tags)};
    for (auto l : ex.gold) (l == BioLabel::O ? any_o : any_entity) = true;
    examples.push_back(std::move(ex));
  }
  if (examples.empty()) throw InvalidArgument("train_tagger: no records carry tokens and tags");
  if (!any_o || !any_entity)
    throw InvalidArgument("train_tagger: training tags must contain both O and entity labels");

  // averaged perceptron bookkeeping (lazy averaging via timestamps)
  struct Param {
    LabelWeights w{};
    LabelWeights total{};
    std::array<std::uint64_t, kNumLabels> stamp{};
  };
  std::unordered_map<std::uint32_t, Param> params;
  std::uint64_t clock = 0;
  auto lookup = [&](std::uint32_t f) -> const LabelWeights* {
    auto it = params.find(f);
    return it == params.end() ? nullptr : &it->second.w;
  };
  auto update = [&](std::uint32_t f, std::size_t label, double delta) {
    Param& p = params[f];
    p.total[label] += static_cast<double>(clock - p.stamp[label]) * p.w[label];
    p.stamp[label] = clock;
    p.w[label] += delta;
  };

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const Example& ex = examples[idx];
      BioLabel prev = BioLabel::O;
      for (std::size_t i = 0; i < ex.gold.size(); ++i) {
        ++clock;
        const auto feats = extract_features(*ex.tokens, i, prev, config.hash_bits);
        const auto guess = argmax(score(feats, lookup));
        const auto truth = static_cast<std::size_t>(ex.gold[i]);
        if (guess != truth)
          for (auto f : feats) {
            update(f, truth, 1.0);
            update(f, guess, -1.0);
          }
        prev = static_cast<BioLabel>(guess);
      }
    }
  }

  TaggerTrainResult result;
  result.model.hash_bits = config.hash_bits;
  result.model.seed = seed;
  result.model.averaged = true;
  for (auto& [f, p] : params) {
    LabelWeights avg{};
    bool nonzero = false;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      const double total = p.total[k] + static_cast<double>(clock - p.stamp[k]) * p.w[k];
      avg[k] = clock > 0 ? total / static_cast<double>(clock) : p.w[k];
      nonzero = nonzero || avg[k] != 0.0;
    }
    if (nonzero) result.model.weights.emplace(f, avg);
  }

  std::size_t correct = 0, total = 0;
  for (const auto& ex : examples) {
    const auto pred = tag_tokens(result.model, *ex.tokens);
    for (std::size_t i = 0; i < ex.gold.size(); ++i) correct += pred.labels[i] == ex.gold[i];
    total += ex.gold.size();
  }
  result.train_tokens = total;
  result.train_accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  return result;
}

}  // namespace adshield::tagger

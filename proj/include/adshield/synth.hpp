#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "adshield/corpus.hpp"
#include "adshield/features.hpp"

namespace adshield::synth {

/// Templated corpus generator used for fixtures and desk-scale checks.
/// Positives carry one injected ad sentence ("Try <ITEM> from <ADVERTISER> -
/// <quality>" and similar shapes) whose BIO tags come from the character
/// ranges the generator filled in.
struct SynthConfig {
  std::size_t n_records = 200;
  double positive_rate = 0.3;
  double validation_fraction = 0.15;
  double test_fraction = 0.2;
  int min_sentences = 3;
  int max_sentences = 5;
  /// Probability that an organic sentence names a product or brand.
  double organic_mention_rate = 0.1;
  std::string id_prefix = "syn";
  std::uint64_t seed = 7;
};

corpus::Dataset generate_corpus(const SynthConfig& config, std::string name = "synthetic");

/// Lexical cluster of a lowercased token ("promo", "quality"), or empty.
std::string_view lexical_group(std::string_view token);

/// Deterministic stand-in for pretrained word vectors: each lowercased token
/// gets a hash-seeded Gaussian vector, shifted toward a shared center when it
/// belongs to a lexical group. Covers every token of `dataset` plus `extra`.
features::EmbeddingTable synthetic_embeddings(const corpus::Dataset& dataset, int dimension,
                                              std::uint64_t seed,
                                              const std::vector<std::string>& extra = {});

}  // namespace adshield::synth

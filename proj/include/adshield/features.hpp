#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace adshield::features {

using TokenList = std::vector<std::string>;

/// Mutual information (nats) between term presence and class, from document
/// counts n_tc (t: term present, c: positive class). Uses 0·ln 0 = 0.
/// Throws InvalidArgument when all counts are zero.
double mutual_information(std::uint64_t n11, std::uint64_t n10, std::uint64_t n01,
                          std::uint64_t n00);

struct Vocabulary {
  std::vector<std::string> terms;  // lowercased, ranked by score
  std::vector<double> scores;      // MI of each term
  std::unordered_map<std::string, std::size_t> term_index;
  int min_df = 1;
  int selected_k = 0;

  std::size_t size() const noexcept { return terms.size(); }
  bool empty() const noexcept { return terms.empty(); }
  /// Looks up an already lowercased term.
  std::optional<std::size_t> index_of(std::string_view term) const;

  /// Rebuilds term_index from terms.
  void reindex();
};

/// Lowercased terms with document frequency >= min_df, ranked by mutual
/// information with `labels` (ties: lexicographic), top k kept. A degenerate
/// result (no term reaches min_df) appends a message to `warnings`. With
/// `positive_only`, terms whose presence lowers the positive rate are skipped.
Vocabulary build_vocabulary(const std::vector<TokenList>& documents,
                            const std::vector<bool>& labels, int min_df, int k,
                            std::vector<std::string>* warnings = nullptr,
                            bool positive_only = false);

/// One term per line: "term<TAB>score".
void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path);
Vocabulary read_vocabulary(const std::filesystem::path& path);

enum class FeatureKind { binary_bow, mean_embedding };

struct FeatureVector {
  std::vector<double> values;
  FeatureKind kind = FeatureKind::binary_bow;
};

/// Sorted, unique indices of vocabulary terms occurring in the sentence.
std::vector<std::uint32_t> bow_indices(const TokenList& sentence, const Vocabulary& vocab);
/// Dense binary vector; throws InvalidArgument on an empty vocabulary.
FeatureVector bow_vector(const TokenList& sentence, const Vocabulary& vocab);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(int dimension) : dimension_(dimension) {}

  int dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  bool empty() const noexcept { return vectors_.empty(); }

  /// Throws InvalidArgument when the vector length differs from dimension().
  void add(std::string token, std::vector<float> vector);
  const std::vector<float>* find(std::string_view token) const;

  /// Tokens in lexicographic order (for deterministic serialization).
  std::vector<std::string> sorted_tokens() const;

 private:
  int dimension_ = 0;
  std::unordered_map<std::string, std::vector<float>> vectors_;
};

/// Text format: header "count dimension", then "token v1 ... vD" per line.
/// When `keep` is given only those tokens are retained.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               const std::unordered_set<std::string>* keep = nullptr);
void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

/// Mean of in-vocabulary token vectors; zero vector when none is known.
/// `lowercase` lowercases tokens before lookup.
FeatureVector mean_embedding(const TokenList& sentence, const EmbeddingTable& table,
                             bool lowercase = false);

/// Fraction of (lowercased) tokens that are dictionary members; 0 for an
/// empty token list.
double dictionary_score(const TokenList& tokens,
                        const std::unordered_set<std::string>& dict_terms);

}  // namespace adshield::features

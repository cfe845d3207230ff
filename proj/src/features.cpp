#include "adshield/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "adshield/error.hpp"
#include "adshield/text.hpp"

namespace adshield::features {

double mutual_information(std::uint64_t n11, std::uint64_t n10, std::uint64_t n01,
                          std::uint64_t n00) {
  const double n = static_cast<double>(n11) + n10 + n01 + n00;
  if (n == 0) throw InvalidArgument("mutual_information: all counts are zero");

  const double term1 = static_cast<double>(n11) + n10;  // term present
  const double term0 = static_cast<double>(n01) + n00;
  const double class1 = static_cast<double>(n11) + n01;  // positive class
  const double class0 = static_cast<double>(n10) + n00;

  auto cell = [n](double joint, double t, double c) {
    if (joint == 0) return 0.0;
    return (joint / n) * std::log(n * joint / (t * c));
  };
  const double mi = cell(static_cast<double>(n11), term1, class1) +
                    cell(static_cast<double>(n10), term1, class0) +
                    cell(static_cast<double>(n01), term0, class1) +
                    cell(static_cast<double>(n00), term0, class0);
  // rounding can push an independent table a hair below zero
  return std::max(0.0, mi);
}

std::optional<std::size_t> Vocabulary::index_of(std::string_view term) const {
  auto it = term_index.find(std::string(term));
  if (it == term_index.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::reindex() {
  term_index.clear();
  term_index.reserve(terms.size());
  for (std::size_t i = 0; i < terms.size(); ++i) term_index.emplace(terms[i], i);
}

Vocabulary build_vocabulary(const std::vector<TokenList>& documents,
                            const std::vector<bool>& labels, int min_df, int k,
                            std::vector<std::string>* warnings, bool positive_only) {
  if (documents.size() != labels.size() || documents.empty())
    throw InvalidArgument("build_vocabulary: need equally many documents and labels (> 0)");
  if (k <= 0) throw InvalidArgument("build_vocabulary: k must be positive");
  if (min_df <= 0) throw InvalidArgument("build_vocabulary: min_df must be positive");

  struct Counts {
    std::uint64_t df = 0;
    std::uint64_t df_pos = 0;
  };
  std::unordered_map<std::string, Counts> counts;
  std::uint64_t n_pos = 0;
  std::vector<std::string> uniq;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    if (labels[d]) ++n_pos;
    uniq.clear();
    for (const auto& tok : documents[d]) uniq.push_back(text::lowercase(tok));
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    for (auto& t : uniq) {
      auto& c = counts[t];
      ++c.df;
      if (labels[d]) ++c.df_pos;
    }
  }
  const std::uint64_t n = documents.size();
  const std::uint64_t n_neg = n - n_pos;

  std::vector<std::pair<std::string, double>> ranked;
  for (const auto& [term, c] : counts) {
    if (c.df < static_cast<std::uint64_t>(min_df)) continue;
    const std::uint64_t n11 = c.df_pos;
    const std::uint64_t n10 = c.df - c.df_pos;
    // P(pos | term) <= P(pos)
    if (positive_only && n11 * n <= c.df * n_pos) continue;
    ranked.emplace_back(term, mutual_information(n11, n10, n_pos - n11, n_neg - n10));
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > static_cast<std::size_t>(k)) ranked.resize(static_cast<std::size_t>(k));

  Vocabulary v;
  v.min_df = min_df;
  v.selected_k = k;
  for (auto& [term, score] : ranked) {
    v.terms.push_back(term);
    v.scores.push_back(score);
  }
  v.reindex();
  if (v.empty() && warnings)
    warnings->push_back("empty vocabulary: no term reaches min_df=" + std::to_string(min_df));
  return v;
}

void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  out.precision(17);
  for (std::size_t i = 0; i < vocab.size(); ++i)
    out << vocab.terms[i] << '\t' << vocab.scores[i] << '\n';
}

Vocabulary read_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read vocabulary " + path.string());
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw DataError("vocabulary line without score: " + line);
    v.terms.push_back(line.substr(0, tab));
    v.scores.push_back(std::stod(line.substr(tab + 1)));
  }
  v.selected_k = static_cast<int>(v.terms.size());
  v.reindex();
  return v;
}

std::vector<std::uint32_t> bow_indices(const TokenList& sentence, const Vocabulary& vocab) {
  std::vector<std::uint32_t> idx;
  for (const auto& tok : sentence)
    if (auto i = vocab.index_of(text::lowercase(tok))) idx.push_back(static_cast<std::uint32_t>(*i));
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

FeatureVector bow_vector(const TokenList& sentence, const Vocabulary& vocab) {
  if (vocab.empty()) throw InvalidArgument("bow_vector: empty vocabulary");
  FeatureVector fv{std::vector<double>(vocab.size(), 0.0), FeatureKind::binary_bow};
  for (auto i : bow_indices(sentence, vocab)) fv.values[i] = 1.0;
  return fv;
}

void EmbeddingTable::add(std::string token, std::vector<float> vector) {
  if (static_cast<int>(vector.size()) != dimension_)
    throw InvalidArgument("embedding for '" + token + "' has dimension " +
                          std::to_string(vector.size()) + ", expected " +
                          std::to_string(dimension_));
  vectors_.insert_or_assign(std::move(token), std::move(vector));
}

const std::vector<float>* EmbeddingTable::find(std::string_view token) const {
  auto it = vectors_.find(std::string(token));
  return it == vectors_.end() ? nullptr : &it->second;
}

std::vector<std::string> EmbeddingTable::sorted_tokens() const {
  std::vector<std::string> out;
  out.reserve(vectors_.size());
  for (const auto& [t, _] : vectors_) out.push_back(t);
  std::sort(out.begin(), out.end());
  return out;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               const std::unordered_set<std::string>* keep) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read embeddings " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("embedding file is empty: " + path.string());
  std::istringstream header(line);
  long long count = 0;
  int dim = 0;
  if (!(header >> count >> dim) || dim <= 0)
    throw DataError("bad embedding header '" + line + "' in " + path.string());

  EmbeddingTable table(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos)
      throw DataError(path.filename().string() + ":" + std::to_string(line_no) +
                      ": embedding line without values");
    std::string token = line.substr(0, sp);
    if (keep && !keep->contains(token)) continue;
    std::vector<float> v;
    v.reserve(static_cast<std::size_t>(dim));
    const char* p = line.c_str() + sp;
    char* end = nullptr;
    for (;;) {
      const float x = std::strtof(p, &end);
      if (end == p) break;
      v.push_back(x);
      p = end;
    }
    if (static_cast<int>(v.size()) != dim)
      throw DataError(path.filename().string() + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(dim) + " values, got " +
                      std::to_string(v.size()));
    table.add(std::move(token), std::move(v));
  }
  return table;
}

void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write embeddings " + path.string());
  out << table.size() << ' ' << table.dimension() << '\n';
  out.precision(9);
  for (const auto& tok : table.sorted_tokens()) {
    out << tok;
    for (float x : *table.find(tok)) out << ' ' << x;
    out << '\n';
  }
}

FeatureVector mean_embedding(const TokenList& sentence, const EmbeddingTable& table,
                             bool lowercase) {
  FeatureVector fv{std::vector<double>(static_cast<std::size_t>(table.dimension()), 0.0),
                   FeatureKind::mean_embedding};
  std::size_t known = 0;
  for (const auto& tok : sentence) {
    const auto* v = lowercase ? table.find(text::lowercase(tok)) : table.find(tok);
    if (!v) continue;
    ++known;
    for (std::size_t i = 0; i < v->size(); ++i) fv.values[i] += (*v)[i];
  }
  if (known > 0)
    for (auto& x : fv.values) x /= static_cast<double>(known);
  return fv;
}

double dictionary_score(const TokenList& tokens,
                        const std::unordered_set<std::string>& dict_terms) {
  if (tokens.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& t : tokens)
    if (dict_terms.contains(text::lowercase(t))) ++hits;
  return static_cast<double>(hits) / static_cast<double>(tokens.size());
}

}  // namespace adshield::features

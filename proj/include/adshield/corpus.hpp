#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace adshield::corpus {

enum class Split { train, validation, test };
/// Which family of generating LLMs produced the ad; `none` for organic responses.
enum class LlmSet { old_llms, new_llms, none };

std::string_view to_string(Split s);
std::string_view to_string(LlmSet s);
std::optional<Split> parse_split(std::string_view s);
std::optional<LlmSet> parse_llm_set(std::string_view s);

/// Reserved style identifiers of the four taxonomy cells.
inline constexpr std::string_view kOvertEmotional = "overt-emotional";
inline constexpr std::string_view kOvertRational = "overt-rational";
inline constexpr std::string_view kCovertEmotional = "covert-emotional";
inline constexpr std::string_view kCovertRational = "covert-rational";

struct AdAnnotation {
  std::string item;
  std::vector<std::string> qualities;
  std::string advertiser;
  std::string generator_llm;
  std::string style_id;

  friend bool operator==(const AdAnnotation&, const AdAnnotation&) = default;
};

struct ResponseMeta {
  std::string source_engine;
  LlmSet llm_set = LlmSet::none;

  friend bool operator==(const ResponseMeta&, const ResponseMeta&) = default;
};

struct LabeledResponse {
  std::string id;
  std::string query;
  std::string response;
  Split split = Split::test;
  bool has_ad = false;
  std::optional<AdAnnotation> ad;
  std::optional<std::vector<std::string>> tokens;
  std::optional<std::vector<std::string>> tags;
  ResponseMeta meta;

  friend bool operator==(const LabeledResponse&, const LabeledResponse&) = default;
};

/// Immutable collection of records with unique ids.
class Dataset {
 public:
  Dataset() = default;
  /// Throws DataError on a duplicate id.
  Dataset(std::string name, std::vector<LabeledResponse> records);

  const std::string& name() const noexcept { return name_; }
  const std::vector<LabeledResponse>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const LabeledResponse* find(std::string_view id) const;
  std::size_t count_positive() const;
  std::size_t count_negative() const { return size() - count_positive(); }

  /// Records of one split, in original order.
  Dataset subset(Split split) const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.name_ == b.name_ && a.records_ == b.records_;
  }

 private:
  std::string name_;
  std::vector<LabeledResponse> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct LoadOptions {
  bool strict = true;
  /// Ads may carry an empty qualities list only when this is declared.
  bool allow_empty_qualities = false;
};

/// Per-reason drop counts of lenient ingestion.
struct IngestStats {
  std::size_t lines = 0;
  std::size_t loaded = 0;
  std::map<std::string, std::size_t> dropped;

  std::size_t total_dropped() const;
};

/// Invariant violations of one record, as short reason codes; empty when valid.
std::vector<std::string> validate(const LabeledResponse& r, bool allow_empty_qualities);

/// Loads the canonical line-delimited corpus format. The dataset is named
/// after the file stem. Strict mode throws DataError (with line number and
/// record id) on the first invalid record; lenient mode drops and counts.
Dataset load_corpus(const std::filesystem::path& path, const LoadOptions& options,
                    IngestStats* stats = nullptr);
Dataset load_corpus(const std::filesystem::path& path, bool strict);

/// Parses one canonical record line. Throws DataError on malformed input;
/// does not check invariants.
LabeledResponse parse_record(std::string_view line);
std::string format_record(const LabeledResponse& r);

void write_corpus(const Dataset& dataset, const std::filesystem::path& path);

/// Import adapter for WGNA-style release files (see README for the accepted
/// field aliases). `split_override` applies when records lack a split field.
Dataset import_wgna(const std::filesystem::path& path, const LoadOptions& options,
                    std::optional<Split> split_override = std::nullopt,
                    IngestStats* stats = nullptr);

/// Replaces the positives of `reference` by `new_positives` (matched by id),
/// keeping negatives untouched and the reference record order.
Dataset build_variant_testset(const Dataset& reference,
                              const std::vector<LabeledResponse>& new_positives,
                              std::string name);

struct ClassCounts {
  std::size_t total = 0;
  std::size_t positive = 0;
};
std::map<Split, ClassCounts> count_by_split(const Dataset& dataset);

}  // namespace adshield::corpus

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adshield/corpus.hpp"
#include "adshield/error.hpp"

namespace adshield::evasion {

enum class Explicitness { overt, covert };
enum class Appeal { emotional, rational };

/// One cell of the advertising-style taxonomy.
struct AdStyle {
  Explicitness explicitness = Explicitness::overt;
  Appeal appeal = Appeal::emotional;

  friend bool operator==(const AdStyle&, const AdStyle&) = default;
};

/// The four styles in the order overt-emotional, overt-rational,
/// covert-emotional, covert-rational.
std::vector<AdStyle> all_styles();
/// Reserved identifier, e.g. "covert-rational".
std::string style_id(AdStyle style);
std::optional<AdStyle> parse_style(std::string_view id);

struct GenerationRequest {
  std::string response_id;
  std::string query;
  std::string response;
  std::string item;
  std::vector<std::string> qualities;
  std::string advertiser;
  /// Template to render: a reserved style id or e.g. "old-prompt-1".
  std::string style_id;
  std::string llm_id;
};

/// A prompt template file. Leading "# key: value" lines are metadata
/// (version, allow-empty-qualities, note); the rest is the template body with
/// {query}, {response}, {item}, {qualities} and {advertiser} placeholders.
struct PromptTemplate {
  std::string id;
  std::string body;
  int version = 1;
  bool allow_empty_qualities = false;
  std::optional<AdStyle> style;
  std::string note;
};

PromptTemplate parse_template(std::string id, std::string_view file_text);

class PromptPack {
 public:
  void add(PromptTemplate t);
  const PromptTemplate* find(std::string_view id) const;
  std::vector<std::string> ids() const;
  bool empty() const { return templates_.empty(); }

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

/// Loads every "<id>.txt" in `dir`.
PromptPack load_prompt_pack(const std::filesystem::path& dir);

struct StyledPrompt {
  std::optional<AdStyle> style;
  std::string template_id;
  int template_version = 1;
  std::string rendered;
};

/// Single-pass placeholder substitution (substituted values are not
/// rescanned). Throws InvalidArgument on a missing template, an empty
/// required field, or an unknown placeholder left in the template.
StyledPrompt render_prompt(const GenerationRequest& request, const PromptPack& pack);

// ------------------------------------------------------------ LLM contract

struct GenerationParams {
  double temperature = 0.7;
  int max_tokens = 1024;
};

/// Documented sampling defaults per model identifier.
GenerationParams default_params(std::string_view llm_id);

struct LlmRequest {
  std::string prompt;
  std::string llm_id;
  GenerationParams params;
  /// The request the prompt was rendered from (mocks read it).
  const GenerationRequest* source = nullptr;
};

/// Retryable failure (rate limit, 5xx, timeout, connection loss).
class TransientLlmError : public Error {
 public:
  using Error::Error;
};

/// Non-retryable failure (authentication, malformed request).
class PermanentLlmError : public Error {
 public:
  using Error::Error;
};

/// send(prompt, llm_id, params) -> text. Implementations must be safe to
/// call from several threads.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string send(const LlmRequest& request) = 0;
};

/// Returns "<response> [AD <item> by <advertiser>]".
class EchoMockClient final : public LlmClient {
 public:
  std::string send(const LlmRequest& request) override;
};

/// Deterministic restyler: overt styles append conspicuous praise, covert
/// styles paraphrase the item as one option among alternatives without
/// promotional wording or the advertiser's name.
class StyleMockClient final : public LlmClient {
 public:
  std::string send(const LlmRequest& request) override;
};

/// Always fails; exercises the failure path.
class FailingClient final : public LlmClient {
 public:
  explicit FailingClient(bool transient = true) : transient_(transient) {}
  std::string send(const LlmRequest& request) override;

 private:
  bool transient_;
};

// --------------------------------------------------------------- batching

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30000};
};

/// Line-delimited audit log: timestamp, llm_id, style, response_id, status,
/// attempt, detail.
class RequestLog {
 public:
  RequestLog() = default;
  explicit RequestLog(const std::filesystem::path& path);

  void record(std::string_view llm_id, std::string_view style, std::string_view response_id,
              std::string_view status, int attempt, std::string_view detail = {});
  std::size_t entries() const;

 private:
  mutable std::mutex mu_;
  std::unique_ptr<std::ofstream> out_;
  std::size_t entries_ = 0;
};

struct VariantSpec {
  std::string style_id;
  std::string llm_id;
  corpus::LlmSet llm_set = corpus::LlmSet::new_llms;

  /// "<style_id>@<llm_id>"
  std::string name() const;
};

/// Response text without its ad: sentences holding a non-O gold tag are
/// dropped. Records without tags are returned unchanged.
std::string ad_free_text(const corpus::LabeledResponse& r);

/// Every style crossed with every llm id.
std::vector<VariantSpec> cross(const std::vector<std::string>& style_ids,
                               const std::vector<std::string>& llm_ids,
                               corpus::LlmSet llm_set = corpus::LlmSet::new_llms);

struct GenerationFailure {
  std::string response_id;
  std::string reason;
  int attempts = 0;
};

struct VariantResult {
  VariantSpec spec;
  std::string name;
  /// Present only when every positive was regenerated.
  std::optional<corpus::Dataset> dataset;
  std::vector<GenerationFailure> failures;

  bool complete() const { return dataset.has_value(); }
};

struct GenerationOptions {
  unsigned concurrency = 4;
  RetryPolicy retry;
  /// Abort the whole run once this many requests failed for good.
  std::size_t failure_budget = static_cast<std::size_t>(-1);
  std::optional<GenerationParams> params;
  RequestLog* log = nullptr;
};

/// Raised when the failure budget is exceeded.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// For each spec, sends one rendered prompt per reference positive with
/// bounded concurrency and retries, and assembles the variant through
/// corpus::build_variant_testset in reference order.
std::vector<VariantResult> generate_variants(const corpus::Dataset& reference,
                                             const std::vector<VariantSpec>& specs,
                                             const PromptPack& pack, LlmClient& client,
                                             const GenerationOptions& options = {});

}  // namespace adshield::evasion

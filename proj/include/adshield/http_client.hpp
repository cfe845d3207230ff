#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "adshield/evasion.hpp"

namespace adshield::evasion {

/// Environment variable holding the API credential.
inline constexpr const char* kApiKeyEnv = "ADSHIELD_LLM_API_KEY";

std::optional<std::string> api_key_from_env();

/// Client for OpenAI-compatible chat-completion endpoints. Status 429, 5xx
/// and transport errors raise TransientLlmError; other failures raise
/// PermanentLlmError.
class HttpLlmClient final : public LlmClient {
 public:
  /// `base_url` like "https://api.openai.com" or "http://127.0.0.1:8080".
  HttpLlmClient(std::string base_url, std::string api_key,
                std::string path = "/v1/chat/completions",
                std::chrono::seconds timeout = std::chrono::seconds(120));

  std::string send(const LlmRequest& request) override;

 private:
  std::string base_url_;
  std::string api_key_;
  std::string path_;
  std::chrono::seconds timeout_;
};

}  // namespace adshield::evasion

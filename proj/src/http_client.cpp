#include "adshield/http_client.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

namespace adshield::evasion {

std::optional<std::string> api_key_from_env() {
  const char* v = std::getenv(kApiKeyEnv);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

HttpLlmClient::HttpLlmClient(std::string base_url, std::string api_key, std::string path,
                             std::chrono::seconds timeout)
    : base_url_(std::move(base_url)),
      api_key_(std::move(api_key)),
      path_(std::move(path)),
      timeout_(timeout) {}

std::string HttpLlmClient::send(const LlmRequest& request) {
  // one client per call keeps send() thread-safe
  httplib::Client cli(base_url_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  cli.set_write_timeout(timeout_);

  nlohmann::json body;
  body["model"] = request.llm_id;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.params.temperature;
  body["max_tokens"] = request.params.max_tokens;

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto res = cli.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw TransientLlmError("transport error: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500)
    throw TransientLlmError("HTTP " + std::to_string(res->status));
  if (res->status != 200)
    throw PermanentLlmError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));

  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw PermanentLlmError(std::string("unexpected completion payload: ") + e.what());
  }
}

}  // namespace adshield::evasion

#include "skillopt/llm/provider.hpp"

#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"
#include "skillopt/errors.hpp"

namespace skillopt {

using nlohmann::json;

void ChatRequest::validate() const {
  const bool has_user = std::any_of(messages.begin(), messages.end(),
                                    [](const ChatMessage& m) { return m.role == ChatRole::user; });
  if (!has_user) throw InvalidArgument("chat request needs at least one user message");
  if (temperature && *temperature < 0.0) throw InvalidArgument("temperature must be >= 0");
}

std::string ChatRequest::text() const {
  std::string out;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += messages[i].content;
  }
  return out;
}

void ProviderConfig::validate() const {
  if (parallelism < 1) throw ConfigError("provider parallelism must be >= 1");
  if (max_retries < 0) throw ConfigError("provider max_retries must be >= 0");
  if (endpoint_url.empty()) throw ConfigError("provider endpoint_url is required");
  if (model_name.empty()) throw ConfigError("provider model_name is required");
}

std::string ChatProvider::complete(const ChatRequest& request) {
  request.validate();
  auto text = do_complete(request);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ProviderError(fmt::format("{} returned an empty completion", name()));
  }
  return text;
}

std::string parse_completion_body(std::string_view body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    throw ProviderError(fmt::format("unparseable completion body: {}", e.what()), 200);
  }
  const auto* choices = doc.contains("choices") ? &doc["choices"] : nullptr;
  if (!choices || !choices->is_array() || choices->empty()) {
    throw ProviderError("completion body has no choices", 200);
  }
  const auto& message = (*choices)[0].value("message", json::object());
  const auto content = message.find("content");
  if (content == message.end() || content->is_null()) return {};
  if (!content->is_string()) throw ProviderError("completion content is not a string", 200);
  return content->get<std::string>();
}

namespace {

std::string_view role_name(ChatRole role) { return role == ChatRole::system ? "system" : "user"; }

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

HttpChatProvider::HttpChatProvider(ProviderConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto scheme_end = config_.endpoint_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError(fmt::format("endpoint_url '{}' needs an http:// or https:// scheme", config_.endpoint_url));
  }
  const auto path_start = config_.endpoint_url.find('/', scheme_end + 3);
  base_url_ = config_.endpoint_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/v1/chat/completions" : config_.endpoint_url.substr(path_start);
}

std::string HttpChatProvider::request_body(const ChatRequest& request) const {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back(json{{"role", role_name(m.role)}, {"content", m.content}});
  }
  json body{{"model", request.model_name.empty() ? config_.model_name : request.model_name},
            {"messages", std::move(messages)}};
  if (request.temperature) body["temperature"] = *request.temperature;
  const int max_tokens = request.max_output_tokens > 0 ? request.max_output_tokens : config_.max_output_tokens;
  if (max_tokens > 0) body["max_tokens"] = max_tokens;
  return body.dump();
}

std::string HttpChatProvider::do_complete(const ChatRequest& request) {
  const auto body = request_body(request);
  httplib::Headers headers;
  if (!config_.api_key_env_var.empty()) {
    if (const char* key = std::getenv(config_.api_key_env_var.c_str()); key && *key) {
      headers.emplace("Authorization", fmt::format("Bearer {}", key));
    }
  }

  httplib::Client client(base_url_);
  const auto timeout = config_.request_timeout;
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                                static_cast<long>((timeout.count() % 1000) * 1000));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                          static_cast<long>((timeout.count() % 1000) * 1000));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                           static_cast<long>((timeout.count() % 1000) * 1000));

  std::optional<int> last_status;
  std::string last_error;
  auto delay = config_.backoff_initial;
  int attempts = 0;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      spdlog::warn("{}: attempt {} failed ({}), retrying in {} ms", name(), attempt, last_error, delay.count());
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    ++attempts;
    auto result = client.Post(path_, headers, body, "application/json");
    if (!result) {
      last_error = httplib::to_string(result.error());
      continue;
    }
    last_status = result->status;
    if (result->status >= 200 && result->status < 300) return parse_completion_body(result->body);
    last_error = fmt::format("HTTP {}", result->status);
    if (!retryable(result->status)) break;
  }
  throw ProviderError(fmt::format("{}: request failed after {} attempt(s): {}", name(), attempts, last_error),
                      last_status);
}

}  // namespace skillopt

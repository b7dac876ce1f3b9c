#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace skillopt {

enum class ChatRole { system, user };

struct ChatMessage {
  ChatRole role = ChatRole::user;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  /// Unset means the field is omitted on the wire (reasoning models reject it).
  std::optional<double> temperature;
  int max_output_tokens = 0;
  /// Empty means "use the provider's configured model".
  std::string model_name;

  /// Throws InvalidArgument without a user message.
  void validate() const;
  /// Message contents joined by blank lines; what mocks and hashes look at.
  [[nodiscard]] std::string text() const;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct ProviderConfig {
  std::string endpoint_url;
  std::string api_key_env_var;
  std::string model_name;
  std::chrono::milliseconds request_timeout{120'000};
  int max_retries = 3;
  int parallelism = 1;
  std::chrono::milliseconds backoff_initial{500};
  int max_output_tokens = 0;

  void validate() const;
};

/// A chat-completion backend. complete() validates the request and rejects
/// empty completions; implementations override do_complete().
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;

  std::string complete(const ChatRequest& request);

  /// Upper bound on concurrent complete() calls.
  [[nodiscard]] virtual int parallelism() const { return 1; }
  [[nodiscard]] virtual std::string name() const = 0;

 protected:
  virtual std::string do_complete(const ChatRequest& request) = 0;
};

/// OpenAI-style /chat/completions client with retry and exponential backoff.
/// Retries connection failures, 429 and 5xx; other statuses fail at once.
class HttpChatProvider final : public ChatProvider {
 public:
  explicit HttpChatProvider(ProviderConfig config);

  [[nodiscard]] int parallelism() const override { return config_.parallelism; }
  [[nodiscard]] std::string name() const override { return "http:" + config_.model_name; }

  /// JSON body sent for `request`.
  [[nodiscard]] std::string request_body(const ChatRequest& request) const;

 protected:
  std::string do_complete(const ChatRequest& request) override;

 private:
  ProviderConfig config_;
  std::string base_url_;
  std::string path_;
};

/// Assistant text from a chat-completion response body; throws ProviderError.
std::string parse_completion_body(std::string_view body);

}  // namespace skillopt

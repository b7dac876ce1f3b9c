#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "skillopt/errors.hpp"
#include "skillopt/llm/provider.hpp"

using namespace skillopt;
using nlohmann::json;

namespace {

/// Local chat-completion server answering with a scripted status sequence.
class ScriptedServer {
 public:
  explicit ScriptedServer(std::vector<int> statuses) : statuses_(std::move(statuses)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const auto n = hits_++;
      last_body_ = req.body;
      last_auth_ = req.get_header_value("Authorization");
      const int status = n < statuses_.size() ? statuses_[n] : 200;
      res.status = status;
      if (status == 200) {
        res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"Looks right. [[2]]"}}]})",
                        "application/json");
      } else {
        res.set_content("error", "text/plain");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ScriptedServer() {
    server_.stop();
    thread_.join();
  }

  [[nodiscard]] std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
  [[nodiscard]] std::size_t hits() const { return hits_.load(); }
  [[nodiscard]] const std::string& last_body() const { return last_body_; }
  [[nodiscard]] const std::string& last_auth() const { return last_auth_; }

 private:
  httplib::Server server_;
  std::vector<int> statuses_;
  std::atomic<std::size_t> hits_{0};
  std::string last_body_;
  std::string last_auth_;
  int port_ = 0;
  std::thread thread_;
};

ProviderConfig config_for(const std::string& url, int retries) {
  ProviderConfig c;
  c.endpoint_url = url;
  c.model_name = "test-model";
  c.max_retries = retries;
  c.backoff_initial = std::chrono::milliseconds(1);
  c.request_timeout = std::chrono::milliseconds(5000);
  return c;
}

ChatRequest user_request(std::optional<double> temperature) {
  ChatRequest r;
  r.messages.push_back({ChatRole::user, "score this"});
  r.temperature = temperature;
  return r;
}

}  // namespace

TEST(HttpChatProvider, RetriesServerErrorsThenSucceeds) {
  ScriptedServer server({500, 500, 200});
  HttpChatProvider provider(config_for(server.url(), 2));
  EXPECT_EQ(provider.complete(user_request(0.0)), "Looks right. [[2]]");
  EXPECT_EQ(server.hits(), 3u);
}

TEST(HttpChatProvider, ExhaustedRetriesCarryLastStatus) {
  ScriptedServer server({500, 500, 500});
  HttpChatProvider provider(config_for(server.url(), 2));
  try {
    provider.complete(user_request(0.0));
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.last_status(), 500);
    EXPECT_NE(std::string(e.what()).find("3 attempt"), std::string::npos) << e.what();
  }
  EXPECT_EQ(server.hits(), 3u);
}

TEST(HttpChatProvider, ClientErrorsAreNotRetried) {
  ScriptedServer server({400, 200});
  HttpChatProvider provider(config_for(server.url(), 3));
  try {
    provider.complete(user_request(0.0));
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.last_status(), 400);
  }
  EXPECT_EQ(server.hits(), 1u);
}

TEST(HttpChatProvider, WireFormatAndBearerKey) {
  ScriptedServer server({});
  ::setenv("SKILLOPT_TEST_KEY", "sekret", 1);
  auto cfg = config_for(server.url(), 0);
  cfg.api_key_env_var = "SKILLOPT_TEST_KEY";
  cfg.max_output_tokens = 64;
  HttpChatProvider provider(cfg);
  provider.complete(user_request(0.0));
  EXPECT_EQ(server.last_auth(), "Bearer sekret");
  const auto body = json::parse(server.last_body());
  EXPECT_EQ(body.at("model"), "test-model");
  EXPECT_EQ(body.at("temperature"), 0.0);
  EXPECT_EQ(body.at("max_tokens"), 64);
  EXPECT_EQ(body.at("messages").at(0).at("role"), "user");
  EXPECT_EQ(body.at("messages").at(0).at("content"), "score this");
}

TEST(HttpChatProvider, UnsetTemperatureIsOmitted) {
  HttpChatProvider provider(config_for("http://127.0.0.1:9/v1/chat/completions", 0));
  const auto body = json::parse(provider.request_body(user_request(std::nullopt)));
  EXPECT_FALSE(body.contains("temperature"));
  EXPECT_FALSE(body.contains("max_tokens"));
}

TEST(HttpChatProvider, ConnectionFailureIsProviderError) {
  HttpChatProvider provider(config_for("http://127.0.0.1:9/v1/chat/completions", 1));
  try {
    provider.complete(user_request(0.0));
    FAIL() << "expected ProviderError";
  } catch (const ProviderError& e) {
    EXPECT_FALSE(e.last_status().has_value());
  }
}

TEST(HttpChatProvider, ConfigValidation) {
  EXPECT_THROW(HttpChatProvider(config_for("no-scheme", 0)), ConfigError);
  auto c = config_for("http://x", 0);
  c.parallelism = 0;
  EXPECT_THROW(HttpChatProvider{c}, ConfigError);
  c = config_for("http://x", -1);
  EXPECT_THROW(HttpChatProvider{c}, ConfigError);
}

TEST(ParseCompletionBody, Shapes) {
  EXPECT_EQ(parse_completion_body(R"({"choices":[{"message":{"content":"hi"}}]})"), "hi");
  EXPECT_EQ(parse_completion_body(R"({"choices":[{"message":{"content":null}}]})"), "");
  EXPECT_THROW(parse_completion_body("nope"), ProviderError);
  EXPECT_THROW(parse_completion_body(R"({"choices":[]})"), ProviderError);
}

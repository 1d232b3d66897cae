#pragma once

// Chat-completion client over HTTP (OpenAI-compatible wire format).

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>

#include "ibe_eval/transcript.hpp"

namespace ibe {

struct HttpLlmConfig {
  std::string base_url = "https://api.openai.com";  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 120;
  int max_attempts = 3;
};

class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(HttpLlmConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.max_attempts < 1) cfg_.max_attempts = 1;
  }

  std::string complete(const LlmRequest& req) override {
    validate_request(req);
    json body = {{"model", req.model},
                 {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
                 {"temperature", req.temperature},
                 {"max_tokens", req.max_tokens}};
    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
      if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
    }

    std::string last_error;
    for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
      httplib::Client cli(cfg_.base_url);
      cli.set_connection_timeout(cfg_.timeout_seconds, 0);
      cli.set_read_timeout(cfg_.timeout_seconds, 0);
      auto res = cli.Post(cfg_.path, headers, body.dump(), "application/json");
      if (!res) {
        last_error = "transport failure: " + httplib::to_string(res.error());
      } else if (res->status >= 500 || res->status == 429) {
        last_error = "HTTP " + std::to_string(res->status);
      } else if (res->status != 200) {
        throw TransportError("LLM endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300));
      } else {
        return extract_content(res->body);
      }
      if (attempt < cfg_.max_attempts) std::this_thread::sleep_for(std::chrono::milliseconds(200 * attempt));
    }
    throw TransportError("LLM request failed after " + std::to_string(cfg_.max_attempts) + " attempts: " + last_error);
  }

  static std::string extract_content(const std::string& body) {
    try {
      auto j = json::parse(body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw TransportError(std::string("malformed chat-completion response: ") + e.what());
    }
  }

 private:
  HttpLlmConfig cfg_;
};

}  // namespace ibe

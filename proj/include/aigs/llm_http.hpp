#pragma once

// Live chat-completion backend over HTTP(S).

#include "llm.hpp"

#include <httplib.h>

#include <cstdlib>

namespace aigs::llm {

struct HttpConfig {
  std::string base_url = "https://api.openai.com";  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 120;
};

/// Wire payload for a chat request.
inline json chat_payload(const ChatRequest& r) {
  json messages = json::array();
  for (auto& m : r.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", r.model}, {"messages", messages}, {"temperature", r.temperature}, {"max_tokens", r.max_tokens}};
}

inline ChatResponse parse_chat_response(const std::string& body) {
  try {
    auto j = json::parse(body);
    ChatResponse resp;
    resp.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage")) {
      resp.usage.input_tokens = j["usage"].value("prompt_tokens", 0);
      resp.usage.output_tokens = j["usage"].value("completion_tokens", 0);
    }
    resp.usage.calls = 1;
    return resp;
  } catch (const json::exception& e) {
    throw BackendError(std::string("unexpected chat-completion response: ") + e.what());
  }
}

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpConfig config) : config_(std::move(config)) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }

  ChatResponse complete(const ChatRequest& request) override {
    check_request(request);
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(config_.path, headers, canonical(chat_payload(request)), "application/json");
    if (!res) throw TransportError("HTTP transport failure: " + httplib::to_string(res.error()));
    if (res->status == 429) throw RateLimitError("rate limited by " + config_.base_url);
    if (res->status >= 500) throw TransportError("server error " + std::to_string(res->status));
    if (res->status != 200)
      throw BackendError("chat completion failed with status " + std::to_string(res->status) + ": " + res->body);
    return parse_chat_response(res->body);
  }

 private:
  HttpConfig config_;
  std::string api_key_;
};

}  // namespace aigs::llm

// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgu/api_client.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "cfgu/error.hpp"

namespace cfgu {

std::string api_key_from_env() {
  for (const char* name : {"CFGU_API_KEY", "OPENAI_API_KEY"}) {
    if (const char* value = std::getenv(name); value && *value) return value;
  }
  return {};
}

OpenAIClient::OpenAIClient(EndpointConfig config) : config_(std::move(config)) {
  const std::string& url = config_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  host_ = url.substr(0, path_start);
  if (path_start != std::string::npos) prefix_ = url.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  if (config_.max_attempts < 1) config_.max_attempts = 1;
}

nlohmann::json OpenAIClient::post(const std::string& route, const nlohmann::json& body) const {
  const std::string path = prefix_ + route;
  const std::string payload = body.dump();
  auto backoff = config_.initial_backoff;
  std::string last_error;

  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    httplib::Client client(host_);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    client.set_write_timeout(config_.timeout);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    auto res = client.Post(path, headers, payload, "application/json");
    bool retryable = true;
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw ServiceError(path + ": response is not JSON: " + e.what());
      }
    } else {
      last_error = "HTTP " + std::to_string(res->status);
      retryable = res->status == 429 || res->status >= 500;
    }
    if (!retryable) break;
    if (attempt < config_.max_attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::duration_cast<std::chrono::milliseconds>(backoff * config_.backoff_multiplier);
    }
  }
  throw ServiceError(host_ + path + ": " + last_error);
}

std::string OpenAIClient::chat(const std::string& model, const std::vector<ChatMessage>& messages,
                               double temperature) const {
  nlohmann::json body = {{"model", model}, {"temperature", temperature}, {"messages", nlohmann::json::array()}};
  for (const ChatMessage& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  if (config_.max_tokens) body["max_tokens"] = *config_.max_tokens;
  const nlohmann::json reply = post("/v1/chat/completions", body);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(std::string("chat completion reply missing choices[0].message.content: ") + e.what());
  }
}

std::string OpenAIClient::complete(const std::string& model, const std::string& prompt, double temperature) const {
  nlohmann::json body = {{"model", model}, {"prompt", prompt}, {"temperature", temperature}};
  if (config_.max_tokens) body["max_tokens"] = *config_.max_tokens;
  const nlohmann::json reply = post("/v1/completions", body);
  try {
    return reply.at("choices").at(0).at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(std::string("completion reply missing choices[0].text: ") + e.what());
  }
}

}  // namespace cfgu

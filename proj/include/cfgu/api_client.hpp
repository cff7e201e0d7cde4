// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace cfgu {

struct ChatMessage {
  std::string role;
  std::string content;
};

// Backend for text generation. Implementations throw ServiceError when a
// request ultimately fails.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string chat(const std::string& model, const std::vector<ChatMessage>& messages,
                           double temperature) const = 0;
  virtual std::string complete(const std::string& model, const std::string& prompt, double temperature) const = 0;
};

struct EndpointConfig {
  // scheme://host[:port][/prefix]; routes are appended as /v1/...
  std::string base_url = "https://api.openai.com";
  std::string api_key;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_multiplier = 2.0;
  std::chrono::seconds timeout{120};
  std::optional<int> max_tokens;
};

// Reads the API key from CFGU_API_KEY, falling back to OPENAI_API_KEY.
std::string api_key_from_env();

// OpenAI-compatible client for POST /v1/chat/completions and
// /v1/completions. Transport errors, 429 and 5xx responses are retried with
// exponential backoff; other HTTP errors fail immediately.
class OpenAIClient final : public CompletionBackend {
 public:
  explicit OpenAIClient(EndpointConfig config);

  std::string chat(const std::string& model, const std::vector<ChatMessage>& messages,
                   double temperature) const override;
  std::string complete(const std::string& model, const std::string& prompt, double temperature) const override;

  nlohmann::json post(const std::string& route, const nlohmann::json& body) const;

 private:
  EndpointConfig config_;
  std::string host_;
  std::string prefix_;
};

}  // namespace cfgu

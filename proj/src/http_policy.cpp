#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "oncv/policy.hpp"

namespace oncv {

using json = nlohmann::json;

struct HttpChatPolicy::Impl {
  Options options;
  std::mutex rate_mutex;
  std::chrono::steady_clock::time_point last_request = std::chrono::steady_clock::time_point::min();

  void respect_rate_ceiling() {
    if (options.min_request_interval_ms <= 0) return;
    std::unique_lock lock(rate_mutex);
    const auto interval = std::chrono::milliseconds(options.min_request_interval_ms);
    const auto now = std::chrono::steady_clock::now();
    if (last_request != std::chrono::steady_clock::time_point::min() &&
        now - last_request < interval) {
      const auto wait = interval - (now - last_request);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
    last_request = std::chrono::steady_clock::now();
  }
};

HttpChatPolicy::HttpChatPolicy(Options options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
}

HttpChatPolicy::~HttpChatPolicy() = default;

namespace {

json build_request_body(const HttpChatPolicy::Options& options, const PolicyRequest& request) {
  json body = {
      {"model", options.model},
      {"messages", json::array({json{{"role", "user"}, {"content", request.conversation}}})},
      {"temperature", request.temperature},
      {"max_tokens", request.max_tokens},
  };
  if (!request.stop.empty()) body["stop"] = request.stop;
  if (options.request_logprobs) body["logprobs"] = true;
  return body;
}

PolicyResponse parse_chat_response(const std::string& body) {
  json parsed;
  try {
    parsed = json::parse(body);
  } catch (const json::exception& ex) {
    throw PolicyTransportError(std::string("policy returned invalid JSON: ") + ex.what());
  }
  const json& choices = parsed.value("choices", json::array());
  if (choices.empty()) {
    throw PolicyTransportError("policy response has no choices");
  }
  const json& choice = choices.at(0);

  PolicyResponse response;
  if (choice.contains("message")) {
    response.text = choice.at("message").value("content", "");
  } else {
    response.text = choice.value("text", "");
  }

  if (choice.contains("logprobs") && choice.at("logprobs").is_object()) {
    const json& logprobs = choice.at("logprobs");
    if (logprobs.contains("content") && logprobs.at("content").is_array()) {
      for (const json& item : logprobs.at("content")) {
        response.token_probs.push_back(TokenProb{
            item.value("token", ""), std::exp(item.value("logprob", 0.0))});
      }
    } else if (logprobs.contains("tokens") && logprobs.contains("token_logprobs")) {
      const json& tokens = logprobs.at("tokens");
      const json& values = logprobs.at("token_logprobs");
      for (std::size_t i = 0; i < tokens.size() && i < values.size(); ++i) {
        if (values.at(i).is_null()) continue;
        response.token_probs.push_back(
            TokenProb{tokens.at(i).get<std::string>(), std::exp(values.at(i).get<double>())});
      }
    }
  }
  return response;
}

bool retryable_status(int status) {
  return status == 408 || status == 429 || status >= 500;
}

}  // namespace

PolicyResponse HttpChatPolicy::complete(const PolicyRequest& request) {
  const Options& options = impl_->options;
  if (options.base_url.empty()) {
    throw PolicyTransportError("policy endpoint base URL is not configured");
  }

  const json body = build_request_body(options, request);
  std::string last_error = "no attempts made";

  for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
    if (attempt > 0) {
      const int backoff_ms = std::min(250 * (1 << (attempt - 1)), 4000);
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
    }
    impl_->respect_rate_ceiling();

    httplib::Client client(options.base_url);
    client.set_connection_timeout(options.timeout_ms / 1000,
                                  (options.timeout_ms % 1000) * 1000);
    client.set_read_timeout(options.timeout_ms / 1000, (options.timeout_ms % 1000) * 1000);
    httplib::Headers headers;
    if (!options.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + options.api_key);
    }

    auto result = client.Post("/chat/completions", headers, body.dump(), "application/json");
    if (!result) {
      last_error = "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status == 200) {
      return parse_chat_response(result->body);
    }
    last_error = "HTTP " + std::to_string(result->status);
    if (!retryable_status(result->status)) break;
  }
  throw PolicyTransportError("policy request failed after retries: " + last_error);
}

}  // namespace oncv

#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace oncv {

class PolicyTransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TokenProb {
  std::string token;
  double prob = 0.0;
};

struct PolicyRequest {
  std::string conversation;  // full prompt + transcript so far
  std::vector<std::string> stop;
  double temperature = 0.8;
  int max_tokens = 512;
  // Routing metadata so deterministic policies can select continuations
  // without holding mutable state.
  std::string claim_id;
  int turn_index = 0;
  int group_index = 0;
};

struct PolicyResponse {
  std::string text;
  std::vector<TokenProb> token_probs;  // empty when the backend has none
};

class PolicyClient {
 public:
  virtual ~PolicyClient() = default;
  virtual PolicyResponse complete(const PolicyRequest& request) = 0;
};

// Canned continuations keyed by claim id, group index, and turn index.
// Stateless per call, so concurrent episodes see identical behavior.
//
// Fixture JSON:
//   {
//     "default": ["turn0 text", {"text": "turn1", "token_probs": [["tok", 0.9]]}],
//     "claims": {
//       "c1": ["..."],
//       "c2": {"groups": [["g0 turn0"], ["g1 turn0"]]}
//     }
//   }
class ScriptedPolicy : public PolicyClient {
 public:
  struct Continuation {
    std::string text;
    std::vector<TokenProb> token_probs;
  };
  using Script = std::vector<Continuation>;

  static ScriptedPolicy from_file(const std::string& path);
  static ScriptedPolicy from_json(std::string_view json_text);

  ScriptedPolicy() = default;

  void set_default_script(Script script);
  void set_claim_script(const std::string& claim_id, Script script);
  void set_claim_group_scripts(const std::string& claim_id, std::vector<Script> groups);

  PolicyResponse complete(const PolicyRequest& request) override;

 private:
  const Script* select(const std::string& claim_id, int group_index) const;

  Script default_script_;
  std::map<std::string, std::vector<Script>> claim_scripts_;
};

// Chat-completion HTTP backend with bounded retries and an optional
// request-rate ceiling. Token probabilities come from the logprobs field when
// the server provides one.
class HttpChatPolicy : public PolicyClient {
 public:
  struct Options {
    std::string base_url;  // e.g. "http://host:8000" or "https://host/v1"
    std::string model;
    std::string api_key;   // empty -> no Authorization header
    int timeout_ms = 30000;
    int max_retries = 3;
    int min_request_interval_ms = 0;  // rate ceiling; 0 disables
    bool request_logprobs = true;
  };

  explicit HttpChatPolicy(Options options);
  ~HttpChatPolicy() override;

  PolicyResponse complete(const PolicyRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace oncv

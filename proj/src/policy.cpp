#include "oncv/policy.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace oncv {

using json = nlohmann::json;

namespace {

ScriptedPolicy::Continuation continuation_from_json(const json& value) {
  ScriptedPolicy::Continuation continuation;
  if (value.is_string()) {
    continuation.text = value.get<std::string>();
    return continuation;
  }
  continuation.text = value.value("text", "");
  for (const json& pair : value.value("token_probs", json::array())) {
    continuation.token_probs.push_back(
        TokenProb{pair.at(0).get<std::string>(), pair.at(1).get<double>()});
  }
  return continuation;
}

ScriptedPolicy::Script script_from_json(const json& value) {
  ScriptedPolicy::Script script;
  for (const json& item : value) script.push_back(continuation_from_json(item));
  return script;
}

}  // namespace

ScriptedPolicy ScriptedPolicy::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw PolicyTransportError("cannot open scripted policy fixture: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

ScriptedPolicy ScriptedPolicy::from_json(std::string_view json_text) {
  json parsed;
  try {
    parsed = json::parse(json_text);
  } catch (const json::exception& ex) {
    throw PolicyTransportError(std::string("invalid scripted policy fixture: ") + ex.what());
  }
  ScriptedPolicy policy;
  if (parsed.contains("default")) {
    policy.set_default_script(script_from_json(parsed.at("default")));
  }
  const json claims = parsed.value("claims", json::object());
  for (const auto& [claim_id, value] : claims.items()) {
    if (value.is_object() && value.contains("groups")) {
      std::vector<Script> groups;
      for (const json& group : value.at("groups")) groups.push_back(script_from_json(group));
      policy.set_claim_group_scripts(claim_id, std::move(groups));
    } else {
      policy.set_claim_script(claim_id, script_from_json(value));
    }
  }
  return policy;
}

void ScriptedPolicy::set_default_script(Script script) { default_script_ = std::move(script); }

void ScriptedPolicy::set_claim_script(const std::string& claim_id, Script script) {
  claim_scripts_[claim_id] = {std::move(script)};
}

void ScriptedPolicy::set_claim_group_scripts(const std::string& claim_id,
                                             std::vector<Script> groups) {
  claim_scripts_[claim_id] = std::move(groups);
}

const ScriptedPolicy::Script* ScriptedPolicy::select(const std::string& claim_id,
                                                     int group_index) const {
  auto it = claim_scripts_.find(claim_id);
  if (it == claim_scripts_.end() || it->second.empty()) {
    return default_script_.empty() ? nullptr : &default_script_;
  }
  const std::size_t which = static_cast<std::size_t>(group_index) % it->second.size();
  return &it->second[which];
}

PolicyResponse ScriptedPolicy::complete(const PolicyRequest& request) {
  const Script* script = select(request.claim_id, request.group_index);
  if (!script || request.turn_index < 0 ||
      static_cast<std::size_t>(request.turn_index) >= script->size()) {
    return {};  // script exhausted: empty continuation
  }
  const Continuation& continuation = (*script)[static_cast<std::size_t>(request.turn_index)];
  return PolicyResponse{continuation.text, continuation.token_probs};
}

}  // namespace oncv

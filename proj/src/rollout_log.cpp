#include "oncv/rollout_log.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace oncv {

using json = nlohmann::json;

namespace {

json reward_to_json(const RewardBreakdown& reward) {
  return {{"format", reward.r_format},       {"evidence", reward.r_evidence},
          {"label", reward.r_label},         {"hit_rate", reward.hit_rate},
          {"validity_weight", reward.w_validity}, {"final", reward.r_final}};
}

RewardBreakdown reward_from_json(const json& value) {
  RewardBreakdown reward;
  reward.r_format = value.value("format", 0);
  reward.r_evidence = value.value("evidence", 0.0);
  reward.r_label = value.value("label", 0);
  reward.hit_rate = value.value("hit_rate", 0.0);
  reward.w_validity = value.value("validity_weight", 0.0);
  reward.r_final = value.value("final", 0.0);
  return reward;
}

json segments_to_json(const Trajectory& trajectory) {
  json out = json::array();
  for (const Segment& segment : trajectory.segments) {
    out.push_back({{"kind", std::string(segment_kind_name(segment.kind))},
                   {"body", segment.body},
                   {"span", {segment.body_begin, segment.body_end}},
                   {"origin", segment.origin == SegmentOrigin::EnvironmentInjected
                                  ? "environment"
                                  : "policy"}});
  }
  return out;
}

json turns_to_json(const std::vector<TurnRecord>& turns) {
  json out = json::array();
  for (const TurnRecord& turn : turns) {
    json hits = json::array();
    for (const RetrievalHit& hit : turn.retrieved) {
      hits.push_back({{"id", hit.id}, {"score", hit.score}});
    }
    out.push_back({{"index", turn.index},
                   {"forced", turn.forced},
                   {"searched", turn.searched},
                   {"query", turn.query},
                   {"retrieved", hits}});
  }
  return out;
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t hash) {
  for (unsigned char byte : data) {
    hash ^= byte;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string canonical_line(const std::string& raw) {
  json parsed;
  try {
    parsed = json::parse(raw);
  } catch (const json::exception& ex) {
    throw LogError(std::string("log line is not valid JSON: ") + ex.what());
  }
  parsed.erase("timing");
  return parsed.dump();
}

}  // namespace

std::string batch_entry_to_json_line(const BatchEntry& entry) {
  json gold_evidence = json::array();
  for (const std::string& id : entry.gold.evidence) gold_evidence.push_back(id);
  json gold = {{"label", std::string(label_name(entry.gold.label))},
               {"evidence", gold_evidence}};
  if (!entry.raw_label.empty() &&
      entry.raw_label != std::string(label_name(entry.gold.label))) {
    gold["raw_label"] = entry.raw_label;
  }

  json violations = json::array();
  for (FormatViolation violation : entry.result.verdict.violations) {
    violations.push_back(std::string(violation_name(violation)));
  }

  json line = {
      {"schema_version", 1},
      {"claim_id", entry.claim_id},
      {"dataset", entry.dataset},
      {"mode", std::string(rollout_mode_name(entry.result.mode))},
      {"group_index", entry.group_index},
      {"gold", gold},
      {"transcript", entry.result.transcript},
      {"segments", segments_to_json(entry.result.trajectory)},
      {"turns", turns_to_json(entry.result.turns)},
      {"reward", reward_to_json(entry.result.reward)},
      {"format_violations", violations},
      {"advantage", entry.advantage},
      {"forced_answer", entry.result.forced_answer},
      {"timing", {{"start_unix_ms", entry.start_unix_ms}, {"duration_ms", entry.duration_ms}}},
  };
  line["answer_probability"] = entry.result.answer_probability
                                   ? json(*entry.result.answer_probability)
                                   : json(nullptr);
  line["error"] = entry.result.error ? json(*entry.result.error) : json(nullptr);
  return line.dump();
}

void write_rollout_log(std::ostream& out, const std::vector<BatchEntry>& entries) {
  for (const BatchEntry& entry : entries) {
    out << batch_entry_to_json_line(entry) << '\n';
  }
}

void write_rollout_log(const std::string& path, const std::vector<BatchEntry>& entries) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw LogError("cannot write rollout log: " + path);
  }
  write_rollout_log(out, entries);
}

std::vector<LogRecord> read_rollout_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw LogError("cannot open rollout log: " + path);
  }
  std::vector<LogRecord> records;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json parsed;
    try {
      parsed = json::parse(line);
    } catch (const json::exception& ex) {
      throw LogError("log line " + std::to_string(line_number) +
                     " is not valid JSON: " + ex.what());
    }
    LogRecord record;
    record.claim_id = parsed.value("claim_id", "");
    record.dataset = parsed.value("dataset", "");
    record.mode = parsed.value("mode", "online") == "offline" ? RolloutMode::Offline
                                                              : RolloutMode::Online;
    record.group_index = parsed.value("group_index", 0);
    record.transcript = parsed.value("transcript", "");
    record.advantage = parsed.value("advantage", 0.0);
    if (parsed.contains("reward")) record.reward = reward_from_json(parsed.at("reward"));
    if (parsed.contains("answer_probability") && !parsed.at("answer_probability").is_null()) {
      record.answer_probability = parsed.at("answer_probability").get<double>();
    }
    if (parsed.contains("error") && !parsed.at("error").is_null()) {
      record.error = parsed.at("error").get<std::string>();
    }
    if (parsed.contains("gold")) {
      const json& gold = parsed.at("gold");
      if (auto label = parse_label(gold.value("label", ""))) {
        record.gold.label = *label;
      } else {
        throw LogError("log line " + std::to_string(line_number) +
                       " has unrecognized gold label");
      }
      for (const json& id : gold.value("evidence", json::array())) {
        record.gold.evidence.insert(id.get<std::string>());
      }
      record.raw_label = gold.value("raw_label", std::string(label_name(record.gold.label)));
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::string rollout_log_content_hash_from_lines(const std::vector<std::string>& lines) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (const std::string& line : lines) {
    hash = fnv1a(canonical_line(line), hash);
    hash = fnv1a("\n", hash);
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buffer);
}

std::string rollout_log_content_hash(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw LogError("cannot open rollout log: " + path);
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    lines.push_back(line);
  }
  return rollout_log_content_hash_from_lines(lines);
}

}  // namespace oncv

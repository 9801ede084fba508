#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "oncv/rollout.hpp"

namespace oncv {

class LogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One parsed line of the rollout log. Wall-clock data lives exclusively in
// the "timing" field so content hashing can exclude it.
struct LogRecord {
  std::string claim_id;
  std::string dataset;
  RolloutMode mode = RolloutMode::Online;
  GoldAnnotation gold;
  std::string raw_label;
  int group_index = 0;
  std::string transcript;
  RewardBreakdown reward;
  double advantage = 0.0;
  std::optional<double> answer_probability;
  std::optional<std::string> error;
};

std::string batch_entry_to_json_line(const BatchEntry& entry);

void write_rollout_log(std::ostream& out, const std::vector<BatchEntry>& entries);
void write_rollout_log(const std::string& path, const std::vector<BatchEntry>& entries);

std::vector<LogRecord> read_rollout_log(const std::string& path);

// FNV-1a over the canonicalized lines (JSON re-dumped with sorted keys, the
// "timing" field removed), as a lowercase hex string.
std::string rollout_log_content_hash(const std::string& path);
std::string rollout_log_content_hash_from_lines(const std::vector<std::string>& lines);

}  // namespace oncv

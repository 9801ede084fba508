#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oncv/corpus.hpp"
#include "oncv/dataset.hpp"
#include "oncv/policy.hpp"
#include "oncv/protocol.hpp"
#include "oncv/reward.hpp"

namespace oncv {

enum class RolloutMode { Online, Offline };

std::string_view rollout_mode_name(RolloutMode mode);

struct EpisodeConfig {
  int max_searches = 3;
  int max_turns = 4;  // must leave room for the answer turn
  int top_k = 3;
  double temperature = 0.8;
  int max_tokens = 512;
  bool require_plan = true;  // sensitivity knob for the plan rule

  FormatRules format_rules(RolloutMode mode) const;
  void validate() const;  // throws std::invalid_argument
};

struct TurnRecord {
  int index = 0;
  bool forced = false;    // the forced-answer continuation
  bool searched = false;  // a search was executed this turn
  std::string query;
  std::vector<RetrievalHit> retrieved;
};

struct EpisodeResult {
  std::string claim_id;
  RolloutMode mode = RolloutMode::Online;
  std::string transcript;
  Trajectory trajectory;
  FormatVerdict verdict;
  RewardBreakdown reward;
  std::vector<TurnRecord> turns;
  std::optional<double> answer_probability;
  bool forced_answer = false;
  std::optional<std::string> error;  // transport failure after client retries

  int searches_executed() const;
};

// Multi-turn loop: continuations are consumed up to the first </search> (the
// environment injects the information block and hands the transcript back) or
// the first </answer>. One forced-answer continuation is issued when the
// episode would otherwise end without an answer.
EpisodeResult run_online_episode(const ClaimSample& sample, PolicyClient& policy,
                                 const Retriever& retriever, const EpisodeConfig& config,
                                 int group_index = 0);

// Single-shot: evidence rides in the prompt, the policy only reasons and
// answers. Scored against the offline format rules.
EpisodeResult run_offline_episode(
    const ClaimSample& sample,
    const std::vector<std::pair<std::string, std::string>>& evidence, PolicyClient& policy,
    const EpisodeConfig& config, int group_index = 0);

// Gold evidence texts plus up to `distractors` top-ranked non-gold entries,
// sorted by id. Throws NotFoundError when a gold id is missing.
std::vector<std::pair<std::string, std::string>> build_evidence_bundle(
    const ClaimSample& sample, const Retriever& retriever, int distractors);

struct BatchOptions {
  RolloutMode mode = RolloutMode::Online;
  int group_size = 3;
  double epsilon_norm = 1e-6;
  int jobs = 0;  // 0 -> hardware concurrency
  int offline_distractors = 3;
};

struct BatchEntry {
  std::string claim_id;
  std::string dataset;
  GoldAnnotation gold;
  std::string raw_label;
  int group_index = 0;
  EpisodeResult result;
  double advantage = 0.0;
  std::int64_t start_unix_ms = 0;
  std::int64_t duration_ms = 0;
};

// group_size episodes per claim; advantages are normalized within each
// claim's group. Entries come back in (sample, group) order regardless of
// worker scheduling. Per-episode failures degrade that episode only.
std::vector<BatchEntry> run_batch(const std::vector<ClaimSample>& samples,
                                  PolicyClient& policy, const Retriever& retriever,
                                  const EpisodeConfig& config, const BatchOptions& options);

}  // namespace oncv

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "oncv/corpus.hpp"
#include "oncv/dataset.hpp"
#include "oncv/policy.hpp"
#include "oncv/rollout.hpp"

namespace oncv {

// One judged sample. keep is true only when the judge reproduces the gold
// label and the exact gold evidence set.
struct KeepDecision {
  bool keep = false;
  std::optional<Label> judge_label;
  EvidenceSet judge_evidence;
  std::string reason;
  std::string judge_transcript;
};

// Simulates an offline rollout with the judge given claim plus the evidence
// bundle. Throws PolicyTransportError on judge transport failure (the caller
// marks the sample undecided, never kept).
KeepDecision filter_sample(const ClaimSample& sample, PolicyClient& judge,
                           const std::vector<std::pair<std::string, std::string>>& bundle,
                           const EpisodeConfig& config = {});

enum class FilterOutcome { Kept, Dropped, Undecided };

struct FilterDecisionRecord {
  std::string claim_id;
  FilterOutcome outcome = FilterOutcome::Undecided;
  KeepDecision decision;
};

struct FilterReport {
  int input_count = 0;
  int kept = 0;
  int dropped = 0;
  int undecided = 0;
  std::optional<double> retention_rate;  // kept / input; null for empty input
};

struct FilterOptions {
  int distractors = 3;  // non-gold entries shown alongside the gold evidence
  int jobs = 0;
};

struct FilterResult {
  FilterReport report;
  std::vector<ClaimSample> kept_samples;              // input order
  std::vector<FilterDecisionRecord> decisions;        // input order
};

FilterResult run_filter(const std::vector<ClaimSample>& samples, PolicyClient& judge,
                        const CorpusIndex& corpus, const FilterOptions& options,
                        const EpisodeConfig& config = {});

}  // namespace oncv

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oncv/reward.hpp"

namespace oncv {

struct SampleScore {
  bool label_correct = false;
  bool veri_correct = false;   // label + all gold evidence retrieved (NEI relaxed)
  bool joint_correct = false;  // label + evidence exactly gold (NEI relaxed)
  double evidence_score = 0.0;
  bool covers_all_gold = false;
};

// NEI relaxation waives the evidence requirement when the gold label is NEI.
// An absent prediction scores all-false with evidence score 0.
SampleScore score_sample(const std::optional<ParsedAnswer>& pred, const GoldAnnotation& gold,
                         bool nei_relaxation = true);

struct MetricRow {
  int count = 0;
  double joint_acc = 0.0;
  double veri_acc = 0.0;
  double label_acc = 0.0;
  double evidence_score = 0.0;
  double cover_rate = 0.0;
};

struct ScoredSample {
  std::string dataset;
  Label gold_label = Label::Nei;
  bool gold_label_remapped = false;  // raw label was a non-canonical alias
  SampleScore score;
};

struct DatasetReport {
  MetricRow overall;
  std::map<Label, MetricRow> per_label;  // only labels present in the group
  bool has_remapped_labels = false;
};

struct EvaluationReport {
  MetricRow overall;
  std::map<std::string, DatasetReport> datasets;
  bool nei_relaxation = true;
};

EvaluationReport aggregate(const std::vector<ScoredSample>& samples, bool nei_relaxation);

std::string report_to_json(const EvaluationReport& report);

// Aligned-column text table: one row per dataset plus the overall row.
std::string report_table(const EvaluationReport& report);

}  // namespace oncv

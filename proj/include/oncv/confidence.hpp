#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "oncv/protocol.hpp"

namespace oncv {

enum class ConfidenceBucket { Low, Mid, High };

std::string_view bucket_name(ConfidenceBucket bucket);

// Low: p < 0.85. High: p > 0.95. Mid covers the closed band between
// (boundaries are exclusive on both sides).
ConfidenceBucket confidence_bucket(double p_label);

struct ConfidenceRecord {
  std::string claim_id;
  std::optional<Label> pred;  // absent when no answer was extracted
  Label gold = Label::Nei;
  std::optional<double> p_label;  // probability of the label word's first token
};

struct BucketCell {
  int count = 0;
  int correct = 0;

  double accuracy() const { return count == 0 ? 0.0 : static_cast<double>(correct) / count; }
};

struct BucketTable {
  // Keyed by (gold label, bucket); only populated cells appear.
  std::map<std::pair<Label, ConfidenceBucket>, BucketCell> cells;
  int excluded_without_probability = 0;
};

BucketTable bucket_records(const std::vector<ConfidenceRecord>& records);

struct PrfCell {
  int true_positive = 0;
  int false_positive = 0;
  int false_negative = 0;
  std::optional<double> precision;  // null when nothing was predicted as this label
  std::optional<double> recall;     // null when the label has no gold instances
};

// One-vs-rest per label. Records without a prediction count as false
// negatives for their gold label.
std::map<Label, PrfCell> precision_recall(const std::vector<ConfidenceRecord>& records);

std::string confidence_tables_json(const BucketTable& buckets,
                                   const std::map<Label, PrfCell>& prf);
std::string bucket_table_csv(const BucketTable& buckets);
std::string precision_recall_csv(const std::map<Label, PrfCell>& prf);

}  // namespace oncv

#include "oncv/confidence.hpp"

#include <array>

#include <nlohmann/json.hpp>

namespace oncv {

using json = nlohmann::json;

std::string_view bucket_name(ConfidenceBucket bucket) {
  switch (bucket) {
    case ConfidenceBucket::Low: return "low";
    case ConfidenceBucket::Mid: return "mid";
    case ConfidenceBucket::High: return "high";
  }
  return "mid";
}

ConfidenceBucket confidence_bucket(double p_label) {
  if (p_label < 0.85) return ConfidenceBucket::Low;
  if (p_label > 0.95) return ConfidenceBucket::High;
  return ConfidenceBucket::Mid;
}

BucketTable bucket_records(const std::vector<ConfidenceRecord>& records) {
  BucketTable table;
  for (const ConfidenceRecord& record : records) {
    if (!record.p_label) {
      ++table.excluded_without_probability;
      continue;
    }
    BucketCell& cell = table.cells[{record.gold, confidence_bucket(*record.p_label)}];
    ++cell.count;
    if (record.pred && *record.pred == record.gold) ++cell.correct;
  }
  return table;
}

std::map<Label, PrfCell> precision_recall(const std::vector<ConfidenceRecord>& records) {
  constexpr std::array<Label, 3> kLabels = {Label::Support, Label::Refute, Label::Nei};
  std::map<Label, PrfCell> out;
  for (Label label : kLabels) out[label];  // all three rows always present

  for (const ConfidenceRecord& record : records) {
    if (record.pred && *record.pred == record.gold) {
      ++out[record.gold].true_positive;
    } else {
      ++out[record.gold].false_negative;
      if (record.pred) ++out[*record.pred].false_positive;
    }
  }

  for (auto& [label, cell] : out) {
    const int predicted = cell.true_positive + cell.false_positive;
    const int gold = cell.true_positive + cell.false_negative;
    if (predicted > 0) {
      cell.precision = static_cast<double>(cell.true_positive) / predicted;
    }
    if (gold > 0) {
      cell.recall = static_cast<double>(cell.true_positive) / gold;
    }
  }
  return out;
}

std::string confidence_tables_json(const BucketTable& buckets,
                                   const std::map<Label, PrfCell>& prf) {
  json bucket_rows = json::array();
  for (const auto& [key, cell] : buckets.cells) {
    bucket_rows.push_back({{"gold_label", std::string(label_name(key.first))},
                           {"bucket", std::string(bucket_name(key.second))},
                           {"count", cell.count},
                           {"correct", cell.correct},
                           {"accuracy", cell.accuracy()}});
  }
  json prf_rows = json::object();
  for (const auto& [label, cell] : prf) {
    json row = {{"tp", cell.true_positive},
                {"fp", cell.false_positive},
                {"fn", cell.false_negative}};
    row["precision"] = cell.precision ? json(*cell.precision) : json(nullptr);
    row["recall"] = cell.recall ? json(*cell.recall) : json(nullptr);
    prf_rows[std::string(label_name(label))] = row;
  }
  const json out = {
      {"p_label_convention", "first_token"},
      {"excluded_without_probability", buckets.excluded_without_probability},
      {"buckets", bucket_rows},
      {"precision_recall", prf_rows},
  };
  return out.dump(2);
}

std::string bucket_table_csv(const BucketTable& buckets) {
  std::string out = "gold_label,bucket,count,correct,accuracy\n";
  for (const auto& [key, cell] : buckets.cells) {
    out += std::string(label_name(key.first)) + "," + std::string(bucket_name(key.second)) +
           "," + std::to_string(cell.count) + "," + std::to_string(cell.correct) + "," +
           json(cell.accuracy()).dump() + "\n";
  }
  return out;
}

std::string precision_recall_csv(const std::map<Label, PrfCell>& prf) {
  std::string out = "label,tp,fp,fn,precision,recall\n";
  for (const auto& [label, cell] : prf) {
    out += std::string(label_name(label)) + "," + std::to_string(cell.true_positive) + "," +
           std::to_string(cell.false_positive) + "," + std::to_string(cell.false_negative) +
           ",";
    out += cell.precision ? json(*cell.precision).dump() : "null";
    out += ",";
    out += cell.recall ? json(*cell.recall).dump() : "null";
    out += "\n";
  }
  return out;
}

}  // namespace oncv

#include "oncv/evaluation.hpp"

#include <algorithm>
#include <cstdio>

#include <nlohmann/json.hpp>

namespace oncv {

using json = nlohmann::json;

namespace {

bool is_subset(const EvidenceSet& inner, const EvidenceSet& outer) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

struct Accumulator {
  int count = 0;
  int joint = 0;
  int veri = 0;
  int label = 0;
  int covers = 0;
  double evidence = 0.0;

  void add(const SampleScore& score) {
    ++count;
    joint += score.joint_correct ? 1 : 0;
    veri += score.veri_correct ? 1 : 0;
    label += score.label_correct ? 1 : 0;
    covers += score.covers_all_gold ? 1 : 0;
    evidence += score.evidence_score;
  }

  MetricRow row() const {
    MetricRow out;
    out.count = count;
    if (count == 0) return out;
    const double n = static_cast<double>(count);
    out.joint_acc = joint / n;
    out.veri_acc = veri / n;
    out.label_acc = label / n;
    out.evidence_score = evidence / n;
    out.cover_rate = covers / n;
    return out;
  }
};

json row_to_json(const MetricRow& row) {
  return {{"count", row.count},
          {"joint_acc", row.joint_acc},
          {"veri_acc", row.veri_acc},
          {"label_acc", row.label_acc},
          {"evidence_score", row.evidence_score},
          {"cover_rate", row.cover_rate}};
}

}  // namespace

SampleScore score_sample(const std::optional<ParsedAnswer>& pred, const GoldAnnotation& gold,
                         bool nei_relaxation) {
  SampleScore score;
  if (!pred) return score;  // all-false, evidence score 0

  score.label_correct = pred->label == gold.label;
  score.covers_all_gold = is_subset(gold.evidence, pred->evidence);
  score.evidence_score = evidence_reward(pred->evidence, gold.evidence);

  const bool relaxed = nei_relaxation && gold.label == Label::Nei;
  score.veri_correct = score.label_correct && (score.covers_all_gold || relaxed);
  score.joint_correct =
      score.label_correct && (pred->evidence == gold.evidence || relaxed);
  return score;
}

EvaluationReport aggregate(const std::vector<ScoredSample>& samples, bool nei_relaxation) {
  EvaluationReport report;
  report.nei_relaxation = nei_relaxation;

  Accumulator overall;
  std::map<std::string, Accumulator> per_dataset;
  std::map<std::string, std::map<Label, Accumulator>> per_dataset_label;

  for (const ScoredSample& sample : samples) {
    overall.add(sample.score);
    per_dataset[sample.dataset].add(sample.score);
    per_dataset_label[sample.dataset][sample.gold_label].add(sample.score);
    if (sample.gold_label_remapped) {
      report.datasets[sample.dataset].has_remapped_labels = true;
    }
  }

  report.overall = overall.row();
  for (const auto& [dataset, accumulator] : per_dataset) {
    DatasetReport& out = report.datasets[dataset];
    out.overall = accumulator.row();
    for (const auto& [label, label_accumulator] : per_dataset_label[dataset]) {
      out.per_label[label] = label_accumulator.row();
    }
  }
  return report;
}

std::string report_to_json(const EvaluationReport& report) {
  json datasets = json::object();
  for (const auto& [name, dataset] : report.datasets) {
    json labels = json::object();
    for (const auto& [label, row] : dataset.per_label) {
      labels[std::string(label_name(label))] = row_to_json(row);
    }
    datasets[name] = {{"overall", row_to_json(dataset.overall)},
                      {"labels", labels},
                      {"has_remapped_labels", dataset.has_remapped_labels}};
  }
  const json out = {
      {"nei_relaxation", report.nei_relaxation},
      {"overall", row_to_json(report.overall)},
      {"datasets", datasets},
  };
  return out.dump(2);
}

std::string report_table(const EvaluationReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %8s %10s %10s %10s %10s %10s\n", "dataset", "n",
                "joint", "veri", "label", "evidence", "cover");
  out += line;
  auto emit = [&](const std::string& name, const MetricRow& row) {
    std::snprintf(line, sizeof(line), "%-16s %8d %9.2f%% %9.2f%% %9.2f%% %10.4f %9.2f%%\n",
                  name.c_str(), row.count, 100.0 * row.joint_acc, 100.0 * row.veri_acc,
                  100.0 * row.label_acc, row.evidence_score, 100.0 * row.cover_rate);
    out += line;
  };
  for (const auto& [name, dataset] : report.datasets) emit(name, dataset.overall);
  emit("overall", report.overall);
  return out;
}

}  // namespace oncv

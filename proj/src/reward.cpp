#include "oncv/reward.hpp"

#include <algorithm>
#include <iterator>

namespace oncv {
namespace {

std::size_t intersection_size(const EvidenceSet& a, const EvidenceSet& b) {
  std::size_t count = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia == *ib) {
      ++count;
      ++ia;
      ++ib;
    } else if (*ia < *ib) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return count;
}

}  // namespace

int format_reward(const FormatVerdict& verdict) { return verdict.ok ? 1 : 0; }

double evidence_reward(const EvidenceSet& pred, const EvidenceSet& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  const std::size_t inter = intersection_size(pred, gold);
  const std::size_t uni = pred.size() + gold.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

int label_reward(Label pred, Label gold) { return pred == gold ? 2 : 0; }

Validity validity_weight(Label gold_label, const EvidenceSet& pred_evidence,
                         const EvidenceSet& gold_evidence) {
  Validity out;
  const std::size_t gold_size = gold_evidence.size();
  const std::size_t hits = intersection_size(pred_evidence, gold_evidence);
  // Empty gold counts as fully hit; keeps h well-defined and is irrelevant for
  // the NEI branch anyway.
  out.hit_rate = gold_size == 0
                     ? 1.0
                     : static_cast<double>(hits) / static_cast<double>(gold_size);

  if (gold_label == Label::Nei) {
    out.weight = 1.0;
  } else if (gold_size == 0 || hits == gold_size) {
    out.weight = 1.0;
  } else if (2 * hits > gold_size) {  // strictly more than half
    out.weight = 0.5;
  } else {
    out.weight = 0.0;
  }
  return out;
}

RewardBreakdown final_reward(const Trajectory& trajectory, const GoldAnnotation& gold,
                             const FormatRules& rules) {
  RewardBreakdown out;
  const FormatVerdict verdict = validate_format(trajectory, rules);
  out.r_format = format_reward(verdict);

  static const EvidenceSet kEmpty;
  const EvidenceSet& pred_evidence =
      trajectory.answer ? trajectory.answer->evidence : kEmpty;
  out.r_evidence = evidence_reward(pred_evidence, gold.evidence);
  out.r_label = trajectory.answer ? label_reward(trajectory.answer->label, gold.label) : 0;

  const Validity validity = validity_weight(gold.label, pred_evidence, gold.evidence);
  out.hit_rate = validity.hit_rate;
  out.w_validity = validity.weight;

  out.r_final = out.r_label * out.w_validity + out.r_evidence + out.r_format;
  return out;
}

}  // namespace oncv

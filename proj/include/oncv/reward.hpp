#pragma once

#include "oncv/protocol.hpp"

namespace oncv {

struct GoldAnnotation {
  Label label = Label::Nei;
  EvidenceSet evidence;
};

struct RewardBreakdown {
  int r_format = 0;           // {0,1}
  double r_evidence = 0.0;    // Jaccard, [0,1]
  int r_label = 0;            // {0,2}
  double hit_rate = 0.0;      // |pred n gold| / |gold|, 1 when gold is empty
  double w_validity = 0.0;    // {0, 0.5, 1}
  double r_final = 0.0;       // r_label * w_validity + r_evidence + r_format
};

int format_reward(const FormatVerdict& verdict);

// |pred n gold| / |pred u gold|; both empty -> 1.0.
double evidence_reward(const EvidenceSet& pred, const EvidenceSet& gold);

int label_reward(Label pred, Label gold);

struct Validity {
  double weight = 0.0;
  double hit_rate = 0.0;
};

// Full credit needs every gold id hit; more than half hit earns 0.5; NEI gold
// is never gated. Gold empty counts as fully hit.
Validity validity_weight(Label gold_label, const EvidenceSet& pred_evidence,
                         const EvidenceSet& gold_evidence);

// Scores a Strict-parsed trajectory. An absent answer earns no label reward
// and contributes an empty evidence set.
RewardBreakdown final_reward(const Trajectory& trajectory, const GoldAnnotation& gold,
                             const FormatRules& rules = FormatRules::online());

}  // namespace oncv

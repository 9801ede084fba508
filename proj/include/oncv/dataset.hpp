#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "oncv/reward.hpp"

namespace oncv {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ClaimSample {
  std::string claim_id;
  std::string claim;
  GoldAnnotation gold;
  std::string dataset;
  std::string raw_label;  // original label string before canonicalization
};

// Line-delimited JSON:
//   {"claim_id": ..., "claim": ..., "gold_label": ..., "gold_evidence": [...],
//    "dataset": ...}
// Labels are canonicalized through the alias table; the original string is
// kept in raw_label.
std::vector<ClaimSample> load_dataset(const std::string& path);

void write_dataset(const std::string& path, const std::vector<ClaimSample>& samples);

}  // namespace oncv

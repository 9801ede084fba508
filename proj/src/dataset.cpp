#include "oncv/dataset.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace oncv {

using json = nlohmann::json;

std::vector<ClaimSample> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DatasetError("cannot open dataset file: " + path);
  }
  std::vector<ClaimSample> samples;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json parsed;
    try {
      parsed = json::parse(line);
    } catch (const json::exception& ex) {
      throw DatasetError("dataset line " + std::to_string(line_number) +
                         " is not valid JSON: " + ex.what());
    }

    ClaimSample sample;
    sample.claim_id = parsed.value("claim_id", "");
    sample.claim = parsed.value("claim", "");
    sample.dataset = parsed.value("dataset", "");
    sample.raw_label = parsed.value("gold_label", "");
    if (sample.claim_id.empty() || sample.claim.empty()) {
      throw DatasetError("dataset line " + std::to_string(line_number) +
                         " needs claim_id and claim");
    }
    auto label = parse_label(sample.raw_label);
    if (!label) {
      throw DatasetError("dataset line " + std::to_string(line_number) +
                         " has unrecognized gold_label '" + sample.raw_label + "'");
    }
    sample.gold.label = *label;
    for (const json& id : parsed.value("gold_evidence", json::array())) {
      const std::string value = id.get<std::string>();
      if (!valid_evidence_id(value)) {
        throw DatasetError("dataset line " + std::to_string(line_number) +
                           " has invalid evidence id '" + value + "'");
      }
      sample.gold.evidence.insert(value);
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

void write_dataset(const std::string& path, const std::vector<ClaimSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DatasetError("cannot write dataset file: " + path);
  }
  for (const ClaimSample& sample : samples) {
    json evidence = json::array();
    for (const std::string& id : sample.gold.evidence) evidence.push_back(id);
    const json line = {
        {"claim_id", sample.claim_id},
        {"claim", sample.claim},
        {"gold_label",
         sample.raw_label.empty() ? std::string(label_name(sample.gold.label))
                                  : sample.raw_label},
        {"gold_evidence", evidence},
        {"dataset", sample.dataset},
    };
    out << line.dump() << '\n';
  }
}

}  // namespace oncv

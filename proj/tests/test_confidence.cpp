#include <doctest.h>

#include "oncv/confidence.hpp"

using namespace oncv;

namespace {

ConfidenceRecord record(Label pred, Label gold, std::optional<double> p) {
  ConfidenceRecord out;
  out.pred = pred;
  out.gold = gold;
  out.p_label = p;
  return out;
}

}  // namespace

TEST_CASE("bucket boundaries are strict inequalities") {
  CHECK(confidence_bucket(0.99) == ConfidenceBucket::High);
  CHECK(confidence_bucket(0.96) == ConfidenceBucket::High);
  CHECK(confidence_bucket(0.95) == ConfidenceBucket::Mid);
  CHECK(confidence_bucket(0.85) == ConfidenceBucket::Mid);
  CHECK(confidence_bucket(0.90) == ConfidenceBucket::Mid);
  CHECK(confidence_bucket(0.849) == ConfidenceBucket::Low);
  CHECK(confidence_bucket(0.1) == ConfidenceBucket::Low);
}

TEST_CASE("every record with a probability falls in exactly one bucket") {
  for (double p = 0.01; p < 1.0; p += 0.005) {
    int hits = 0;
    const ConfidenceBucket bucket = confidence_bucket(p);
    for (ConfidenceBucket candidate :
         {ConfidenceBucket::Low, ConfidenceBucket::Mid, ConfidenceBucket::High}) {
      if (candidate == bucket) ++hits;
    }
    CHECK(hits == 1);
  }
}

TEST_CASE("bucket table counts and accuracy") {
  std::vector<ConfidenceRecord> records = {
      record(Label::Support, Label::Support, 0.99),
      record(Label::Refute, Label::Support, 0.97),
      record(Label::Support, Label::Support, 0.5),
      record(Label::Nei, Label::Nei, std::nullopt),
  };
  const BucketTable table = bucket_records(records);
  CHECK(table.excluded_without_probability == 1);

  const BucketCell& high = table.cells.at({Label::Support, ConfidenceBucket::High});
  CHECK(high.count == 2);
  CHECK(high.correct == 1);
  CHECK(high.accuracy() == 0.5);

  const BucketCell& low = table.cells.at({Label::Support, ConfidenceBucket::Low});
  CHECK(low.count == 1);
  CHECK(low.accuracy() == 1.0);
}

TEST_CASE("perfect predictions give unit precision and recall") {
  std::vector<ConfidenceRecord> records = {
      record(Label::Support, Label::Support, 0.9),
      record(Label::Refute, Label::Refute, 0.9),
      record(Label::Nei, Label::Nei, 0.9),
  };
  const auto prf = precision_recall(records);
  for (const auto& [label, cell] : prf) {
    REQUIRE(cell.precision.has_value());
    REQUIRE(cell.recall.has_value());
    CHECK(*cell.precision == 1.0);
    CHECK(*cell.recall == 1.0);
  }
}

TEST_CASE("a never-predicted label has null precision and zero recall") {
  std::vector<ConfidenceRecord> records = {
      record(Label::Support, Label::Nei, 0.9),
      record(Label::Refute, Label::Nei, 0.9),
      record(Label::Support, Label::Support, 0.9),
  };
  const auto prf = precision_recall(records);
  const PrfCell& nei = prf.at(Label::Nei);
  CHECK_FALSE(nei.precision.has_value());
  REQUIRE(nei.recall.has_value());
  CHECK(*nei.recall == 0.0);
}

TEST_CASE("three-class confusion matrix matches the hand computation") {
  // Confusion (rows gold, columns pred):
  //   SUPPORT: 3 SUPPORT, 1 REFUTE
  //   REFUTE:  1 SUPPORT, 2 REFUTE, 1 NEI
  //   NEI:     1 REFUTE, 2 NEI
  std::vector<ConfidenceRecord> records;
  auto add = [&](Label pred, Label gold, int n) {
    for (int i = 0; i < n; ++i) records.push_back(record(pred, gold, 0.9));
  };
  add(Label::Support, Label::Support, 3);
  add(Label::Refute, Label::Support, 1);
  add(Label::Support, Label::Refute, 1);
  add(Label::Refute, Label::Refute, 2);
  add(Label::Nei, Label::Refute, 1);
  add(Label::Refute, Label::Nei, 1);
  add(Label::Nei, Label::Nei, 2);

  const auto prf = precision_recall(records);
  CHECK(*prf.at(Label::Support).precision == doctest::Approx(3.0 / 4.0));
  CHECK(*prf.at(Label::Support).recall == doctest::Approx(3.0 / 4.0));
  CHECK(*prf.at(Label::Refute).precision == doctest::Approx(2.0 / 4.0));
  CHECK(*prf.at(Label::Refute).recall == doctest::Approx(2.0 / 4.0));
  CHECK(*prf.at(Label::Nei).precision == doctest::Approx(2.0 / 3.0));
  CHECK(*prf.at(Label::Nei).recall == doctest::Approx(2.0 / 3.0));

  // Micro recall equals overall label accuracy: 7 correct of 11.
  int tp = 0, total = 0;
  for (const auto& [label, cell] : prf) {
    tp += cell.true_positive;
    total += cell.true_positive + cell.false_negative;
  }
  CHECK(total == 11);
  CHECK(static_cast<double>(tp) / total == doctest::Approx(7.0 / 11.0));
}

TEST_CASE("records without predictions count as misses") {
  std::vector<ConfidenceRecord> records = {
      {"c1", std::nullopt, Label::Support, std::nullopt},
      record(Label::Support, Label::Support, 0.9),
  };
  const auto prf = precision_recall(records);
  const PrfCell& support = prf.at(Label::Support);
  CHECK(support.true_positive == 1);
  CHECK(support.false_negative == 1);
  CHECK(*prf.at(Label::Support).recall == 0.5);
}

TEST_CASE("csv and json renderings carry the tables") {
  std::vector<ConfidenceRecord> records = {
      record(Label::Support, Label::Support, 0.99),
      record(Label::Nei, Label::Refute, 0.4),
  };
  const BucketTable buckets = bucket_records(records);
  const auto prf = precision_recall(records);

  const std::string json_text = confidence_tables_json(buckets, prf);
  CHECK(json_text.find("\"p_label_convention\": \"first_token\"") != std::string::npos);
  CHECK(json_text.find("\"buckets\"") != std::string::npos);

  const std::string bucket_csv = bucket_table_csv(buckets);
  CHECK(bucket_csv.find("gold_label,bucket,count,correct,accuracy") == 0);
  CHECK(bucket_csv.find("SUPPORT,high,1,1,1.0") != std::string::npos);

  const std::string prf_csv = precision_recall_csv(prf);
  CHECK(prf_csv.find("label,tp,fp,fn,precision,recall") == 0);
  CHECK(prf_csv.find("null") != std::string::npos);  // never-predicted REFUTE row
}

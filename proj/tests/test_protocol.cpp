#include <doctest.h>

#include <random>
#include <stdexcept>

#include "oncv/protocol.hpp"
#include "test_support.hpp"

using namespace oncv;

namespace {

const std::string kHappyTranscript =
    "<plan>P</plan><search>q</search><information>[[e_1]]: t</information>"
    "<think>r</think><answer>Label: SUPPORT\nEvidence: [[e_1]]</answer>";

std::vector<FormatViolation> violations_of(const std::string& raw,
                                           FormatRules rules = FormatRules::online()) {
  return validate_format(parse_transcript(raw, ParseMode::Strict), rules).violations;
}

}  // namespace

TEST_CASE("parse_transcript extracts the full happy-path trajectory") {
  const Trajectory t = parse_transcript(kHappyTranscript, ParseMode::Strict);
  REQUIRE(t.segments.size() == 5);
  CHECK(t.segments[0].kind == SegmentKind::Plan);
  CHECK(t.segments[1].kind == SegmentKind::Search);
  CHECK(t.segments[2].kind == SegmentKind::Information);
  CHECK(t.segments[2].origin == SegmentOrigin::EnvironmentInjected);
  CHECK(t.segments[3].kind == SegmentKind::Think);
  CHECK(t.segments[4].kind == SegmentKind::Answer);
  CHECK(t.search_count == 1);
  REQUIRE(t.answer.has_value());
  CHECK(t.answer->label == Label::Support);
  CHECK(t.answer->evidence == EvidenceSet{"e_1"});
  CHECK(t.parse_violations.empty());
}

TEST_CASE("segment bodies exclude delimiters and carry byte spans") {
  const std::string raw = "<plan>abc</plan>";
  const Trajectory t = parse_transcript(raw, ParseMode::Strict);
  REQUIRE(t.segments.size() == 1);
  CHECK(t.segments[0].body == "abc");
  CHECK(t.segments[0].body_begin == 6);
  CHECK(t.segments[0].body_end == 9);
  CHECK(raw.substr(t.segments[0].body_begin,
                   t.segments[0].body_end - t.segments[0].body_begin) == "abc");
}

TEST_CASE("empty input parses to an empty trajectory") {
  const Trajectory t = parse_transcript("", ParseMode::Strict);
  CHECK(t.segments.empty());
  CHECK(t.search_count == 0);
  CHECK_FALSE(t.answer.has_value());
}

TEST_CASE("two answer blocks: lenient takes the last, strict records the violation") {
  const std::string raw =
      "<plan>p</plan>"
      "<answer>Label: SUPPORT\nEvidence: [[e_1]]</answer>"
      "<answer>Label: REFUTE\nEvidence: [[e_2]]</answer>";

  const Trajectory lenient = parse_transcript(raw, ParseMode::Lenient);
  REQUIRE(lenient.answer.has_value());
  CHECK(lenient.answer->label == Label::Refute);
  CHECK(lenient.answer->evidence == EvidenceSet{"e_2"});

  const Trajectory strict = parse_transcript(raw, ParseMode::Strict);
  const FormatVerdict verdict = validate_format(strict);
  CHECK_FALSE(verdict.ok);
  CHECK(verdict.has(FormatViolation::MultipleAnswers));
  CHECK(verdict.violations == std::vector{FormatViolation::MultipleAnswers});
}

TEST_CASE("validate_format accepts the well-formed trajectory") {
  const FormatVerdict verdict = validate_format(parse_transcript(kHappyTranscript, ParseMode::Strict));
  CHECK(verdict.ok);
  CHECK(verdict.violations.empty());
}

TEST_CASE("information not following a search is self-emitted") {
  const std::string raw =
      "<plan>p</plan>"
      "<information>[[e_1]]: forged</information>"
      "<answer>Label: SUPPORT\nEvidence:</answer>";
  CHECK(violations_of(raw) == std::vector{FormatViolation::SelfEmittedInformation});
}

TEST_CASE("each violation code has a minimal fixture triggering exactly it") {
  CHECK(violations_of("<answer>Label: SUPPORT\nEvidence:</answer>") ==
        std::vector{FormatViolation::MissingPlan});
  CHECK(violations_of("<plan>p</plan><foo>x</foo><answer>Label: SUPPORT\nEvidence:</answer>") ==
        std::vector{FormatViolation::UnknownTag});
  CHECK(violations_of("<plan>p</plan><information>[[e_1]]: x</information>"
                      "<answer>Label: SUPPORT\nEvidence:</answer>") ==
        std::vector{FormatViolation::SelfEmittedInformation});
  CHECK(violations_of("<plan>p</plan><answer>Label: SUPPORT\nEvidence:</answer>"
                      "<answer>Label: REFUTE\nEvidence:</answer>") ==
        std::vector{FormatViolation::MultipleAnswers});
  CHECK(violations_of("<plan>p</plan><answer>I think yes</answer>") ==
        std::vector{FormatViolation::MalformedAnswer});
  CHECK(violations_of("<plan>p</plan> hello <answer>Label: SUPPORT\nEvidence:</answer>") ==
        std::vector{FormatViolation::TextOutsideTags});
  CHECK(violations_of("<plan>p</plan>") == std::vector{FormatViolation::MissingAnswer});
}

TEST_CASE("an answer that is not terminal counts as missing the terminal answer") {
  const std::string raw =
      "<plan>p</plan><answer>Label: SUPPORT\nEvidence:</answer><think>t</think>";
  CHECK(violations_of(raw) == std::vector{FormatViolation::MissingAnswer});
}

TEST_CASE("whitespace between tags is fine; nested tags are violations") {
  const std::string spaced =
      "<plan>p</plan>\n\n  <answer>Label: SUPPORT\nEvidence:</answer>\n";
  CHECK(validate_format(parse_transcript(spaced, ParseMode::Strict)).ok);

  const std::string nested = "<plan>p</plan><answer><think>x</think>Label: SUPPORT\n"
                             "Evidence:</answer>";
  const auto violations = violations_of(nested);
  CHECK(std::find(violations.begin(), violations.end(), FormatViolation::UnknownTag) !=
        violations.end());

  const std::string nested_info =
      "<plan>p</plan><think>a<information>[[x]]: y</information></think>"
      "<answer>Label: SUPPORT\nEvidence:</answer>";
  const auto info_violations = violations_of(nested_info);
  CHECK(std::find(info_violations.begin(), info_violations.end(),
                  FormatViolation::SelfEmittedInformation) != info_violations.end());
}

TEST_CASE("missing answer verdict for a trajectory without an answer block") {
  const std::string raw = "<plan>p</plan><search>q</search>"
                          "<information>[[e]]: t</information><think>r</think>";
  const FormatVerdict verdict = validate_format(parse_transcript(raw, ParseMode::Strict));
  CHECK_FALSE(verdict.ok);
  CHECK(verdict.has(FormatViolation::MissingAnswer));
}

TEST_CASE("parse_answer_block handles labels, aliases, and dedup") {
  SUBCASE("two evidence ids") {
    const auto answer = parse_answer_block("Label: REFUTE\nEvidence: [[e_2]], [[e_7]]");
    REQUIRE(answer.has_value());
    CHECK(answer->label == Label::Refute);
    CHECK(answer->evidence == EvidenceSet{"e_2", "e_7"});
  }
  SUBCASE("empty evidence is legal") {
    const auto answer = parse_answer_block("Label: NOT ENOUGH INFO\nEvidence:");
    REQUIRE(answer.has_value());
    CHECK(answer->label == Label::Nei);
    CHECK(answer->evidence.empty());
  }
  SUBCASE("duplicates collapse") {
    const auto answer = parse_answer_block("Label: SUPPORT\nEvidence: [[e_1]], [[e_1]]");
    REQUIRE(answer.has_value());
    CHECK(answer->evidence == EvidenceSet{"e_1"});
  }
  SUBCASE("no label means no answer") {
    CHECK_FALSE(parse_answer_block("Evidence: [[e_1]]").has_value());
  }
}

TEST_CASE("label aliases canonicalize; serialization emits canonical names") {
  CHECK(parse_label("SUPPORTS") == Label::Support);
  CHECK(parse_label("supported") == Label::Support);
  CHECK(parse_label("REFUTES") == Label::Refute);
  CHECK(parse_label("contradict") == Label::Refute);
  CHECK(parse_label("Not Enough Info") == Label::Nei);
  CHECK(parse_label("NOT SUPPORTED") == Label::Nei);
  CHECK(parse_label("nei") == Label::Nei);
  CHECK_FALSE(parse_label("MAYBE").has_value());
  CHECK(label_name(Label::Support) == "SUPPORT");
  CHECK(label_name(Label::Nei) == "NOT ENOUGH INFO");
}

TEST_CASE("render_information_block emits the exact canonical layout") {
  CHECK(render_information_block({{"e_1", "A"}, {"e_2", "B"}}) ==
        "<information>\n[[e_1]]: A\n[[e_2]]: B\n</information>");
  CHECK(render_information_block({{"e_9", "x"}}) == "<information>\n[[e_9]]: x\n</information>");
  CHECK_THROWS_AS(render_information_block({{"e_1", "A"}, {"e_1", "B"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(render_information_block({}), std::invalid_argument);
  CHECK_THROWS_AS(render_information_block({{"bad id", "A"}}), std::invalid_argument);
}

TEST_CASE("information block round-trips through the parser") {
  const std::vector<std::pair<std::string, std::string>> entries = {
      {"e_1", "First fact."}, {"e_2", "Second fact."}};
  const std::string block = render_information_block(entries);
  const Trajectory t = parse_transcript("<search>q</search>" + block, ParseMode::Strict);
  REQUIRE(t.segments.size() == 2);
  CHECK(t.segments[1].kind == SegmentKind::Information);
  CHECK(t.segments[1].origin == SegmentOrigin::EnvironmentInjected);
  CHECK(parse_information_entries(t.segments[1].body) == entries);
}

TEST_CASE("lenient mode accepts a trailing unclosed answer block") {
  const std::string raw = "<plan>p</plan><answer>Label: SUPPORT\nEvidence: [[e_3]]";
  const Trajectory lenient = parse_transcript(raw, ParseMode::Lenient);
  REQUIRE(lenient.answer.has_value());
  CHECK(lenient.answer->label == Label::Support);
  CHECK(lenient.answer->evidence == EvidenceSet{"e_3"});

  const Trajectory strict = parse_transcript(raw, ParseMode::Strict);
  CHECK_FALSE(strict.answer.has_value());
  const FormatVerdict verdict = validate_format(strict);
  CHECK(verdict.has(FormatViolation::TextOutsideTags));
  CHECK(verdict.has(FormatViolation::MissingAnswer));
}

TEST_CASE("offline rules: plan and search are undeclared, information is forged") {
  const std::string offline_ok = "<think>reasoning</think>"
                                 "<answer>Label: REFUTE\nEvidence: [[e_1]]</answer>";
  CHECK(validate_format(parse_transcript(offline_ok, ParseMode::Strict),
                        FormatRules::offline())
            .ok);

  const std::string with_search =
      "<think>a</think><search>q</search><information>[[x]]: y</information>"
      "<answer>Label: REFUTE\nEvidence:</answer>";
  const FormatVerdict verdict = validate_format(
      parse_transcript(with_search, ParseMode::Strict), FormatRules::offline());
  CHECK(verdict.has(FormatViolation::UnknownTag));
  CHECK(verdict.has(FormatViolation::SelfEmittedInformation));

  // The same transcript is fine online.
  const std::string online_equivalent =
      "<plan>p</plan><search>q</search><information>[[x]]: y</information>"
      "<think>a</think><answer>Label: REFUTE\nEvidence:</answer>";
  CHECK(validate_format(parse_transcript(online_equivalent, ParseMode::Strict)).ok);
}

TEST_CASE("round-trip: serialize -> parse -> serialize is byte-identical") {
  std::mt19937 rng(12345);
  for (int i = 0; i < 50; ++i) {
    const auto fixture = oncv::testing::random_trajectory(rng, i % 2 == 1);
    const std::string text = serialize_transcript(fixture.segments);
    const Trajectory parsed = parse_transcript(text, ParseMode::Strict);
    REQUIRE(parsed.segments.size() == fixture.segments.size());
    for (std::size_t s = 0; s < fixture.segments.size(); ++s) {
      CHECK(parsed.segments[s].kind == fixture.segments[s].kind);
      CHECK(parsed.segments[s].body == fixture.segments[s].body);
    }
    CHECK(serialize_transcript(parsed.segments) == text);
  }
}

TEST_CASE("strict is a subset of lenient: ok transcripts parse identically") {
  std::mt19937 rng(777);
  for (int i = 0; i < 50; ++i) {
    const auto fixture = oncv::testing::random_trajectory(rng, false);
    const std::string text = serialize_transcript(fixture.segments);
    const Trajectory strict = parse_transcript(text, ParseMode::Strict);
    if (!validate_format(strict).ok) continue;
    const Trajectory lenient = parse_transcript(text, ParseMode::Lenient);
    REQUIRE(strict.segments.size() == lenient.segments.size());
    for (std::size_t s = 0; s < strict.segments.size(); ++s) {
      CHECK(strict.segments[s].kind == lenient.segments[s].kind);
      CHECK(strict.segments[s].body == lenient.segments[s].body);
    }
    CHECK(strict.answer == lenient.answer);
    CHECK(strict.search_count == lenient.search_count);
  }
}

TEST_CASE("dedup idempotence: repeating an evidence token never changes the set") {
  std::mt19937 rng(424242);
  std::uniform_int_distribution<int> id_count(0, 5);
  std::uniform_int_distribution<int> id_value(0, 9);
  for (int i = 0; i < 100; ++i) {
    std::string evidence_line = "Evidence:";
    std::vector<std::string> ids;
    const int n = id_count(rng);
    for (int j = 0; j < n; ++j) {
      ids.push_back("e_" + std::to_string(id_value(rng)));
      evidence_line += " [[" + ids.back() + "]],";
    }
    const std::string body = "Label: SUPPORT\n" + evidence_line;
    const auto base = parse_answer_block(body);
    REQUIRE(base.has_value());
    // Repeat an arbitrary token; the set must not change.
    const std::string repeated =
        body + (ids.empty() ? std::string() : " [[" + ids.front() + "]]");
    const auto again = parse_answer_block(repeated);
    REQUIRE(again.has_value());
    CHECK(base->evidence == again->evidence);
  }
}

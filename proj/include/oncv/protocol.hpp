#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace oncv {

// Three-way verdict space. Parsing accepts dataset surface aliases
// (SUPPORTS/SUPPORTED, REFUTES/CONTRADICT, NOT ENOUGH INFO/NOT SUPPORTED,
// case-insensitive); serialization always emits the canonical form.
enum class Label { Support, Refute, Nei };

std::optional<Label> parse_label(std::string_view text);
std::string_view label_name(Label label);

// Evidence ids are opaque strings: non-empty, no whitespace, exact equality.
using EvidenceSet = std::set<std::string>;

bool valid_evidence_id(std::string_view id);

enum class SegmentKind { Plan, Search, Information, Think, Answer };
enum class SegmentOrigin { PolicyEmitted, EnvironmentInjected };

std::string_view segment_kind_name(SegmentKind kind);
std::optional<SegmentKind> segment_kind_from_name(std::string_view name);

struct Segment {
  SegmentKind kind;
  std::string body;  // text between the tags, delimiters excluded
  std::size_t body_begin = 0;  // byte offsets into the raw transcript
  std::size_t body_end = 0;
  SegmentOrigin origin = SegmentOrigin::PolicyEmitted;
};

struct ParsedAnswer {
  Label label = Label::Nei;
  EvidenceSet evidence;  // deduplicated at parse

  friend bool operator==(const ParsedAnswer&, const ParsedAnswer&) = default;
};

enum class FormatViolation {
  MissingPlan,
  UnknownTag,
  SelfEmittedInformation,
  MultipleAnswers,
  MalformedAnswer,
  TextOutsideTags,
  MissingAnswer,
};

std::string_view violation_name(FormatViolation violation);

struct FormatVerdict {
  bool ok = true;
  std::vector<FormatViolation> violations;  // sorted, unique; ok <=> empty

  bool has(FormatViolation v) const;
};

enum class ParseMode { Strict, Lenient };

struct Trajectory {
  std::string claim;
  std::vector<Segment> segments;
  std::optional<ParsedAnswer> answer;  // corresponds to the final answer block
  int search_count = 0;
  // Grammar violations recorded while parsing in Strict mode (unknown tags,
  // non-whitespace text outside tags, nested tags). Structural rules are
  // checked later by validate_format.
  std::vector<FormatViolation> parse_violations;
};

// Never aborts: unparseable regions become violations (Strict) or are skipped
// (Lenient). Lenient mode additionally accepts a trailing unclosed <answer>
// block and takes the last answer block with a readable label; Strict mode
// reads the answer only from the final <answer> segment.
Trajectory parse_transcript(std::string_view raw, ParseMode mode);
Trajectory parse_transcript(std::string_view raw, ParseMode mode, std::string claim);

// Which protocol the transcript is held against. The online protocol declares
// plan/search/information/think/answer; the offline one only think/answer
// (evidence arrives in the prompt, so any information block is self-emitted).
struct FormatRules {
  bool require_plan = true;
  bool allow_plan = true;
  bool allow_search = true;

  static FormatRules online() { return {true, true, true}; }
  static FormatRules offline() { return {false, false, false}; }
};

FormatVerdict validate_format(const Trajectory& trajectory,
                              const FormatRules& rules = FormatRules::online());

// Extracts (label, evidence ids) from an answer body. Returns nullopt when no
// label line is readable. Evidence ids are matched by the [[...]] delimiters
// and deduplicated; an empty evidence list is legal.
std::optional<ParsedAnswer> parse_answer_block(std::string_view body);

// Strict well-formedness: exactly a label line with a known label followed by
// an evidence line holding only [[id]] tokens and separators.
bool answer_body_well_formed(std::string_view body);

// "<information>\n[[id]]: text\n...\n</information>". Rejects duplicate or
// invalid ids and embedded newlines (throws std::invalid_argument).
std::string render_information_block(
    const std::vector<std::pair<std::string, std::string>>& entries);

// Inverse of render_information_block for well-formed bodies: one
// "[[id]]: text" pair per line, unparseable lines skipped.
std::vector<std::pair<std::string, std::string>> parse_information_entries(
    std::string_view body);

// Canonical transcript text: "<tag>body</tag>" per segment, joined by "\n".
std::string serialize_transcript(const std::vector<Segment>& segments);

}  // namespace oncv

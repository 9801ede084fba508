#include "oncv/protocol.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <stdexcept>

namespace oncv {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

std::string_view trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return text.substr(begin, end - begin);
}

// Uppercases and collapses whitespace runs so "not  enough info" matches.
std::string normalize_label_key(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(text)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

struct TagToken {
  bool closing = false;
  std::string_view name;
  std::size_t begin = 0;  // offset of '<'
  std::size_t end = 0;    // one past '>'
};

// Matches </?name> at pos; pos must point at '<'.
std::optional<TagToken> match_tag(std::string_view raw, std::size_t pos) {
  std::size_t cursor = pos + 1;
  bool closing = false;
  if (cursor < raw.size() && raw[cursor] == '/') {
    closing = true;
    ++cursor;
  }
  if (cursor >= raw.size() || !is_name_start(raw[cursor])) return std::nullopt;
  std::size_t name_begin = cursor;
  while (cursor < raw.size() && is_name_char(raw[cursor])) ++cursor;
  if (cursor >= raw.size() || raw[cursor] != '>') return std::nullopt;
  return TagToken{closing, raw.substr(name_begin, cursor - name_begin), pos, cursor + 1};
}

std::optional<TagToken> find_tag(std::string_view raw, std::size_t from) {
  for (std::size_t pos = raw.find('<', from); pos != std::string_view::npos;
       pos = raw.find('<', pos + 1)) {
    if (auto tag = match_tag(raw, pos)) return tag;
  }
  return std::nullopt;
}

// Offset of the first "</name>" at or after `from`, npos when absent.
std::size_t find_close(std::string_view raw, std::size_t from, std::string_view name) {
  std::string needle = "</";
  needle.append(name);
  needle.push_back('>');
  return raw.find(needle, from);
}

bool all_whitespace(std::string_view text) {
  return std::all_of(text.begin(), text.end(), is_space);
}

// Nested tags inside a segment body break the flat grammar. A nested
// <information> is a forgery attempt and keeps its dedicated code.
void scan_body_tags(std::string_view body, std::set<FormatViolation>& out) {
  std::size_t pos = 0;
  while (auto tag = find_tag(body, pos)) {
    if (tag->name == "information") {
      out.insert(FormatViolation::SelfEmittedInformation);
    } else {
      out.insert(FormatViolation::UnknownTag);
    }
    pos = tag->end;
  }
}

bool starts_with_ci(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::toupper(static_cast<unsigned char>(text[i])) !=
        std::toupper(static_cast<unsigned char>(prefix[i])))
      return false;
  }
  return true;
}

// Returns the text after "label :"-style prefixes, or nullopt.
std::optional<std::string_view> strip_field_prefix(std::string_view line,
                                                   std::string_view field) {
  line = trim(line);
  if (!starts_with_ci(line, field)) return std::nullopt;
  std::string_view rest = line.substr(field.size());
  std::size_t i = 0;
  while (i < rest.size() && is_space(rest[i])) ++i;
  if (i >= rest.size() || rest[i] != ':') return std::nullopt;
  return rest.substr(i + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(begin));
      break;
    }
    lines.push_back(text.substr(begin, end - begin));
    begin = end + 1;
  }
  return lines;
}

// Scans `text` for [[...]] tokens, inserting the trimmed ids. Returns false
// if anything besides tokens, commas, and whitespace is present or a token
// holds an invalid id.
bool collect_evidence_tokens(std::string_view text, EvidenceSet& out) {
  bool clean = true;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (is_space(text[pos]) || text[pos] == ',') {
      ++pos;
      continue;
    }
    std::size_t open = text.find("[[", pos);
    if (open != pos) clean = false;
    if (open == std::string_view::npos) break;
    std::size_t close = text.find("]]", open + 2);
    if (close == std::string_view::npos) {
      clean = false;
      break;
    }
    std::string_view id = trim(text.substr(open + 2, close - open - 2));
    if (valid_evidence_id(id)) {
      out.insert(std::string(id));
    } else {
      clean = false;
    }
    pos = close + 2;
  }
  return clean;
}

std::vector<FormatViolation> sorted_unique(const std::set<FormatViolation>& violations) {
  return {violations.begin(), violations.end()};
}

}  // namespace

std::optional<Label> parse_label(std::string_view text) {
  const std::string key = normalize_label_key(text);
  if (key == "SUPPORT" || key == "SUPPORTS" || key == "SUPPORTED") return Label::Support;
  if (key == "REFUTE" || key == "REFUTES" || key == "CONTRADICT") return Label::Refute;
  if (key == "NEI" || key == "NOT ENOUGH INFO" || key == "NOT ENOUGH INFORMATION" ||
      key == "NOT SUPPORTED")
    return Label::Nei;
  return std::nullopt;
}

std::string_view label_name(Label label) {
  switch (label) {
    case Label::Support: return "SUPPORT";
    case Label::Refute: return "REFUTE";
    case Label::Nei: return "NOT ENOUGH INFO";
  }
  return "NOT ENOUGH INFO";
}

bool valid_evidence_id(std::string_view id) {
  if (id.empty()) return false;
  for (char c : id) {
    if (is_space(c) || c == '[' || c == ']') return false;
  }
  return true;
}

std::string_view segment_kind_name(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::Plan: return "plan";
    case SegmentKind::Search: return "search";
    case SegmentKind::Information: return "information";
    case SegmentKind::Think: return "think";
    case SegmentKind::Answer: return "answer";
  }
  return "think";
}

std::optional<SegmentKind> segment_kind_from_name(std::string_view name) {
  if (name == "plan") return SegmentKind::Plan;
  if (name == "search") return SegmentKind::Search;
  if (name == "information") return SegmentKind::Information;
  if (name == "think") return SegmentKind::Think;
  if (name == "answer") return SegmentKind::Answer;
  return std::nullopt;
}

std::string_view violation_name(FormatViolation violation) {
  switch (violation) {
    case FormatViolation::MissingPlan: return "missing_plan";
    case FormatViolation::UnknownTag: return "unknown_tag";
    case FormatViolation::SelfEmittedInformation: return "self_emitted_information";
    case FormatViolation::MultipleAnswers: return "multiple_answers";
    case FormatViolation::MalformedAnswer: return "malformed_answer";
    case FormatViolation::TextOutsideTags: return "text_outside_tags";
    case FormatViolation::MissingAnswer: return "missing_answer";
  }
  return "unknown_tag";
}

bool FormatVerdict::has(FormatViolation v) const {
  return std::find(violations.begin(), violations.end(), v) != violations.end();
}

Trajectory parse_transcript(std::string_view raw, ParseMode mode) {
  return parse_transcript(raw, mode, std::string());
}

Trajectory parse_transcript(std::string_view raw, ParseMode mode, std::string claim) {
  Trajectory out;
  out.claim = std::move(claim);
  std::set<FormatViolation> violations;

  auto flush_outside = [&](std::size_t begin, std::size_t end) {
    if (begin < end && !all_whitespace(raw.substr(begin, end - begin))) {
      violations.insert(FormatViolation::TextOutsideTags);
    }
  };

  std::size_t cursor = 0;       // where tag scanning resumes
  std::size_t plain_begin = 0;  // start of the pending outside-text run
  while (true) {
    auto tag = find_tag(raw, cursor);
    if (!tag) break;

    if (!tag->closing) {
      if (auto kind = segment_kind_from_name(tag->name)) {
        std::size_t close = find_close(raw, tag->end, tag->name);
        if (close != std::string_view::npos) {
          flush_outside(plain_begin, tag->begin);
          Segment segment;
          segment.kind = *kind;
          segment.body = std::string(raw.substr(tag->end, close - tag->end));
          segment.body_begin = tag->end;
          segment.body_end = close;
          scan_body_tags(segment.body, violations);
          out.segments.push_back(std::move(segment));
          cursor = close + tag->name.size() + 3;  // past "</name>"
          plain_begin = cursor;
          continue;
        }
        if (mode == ParseMode::Lenient && *kind == SegmentKind::Answer) {
          // Best effort: accept a trailing unclosed answer block.
          flush_outside(plain_begin, tag->begin);
          Segment segment;
          segment.kind = SegmentKind::Answer;
          segment.body = std::string(raw.substr(tag->end));
          segment.body_begin = tag->end;
          segment.body_end = raw.size();
          out.segments.push_back(std::move(segment));
          cursor = raw.size();
          plain_begin = cursor;
          break;
        }
        // Unclosed tag: falls through to outside text.
        cursor = tag->end;
        continue;
      }
      // Undeclared tag; its delimited content (when closed) is consumed so a
      // lone unknown element triggers exactly one code.
      flush_outside(plain_begin, tag->begin);
      violations.insert(FormatViolation::UnknownTag);
      std::size_t close = find_close(raw, tag->end, tag->name);
      if (close != std::string_view::npos) {
        std::string_view content = raw.substr(tag->end, close - tag->end);
        if (content.find("<information>") != std::string_view::npos) {
          violations.insert(FormatViolation::SelfEmittedInformation);
        }
        cursor = close + tag->name.size() + 3;
      } else {
        cursor = tag->end;
      }
      plain_begin = cursor;
      continue;
    }

    // Orphan closing tag: stays in the outside-text run.
    cursor = tag->end;
  }
  flush_outside(plain_begin, raw.size());

  for (std::size_t i = 0; i < out.segments.size(); ++i) {
    Segment& segment = out.segments[i];
    if (segment.kind == SegmentKind::Search) ++out.search_count;
    if (segment.kind == SegmentKind::Information) {
      const bool follows_search = i > 0 && out.segments[i - 1].kind == SegmentKind::Search;
      segment.origin = follows_search ? SegmentOrigin::EnvironmentInjected
                                      : SegmentOrigin::PolicyEmitted;
    }
  }

  if (mode == ParseMode::Strict) {
    // Strict: the answer is whatever the final answer block says.
    for (auto it = out.segments.rbegin(); it != out.segments.rend(); ++it) {
      if (it->kind != SegmentKind::Answer) continue;
      out.answer = parse_answer_block(it->body);
      break;
    }
  } else {
    // Lenient: last answer block with a readable label wins.
    for (auto it = out.segments.rbegin(); it != out.segments.rend(); ++it) {
      if (it->kind != SegmentKind::Answer) continue;
      if (auto answer = parse_answer_block(it->body)) {
        out.answer = std::move(answer);
        break;
      }
    }
  }

  if (mode == ParseMode::Strict) {
    out.parse_violations = sorted_unique(violations);
  }
  return out;
}

FormatVerdict validate_format(const Trajectory& trajectory, const FormatRules& rules) {
  std::set<FormatViolation> violations(trajectory.parse_violations.begin(),
                                       trajectory.parse_violations.end());

  if (rules.require_plan &&
      (trajectory.segments.empty() || trajectory.segments.front().kind != SegmentKind::Plan)) {
    violations.insert(FormatViolation::MissingPlan);
  }

  int answer_count = 0;
  const Segment* last_answer = nullptr;
  for (const Segment& segment : trajectory.segments) {
    switch (segment.kind) {
      case SegmentKind::Plan:
        if (!rules.allow_plan) violations.insert(FormatViolation::UnknownTag);
        break;
      case SegmentKind::Search:
        if (!rules.allow_search) violations.insert(FormatViolation::UnknownTag);
        break;
      case SegmentKind::Information:
        if (!rules.allow_search || segment.origin == SegmentOrigin::PolicyEmitted) {
          violations.insert(FormatViolation::SelfEmittedInformation);
        }
        break;
      case SegmentKind::Answer:
        ++answer_count;
        last_answer = &segment;
        break;
      case SegmentKind::Think:
        break;
    }
  }

  if (answer_count == 0) {
    violations.insert(FormatViolation::MissingAnswer);
  } else {
    if (answer_count > 1) violations.insert(FormatViolation::MultipleAnswers);
    if (answer_count == 1 && trajectory.segments.back().kind != SegmentKind::Answer) {
      // Answer present but not terminal: no terminal answer was emitted.
      violations.insert(FormatViolation::MissingAnswer);
    }
    if (!answer_body_well_formed(last_answer->body)) {
      violations.insert(FormatViolation::MalformedAnswer);
    }
  }

  FormatVerdict verdict;
  verdict.violations = sorted_unique(violations);
  verdict.ok = verdict.violations.empty();
  return verdict;
}

std::optional<ParsedAnswer> parse_answer_block(std::string_view body) {
  std::optional<Label> label;
  for (std::string_view line : split_lines(body)) {
    auto value = strip_field_prefix(line, "label");
    if (!value) continue;
    std::string_view candidate = trim(*value);
    while (!candidate.empty() && candidate.back() == '.') {
      candidate = trim(candidate.substr(0, candidate.size() - 1));
    }
    if (auto parsed = parse_label(candidate)) {
      label = parsed;
      break;
    }
  }
  if (!label) return std::nullopt;

  ParsedAnswer answer;
  answer.label = *label;
  collect_evidence_tokens(body, answer.evidence);
  // The label line itself is not an evidence token source; ids only appear in
  // [[...]] form, which the label line does not use.
  return answer;
}

bool answer_body_well_formed(std::string_view body) {
  std::vector<std::string_view> lines;
  for (std::string_view line : split_lines(body)) {
    if (!trim(line).empty()) lines.push_back(trim(line));
  }
  if (lines.size() != 2) return false;

  auto label_value = strip_field_prefix(lines[0], "label");
  if (!label_value || !parse_label(trim(*label_value))) return false;

  auto evidence_value = strip_field_prefix(lines[1], "evidence");
  if (!evidence_value) return false;
  EvidenceSet ignored;
  return collect_evidence_tokens(*evidence_value, ignored);
}

std::string render_information_block(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  if (entries.empty()) {
    throw std::invalid_argument("information block requires at least one entry");
  }
  std::set<std::string_view> seen;
  std::string out = "<information>\n";
  for (const auto& [id, text] : entries) {
    if (!valid_evidence_id(id)) {
      throw std::invalid_argument("invalid evidence id: '" + id + "'");
    }
    if (!seen.insert(id).second) {
      throw std::invalid_argument("duplicate evidence id: '" + id + "'");
    }
    if (text.find('\n') != std::string::npos) {
      throw std::invalid_argument("entry text must not contain newlines (id " + id + ")");
    }
    out.append("[[").append(id).append("]]: ").append(text).push_back('\n');
  }
  out.append("</information>");
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_information_entries(
    std::string_view body) {
  std::vector<std::pair<std::string, std::string>> entries;
  for (std::string_view line : split_lines(body)) {
    std::string_view rest = trim(line);
    if (!rest.starts_with("[[")) continue;
    std::size_t close = rest.find("]]");
    if (close == std::string_view::npos) continue;
    std::string_view id = trim(rest.substr(2, close - 2));
    if (!valid_evidence_id(id)) continue;
    std::string_view text = rest.substr(close + 2);
    if (text.starts_with(":")) text = text.substr(1);
    if (text.starts_with(" ")) text = text.substr(1);
    entries.emplace_back(std::string(id), std::string(text));
  }
  return entries;
}

std::string serialize_transcript(const std::vector<Segment>& segments) {
  std::string out;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i > 0) out.push_back('\n');
    std::string_view name = segment_kind_name(segments[i].kind);
    out.push_back('<');
    out.append(name);
    out.push_back('>');
    out.append(segments[i].body);
    out.append("</");
    out.append(name);
    out.push_back('>');
  }
  return out;
}

}  // namespace oncv

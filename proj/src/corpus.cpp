#include "oncv/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "oncv/protocol.hpp"

namespace oncv {
namespace {

using json = nlohmann::json;

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c >= 0x80;
}

std::string sanitize_id_fragment(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    out.push_back(std::isspace(static_cast<unsigned char>(c)) ? '_' : c);
  }
  return out;
}

constexpr int kSentencesPerEntry = 3;

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    const auto byte = static_cast<unsigned char>(c);
    if (is_word_byte(byte)) {
      current.push_back(static_cast<char>(std::tolower(byte)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> sentences;
  std::string current;
  auto flush = [&] {
    // Trim and collapse whitespace so entry text stays single-line.
    std::string cleaned;
    bool pending_space = false;
    for (char c : current) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        pending_space = true;
        continue;
      }
      if (pending_space && !cleaned.empty()) cleaned.push_back(' ');
      pending_space = false;
      cleaned.push_back(c);
    }
    if (!cleaned.empty()) sentences.push_back(std::move(cleaned));
    current.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    current.push_back(text[i]);
    if (text[i] == '.' || text[i] == '!' || text[i] == '?') {
      const bool at_end = i + 1 == text.size();
      const bool before_space =
          !at_end && std::isspace(static_cast<unsigned char>(text[i + 1])) != 0;
      if (at_end || before_space) flush();
    }
  }
  flush();
  return sentences;
}

void CorpusIndex::add_entry(CorpusEntry entry) {
  if (!valid_evidence_id(entry.id)) {
    throw CorpusError("invalid entry id: '" + entry.id + "'");
  }
  auto [it, inserted] = id_to_index_.emplace(entry.id, entries_.size());
  if (!inserted) {
    throw CorpusError("duplicate entry id: '" + entry.id + "'");
  }
  entries_.push_back(std::move(entry));
}

void CorpusIndex::build_postings() {
  postings_.clear();
  entry_lengths_.assign(entries_.size(), 0);
  long long total = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    std::map<std::string, int> counts;
    for (std::string& token : tokenize(entries_[i].text)) {
      ++counts[std::move(token)];
    }
    int length = 0;
    for (const auto& [term, tf] : counts) {
      postings_[term].push_back(Posting{i, tf});
      length += tf;
    }
    entry_lengths_[i] = length;
    total += length;
  }
  average_length_ = entries_.empty()
                        ? 0.0
                        : static_cast<double>(total) / static_cast<double>(entries_.size());
}

CorpusIndex CorpusIndex::ingest_records(const std::vector<CorpusRecord>& records) {
  CorpusIndex index;
  for (const CorpusRecord& record : records) {
    if (!record.id.empty()) {
      if (tokenize(record.text).empty()) {
        ++index.stats_.skipped_empty;
        continue;
      }
      CorpusEntry entry;
      entry.id = record.id;
      entry.doc_id = record.doc_id.empty() ? record.id : record.doc_id;
      entry.sentence_begin = 0;
      const auto sentences = split_sentences(record.text);
      entry.sentence_end = sentences.empty() ? 0 : static_cast<int>(sentences.size()) - 1;
      entry.text = record.text;
      index.add_entry(std::move(entry));
      ++index.stats_.prechunked;
      continue;
    }

    const auto sentences = split_sentences(record.text);
    if (sentences.empty()) {
      ++index.stats_.skipped_empty;
      continue;
    }
    ++index.stats_.documents;
    const std::string doc_fragment = sanitize_id_fragment(record.doc_id);
    int chunk = 0;
    for (std::size_t begin = 0; begin < sentences.size(); begin += kSentencesPerEntry) {
      const std::size_t end = std::min(begin + kSentencesPerEntry, sentences.size());
      CorpusEntry entry;
      entry.id = doc_fragment + "_c" + std::to_string(chunk++);
      entry.doc_id = record.doc_id;
      entry.sentence_begin = static_cast<int>(begin);
      entry.sentence_end = static_cast<int>(end) - 1;
      for (std::size_t s = begin; s < end; ++s) {
        if (s > begin) entry.text.push_back(' ');
        entry.text.append(sentences[s]);
      }
      index.add_entry(std::move(entry));
    }
  }
  index.build_postings();
  return index;
}

CorpusIndex CorpusIndex::ingest_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw CorpusError("cannot open corpus file: " + path);
  }
  std::vector<CorpusRecord> records;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json parsed;
    try {
      parsed = json::parse(line);
    } catch (const json::exception& ex) {
      throw CorpusError("corpus line " + std::to_string(line_number) +
                        " is not valid JSON: " + ex.what());
    }
    CorpusRecord record;
    record.text = parsed.value("text", "");
    if (parsed.contains("id")) {
      record.id = parsed.at("id").get<std::string>();
      record.doc_id = parsed.value("doc_id", "");
    } else if (parsed.contains("doc_id")) {
      record.doc_id = parsed.at("doc_id").get<std::string>();
    } else {
      throw CorpusError("corpus line " + std::to_string(line_number) +
                        " needs an \"id\" or \"doc_id\" field");
    }
    records.push_back(std::move(record));
  }
  return ingest_records(records);
}

std::vector<RetrievalHit> CorpusIndex::search(std::string_view query, int k) const {
  if (k < 1) {
    throw std::invalid_argument("search: k must be >= 1");
  }
  std::vector<std::string> terms = tokenize(query);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  if (terms.empty() || entries_.empty()) return {};

  const double entry_count = static_cast<double>(entries_.size());
  std::vector<double> scores(entries_.size(), 0.0);
  std::vector<bool> touched(entries_.size(), false);
  for (const std::string& term : terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double df = static_cast<double>(it->second.size());
    const double idf = std::log(1.0 + (entry_count - df + 0.5) / (df + 0.5));
    for (const Posting& posting : it->second) {
      const double tf = static_cast<double>(posting.term_frequency);
      const double norm =
          kBm25K1 * (1.0 - kBm25B +
                     kBm25B * entry_lengths_[posting.entry_index] / average_length_);
      scores[posting.entry_index] += idf * (tf * (kBm25K1 + 1.0)) / (tf + norm);
      touched[posting.entry_index] = true;
    }
  }

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (touched[i]) candidates.push_back(i);
  }
  std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return entries_[a].id < entries_[b].id;
  });
  if (candidates.size() > static_cast<std::size_t>(k)) {
    candidates.resize(static_cast<std::size_t>(k));
  }

  std::vector<RetrievalHit> hits;
  hits.reserve(candidates.size());
  for (std::size_t index : candidates) {
    hits.push_back(RetrievalHit{entries_[index].id, scores[index]});
  }
  return hits;
}

const CorpusEntry* CorpusIndex::find_entry(const std::string& id) const {
  auto it = id_to_index_.find(id);
  if (it == id_to_index_.end()) return nullptr;
  return &entries_[it->second];
}

const CorpusEntry& CorpusIndex::entry(const std::string& id) const {
  const CorpusEntry* found = find_entry(id);
  if (!found) {
    throw NotFoundError("unknown evidence id: '" + id + "'");
  }
  return *found;
}

std::string CorpusIndex::to_json() const {
  json entries = json::array();
  for (const CorpusEntry& entry : entries_) {
    entries.push_back({{"id", entry.id},
                       {"doc_id", entry.doc_id},
                       {"sentence_range", {entry.sentence_begin, entry.sentence_end}},
                       {"text", entry.text}});
  }
  const json out = {
      {"format_version", kFormatVersion},
      {"bm25", {{"k1", kBm25K1}, {"b", kBm25B}}},
      {"tokenizer", "lower_alnum_v1"},
      {"stats",
       {{"documents", stats_.documents},
        {"prechunked", stats_.prechunked},
        {"skipped_empty", stats_.skipped_empty}}},
      {"entries", entries},
  };
  return out.dump(2);
}

CorpusIndex CorpusIndex::from_json(std::string_view json_text) {
  json parsed;
  try {
    parsed = json::parse(json_text);
  } catch (const json::exception& ex) {
    throw CorpusError(std::string("corrupt index file: ") + ex.what());
  }
  if (parsed.value("format_version", -1) != kFormatVersion) {
    throw CorpusError("unsupported index format_version");
  }
  CorpusIndex index;
  for (const json& record : parsed.at("entries")) {
    CorpusEntry entry;
    entry.id = record.at("id").get<std::string>();
    entry.doc_id = record.value("doc_id", "");
    const auto& range = record.at("sentence_range");
    entry.sentence_begin = range.at(0).get<int>();
    entry.sentence_end = range.at(1).get<int>();
    entry.text = record.at("text").get<std::string>();
    index.add_entry(std::move(entry));
  }
  if (parsed.contains("stats")) {
    const json& stats = parsed.at("stats");
    index.stats_.documents = stats.value("documents", 0);
    index.stats_.prechunked = stats.value("prechunked", 0);
    index.stats_.skipped_empty = stats.value("skipped_empty", 0);
  }
  index.build_postings();
  return index;
}

void CorpusIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw CorpusError("cannot write index file: " + path);
  }
  out << to_json() << '\n';
}

CorpusIndex CorpusIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CorpusError("cannot open index file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

RemoteRetriever::RemoteRetriever(std::string base_url, const CorpusIndex& corpus,
                                 int timeout_ms)
    : base_url_(std::move(base_url)), corpus_(corpus), timeout_ms_(timeout_ms) {}

std::vector<RetrievalHit> RemoteRetriever::search(std::string_view query, int k) const {
  httplib::Client client(base_url_);
  client.set_connection_timeout(0, timeout_ms_ * 1000);
  client.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);

  const json body = {{"query", std::string(query)}, {"k", k}};
  auto response = client.Post("/search", body.dump(), "application/json");
  if (!response || response->status != 200) {
    throw CorpusError("retrieval service request failed");
  }
  json parsed;
  try {
    parsed = json::parse(response->body);
  } catch (const json::exception& ex) {
    throw CorpusError(std::string("retrieval service returned invalid JSON: ") + ex.what());
  }
  std::vector<RetrievalHit> hits;
  for (const json& item : parsed.value("results", json::array())) {
    hits.push_back(RetrievalHit{item.at("id").get<std::string>(), item.value("score", 0.0)});
  }
  return hits;
}

const CorpusEntry* RemoteRetriever::find_entry(const std::string& id) const {
  return corpus_.find_entry(id);
}

}  // namespace oncv

#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace oncv {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A retrievable unit: up to three consecutive sentences of one document.
struct CorpusEntry {
  std::string id;
  std::string doc_id;
  int sentence_begin = 0;  // sentence indexes within the document, inclusive
  int sentence_end = 0;
  std::string text;
};

struct RetrievalHit {
  std::string id;
  double score = 0.0;
};

// Lexical search surface the environment depends on. The default
// implementation is the BM25 CorpusIndex below; an embedding-service client
// can stand in as long as ids resolve against the same corpus.
class Retriever {
 public:
  virtual ~Retriever() = default;
  virtual std::vector<RetrievalHit> search(std::string_view query, int k) const = 0;
  virtual const CorpusEntry* find_entry(const std::string& id) const = 0;
};

// Lowercased word tokens: ASCII alphanumerics plus any byte >= 0x80 (UTF-8
// sequences stay inside one token). No stemming, no stopword removal.
std::vector<std::string> tokenize(std::string_view text);

// Sentence boundary = '.', '!' or '?' followed by whitespace (or end of
// text). Abbreviations are not special-cased. Sentences come back trimmed
// with internal whitespace runs collapsed to single spaces.
std::vector<std::string> split_sentences(std::string_view text);

struct CorpusRecord {
  std::string id;      // pre-chunked entry id; empty for whole documents
  std::string doc_id;  // document id when auto-chunking
  std::string text;
};

// Immutable after build; BM25 (k1=1.2, b=0.75) over 3-sentence entries with
// ascending-id tie breaks, so search is deterministic.
class CorpusIndex : public Retriever {
 public:
  struct IngestStats {
    int documents = 0;
    int prechunked = 0;
    int skipped_empty = 0;
  };

  // Line-delimited JSON: {"doc_id": ..., "text": ...} documents are chunked
  // three sentences per entry; {"id": ..., "text": ...} records pass through.
  // Duplicate ids are a hard error; empty documents are skipped and counted.
  static CorpusIndex ingest_file(const std::string& path);
  static CorpusIndex ingest_records(const std::vector<CorpusRecord>& records);

  static CorpusIndex load(const std::string& path);
  void save(const std::string& path) const;
  std::string to_json() const;
  static CorpusIndex from_json(std::string_view json_text);

  std::vector<RetrievalHit> search(std::string_view query, int k) const override;
  const CorpusEntry* find_entry(const std::string& id) const override;

  // Throws NotFoundError for unknown ids.
  const CorpusEntry& entry(const std::string& id) const;

  const std::vector<CorpusEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const IngestStats& stats() const { return stats_; }

  static constexpr double kBm25K1 = 1.2;
  static constexpr double kBm25B = 0.75;
  static constexpr int kFormatVersion = 1;

 private:
  struct Posting {
    std::size_t entry_index;
    int term_frequency;
  };

  void add_entry(CorpusEntry entry);
  void build_postings();

  std::vector<CorpusEntry> entries_;
  std::map<std::string, std::size_t> id_to_index_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<int> entry_lengths_;
  double average_length_ = 0.0;
  IngestStats stats_;
};

// Queries a remote scoring service (POST {query, k} -> {results: [{id,
// score}]}) while resolving entry texts against the local corpus.
class RemoteRetriever : public Retriever {
 public:
  RemoteRetriever(std::string base_url, const CorpusIndex& corpus, int timeout_ms = 30000);

  std::vector<RetrievalHit> search(std::string_view query, int k) const override;
  const CorpusEntry* find_entry(const std::string& id) const override;

 private:
  std::string base_url_;
  const CorpusIndex& corpus_;
  int timeout_ms_;
};

}  // namespace oncv

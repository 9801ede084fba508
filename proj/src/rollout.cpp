#include "oncv/rollout.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <stdexcept>
#include <thread>

#include "oncv/grpo.hpp"
#include "oncv/prompts.hpp"

namespace oncv {
namespace {

constexpr std::string_view kSearchOpen = "<search>";
constexpr std::string_view kSearchClose = "</search>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

std::string trim_copy(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

struct ContinuationEvent {
  enum class Kind { None, Search, Answer, BudgetExceeded };
  Kind kind = Kind::None;
  std::string kept;   // text appended to the transcript
  std::string query;  // Search only
};

// Stop-sequence semantics: everything after the first </search> (or
// </answer>) is text the policy would never have generated, so it is
// discarded. An unclosed <search> is re-closed by the environment, mirroring
// HTTP backends that eat the stop string.
ContinuationEvent process_online_continuation(const std::string& text, bool budget_left) {
  ContinuationEvent event;
  const std::size_t search_pos = text.find(kSearchOpen);
  const std::size_t answer_pos = text.find(kAnswerOpen);

  if (search_pos != std::string::npos && search_pos < answer_pos) {
    if (!budget_left) {
      event.kind = ContinuationEvent::Kind::BudgetExceeded;
      event.kept = text.substr(0, search_pos);
      return event;
    }
    event.kind = ContinuationEvent::Kind::Search;
    const std::size_t body_begin = search_pos + kSearchOpen.size();
    const std::size_t close = text.find(kSearchClose, body_begin);
    if (close != std::string::npos) {
      event.query = trim_copy(std::string_view(text).substr(body_begin, close - body_begin));
      event.kept = text.substr(0, close + kSearchClose.size());
    } else {
      event.query = trim_copy(std::string_view(text).substr(body_begin));
      event.kept = text;
      event.kept.append(kSearchClose);
    }
    return event;
  }

  if (answer_pos != std::string::npos) {
    event.kind = ContinuationEvent::Kind::Answer;
    const std::size_t close = text.find(kAnswerClose, answer_pos + kAnswerOpen.size());
    event.kept = close == std::string::npos ? text : text.substr(0, close + kAnswerClose.size());
    return event;
  }

  event.kept = text;
  return event;
}

// Byte offset of the label value inside an answer block, if any.
std::optional<std::size_t> label_value_offset(const std::string& text) {
  const std::size_t answer = text.find(kAnswerOpen);
  if (answer == std::string::npos) return std::nullopt;
  std::size_t pos = answer + kAnswerOpen.size();
  while (pos < text.size()) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(text[pos])));
    if (c == 'l' && text.size() - pos >= 5) {
      std::string_view word(text.data() + pos, 5);
      bool match = true;
      for (std::size_t i = 0; i < 5; ++i) {
        if (std::tolower(static_cast<unsigned char>(word[i])) != "label"[i]) {
          match = false;
          break;
        }
      }
      if (match) {
        std::size_t cursor = pos + 5;
        while (cursor < text.size() && std::isspace(static_cast<unsigned char>(text[cursor])))
          ++cursor;
        if (cursor < text.size() && text[cursor] == ':') {
          ++cursor;
          while (cursor < text.size() &&
                 std::isspace(static_cast<unsigned char>(text[cursor])))
            ++cursor;
          if (cursor < text.size()) return cursor;
        }
      }
    }
    ++pos;
  }
  return std::nullopt;
}

// First generated token of the label word, assuming token texts concatenate
// to the continuation.
std::optional<double> label_token_probability(const PolicyResponse& response) {
  if (response.token_probs.empty()) return std::nullopt;
  const auto offset = label_value_offset(response.text);
  if (!offset) return std::nullopt;
  std::size_t cursor = 0;
  for (const TokenProb& token : response.token_probs) {
    const std::size_t next = cursor + token.token.size();
    if (*offset < next) return token.prob;
    cursor = next;
  }
  return std::nullopt;
}

std::string single_line(std::string text) {
  for (char& c : text) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

std::string information_block_for(const Retriever& retriever,
                                  const std::vector<RetrievalHit>& hits) {
  if (hits.empty()) return "<information>\n</information>";
  std::vector<std::pair<std::string, std::string>> entries;
  entries.reserve(hits.size());
  for (const RetrievalHit& hit : hits) {
    const CorpusEntry* entry = retriever.find_entry(hit.id);
    // Pre-chunked entries keep their text verbatim in the index; the injected
    // view must stay one line per entry.
    entries.emplace_back(hit.id, entry ? single_line(entry->text) : std::string());
  }
  return render_information_block(entries);
}

void finalize(EpisodeResult& result, const ClaimSample& sample, const FormatRules& rules) {
  result.trajectory = parse_transcript(result.transcript, ParseMode::Strict, sample.claim);
  result.verdict = validate_format(result.trajectory, rules);
  if (result.error) {
    // Failed episodes always yield a scalar; the error tag tells them apart.
    result.reward = RewardBreakdown{};
  } else {
    result.reward = final_reward(result.trajectory, sample.gold, rules);
  }
}

std::int64_t now_unix_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::string_view rollout_mode_name(RolloutMode mode) {
  return mode == RolloutMode::Online ? "online" : "offline";
}

FormatRules EpisodeConfig::format_rules(RolloutMode mode) const {
  FormatRules rules = mode == RolloutMode::Online ? FormatRules::online() : FormatRules::offline();
  if (mode == RolloutMode::Online) rules.require_plan = require_plan;
  return rules;
}

void EpisodeConfig::validate() const {
  if (max_searches < 0) throw std::invalid_argument("max_searches must be >= 0");
  if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
  if (max_turns < max_searches + 1) {
    throw std::invalid_argument("max_turns must be >= max_searches + 1");
  }
}

int EpisodeResult::searches_executed() const {
  int count = 0;
  for (const TurnRecord& turn : turns) {
    if (turn.searched) ++count;
  }
  return count;
}

EpisodeResult run_online_episode(const ClaimSample& sample, PolicyClient& policy,
                                 const Retriever& retriever, const EpisodeConfig& config,
                                 int group_index) {
  config.validate();
  EpisodeResult result;
  result.claim_id = sample.claim_id;
  result.mode = RolloutMode::Online;

  const std::string prompt = render_online_prompt(sample.claim, config.max_searches);
  int searches = 0;
  bool answered = false;

  try {
    int turn_index = 0;
    for (; turn_index < config.max_turns; ++turn_index) {
      PolicyRequest request;
      request.conversation = prompt + result.transcript;
      request.stop = {std::string(kSearchClose)};
      request.temperature = config.temperature;
      request.max_tokens = config.max_tokens;
      request.claim_id = sample.claim_id;
      request.turn_index = turn_index;
      request.group_index = group_index;

      const PolicyResponse response = policy.complete(request);
      if (response.text.empty()) break;

      TurnRecord turn;
      turn.index = turn_index;
      ContinuationEvent event =
          process_online_continuation(response.text, searches < config.max_searches);

      if (event.kind == ContinuationEvent::Kind::Search) {
        result.transcript += event.kept;
        turn.searched = true;
        turn.query = event.query;
        if (!event.query.empty()) {
          turn.retrieved = retriever.search(event.query, config.top_k);
        }
        result.transcript += "\n";
        result.transcript += information_block_for(retriever, turn.retrieved);
        result.transcript += "\n";
        ++searches;
        result.turns.push_back(std::move(turn));
        continue;
      }

      if (event.kind == ContinuationEvent::Kind::Answer) {
        result.transcript += event.kept;
        result.answer_probability = label_token_probability(response);
        answered = true;
        result.turns.push_back(std::move(turn));
        break;
      }

      if (event.kind == ContinuationEvent::Kind::BudgetExceeded) {
        result.transcript += event.kept;
        result.turns.push_back(std::move(turn));
        ++turn_index;
        break;
      }

      result.transcript += event.kept;
      result.turns.push_back(std::move(turn));
    }

    if (!answered && !result.error) {
      // One extra continuation with an explicit instruction; the instruction
      // is conversation-only and never part of the scored transcript.
      PolicyRequest request;
      request.conversation =
          prompt + result.transcript + std::string(forced_answer_instruction());
      request.stop = {std::string(kSearchClose)};
      request.temperature = config.temperature;
      request.max_tokens = config.max_tokens;
      request.claim_id = sample.claim_id;
      request.turn_index = turn_index;
      request.group_index = group_index;

      const PolicyResponse response = policy.complete(request);
      TurnRecord turn;
      turn.index = turn_index;
      turn.forced = true;
      result.forced_answer = true;
      if (!response.text.empty()) {
        ContinuationEvent event = process_online_continuation(response.text, false);
        // Only an answer is honored here; a stubborn search attempt is cut.
        result.transcript += event.kept;
        if (event.kind == ContinuationEvent::Kind::Answer) {
          result.answer_probability = label_token_probability(response);
        }
      }
      result.turns.push_back(std::move(turn));
    }
  } catch (const PolicyTransportError& ex) {
    result.error = ex.what();
  }

  finalize(result, sample, config.format_rules(RolloutMode::Online));
  return result;
}

EpisodeResult run_offline_episode(
    const ClaimSample& sample,
    const std::vector<std::pair<std::string, std::string>>& evidence, PolicyClient& policy,
    const EpisodeConfig& config, int group_index) {
  EpisodeResult result;
  result.claim_id = sample.claim_id;
  result.mode = RolloutMode::Offline;

  try {
    PolicyRequest request;
    request.conversation = render_offline_prompt(sample.claim, evidence);
    request.temperature = config.temperature;
    request.max_tokens = config.max_tokens;
    request.claim_id = sample.claim_id;
    request.turn_index = 0;
    request.group_index = group_index;

    const PolicyResponse response = policy.complete(request);
    const std::size_t answer_pos = response.text.find(kAnswerOpen);
    if (answer_pos != std::string::npos) {
      const std::size_t close =
          response.text.find(kAnswerClose, answer_pos + kAnswerOpen.size());
      result.transcript = close == std::string::npos
                              ? response.text
                              : response.text.substr(0, close + kAnswerClose.size());
      result.answer_probability = label_token_probability(response);
    } else {
      result.transcript = response.text;
    }
    TurnRecord turn;
    turn.index = 0;
    result.turns.push_back(std::move(turn));
  } catch (const PolicyTransportError& ex) {
    result.error = ex.what();
  }

  finalize(result, sample, config.format_rules(RolloutMode::Offline));
  return result;
}

std::vector<std::pair<std::string, std::string>> build_evidence_bundle(
    const ClaimSample& sample, const Retriever& retriever, int distractors) {
  std::vector<std::pair<std::string, std::string>> bundle;
  for (const std::string& id : sample.gold.evidence) {
    const CorpusEntry* entry = retriever.find_entry(id);
    if (!entry) {
      throw NotFoundError("gold evidence id '" + id + "' is not in the corpus");
    }
    bundle.emplace_back(id, entry->text);
  }
  if (distractors > 0) {
    const int want = distractors + static_cast<int>(sample.gold.evidence.size());
    int taken = 0;
    for (const RetrievalHit& hit : retriever.search(sample.claim, want)) {
      if (sample.gold.evidence.count(hit.id)) continue;
      const CorpusEntry* entry = retriever.find_entry(hit.id);
      if (!entry) continue;
      bundle.emplace_back(hit.id, entry->text);
      if (++taken == distractors) break;
    }
  }
  // Sorted by id so gold entries are not positionally identifiable.
  std::sort(bundle.begin(), bundle.end());
  return bundle;
}

std::vector<BatchEntry> run_batch(const std::vector<ClaimSample>& samples,
                                  PolicyClient& policy, const Retriever& retriever,
                                  const EpisodeConfig& config, const BatchOptions& options) {
  if (options.group_size < 1) {
    throw std::invalid_argument("group_size must be >= 1");
  }
  config.validate();

  std::vector<BatchEntry> entries(samples.size() * static_cast<std::size_t>(options.group_size));
  if (entries.empty()) return entries;

  auto run_sample = [&](std::size_t sample_index) {
    const ClaimSample& sample = samples[sample_index];
    std::vector<double> rewards;
    rewards.reserve(static_cast<std::size_t>(options.group_size));
    for (int g = 0; g < options.group_size; ++g) {
      BatchEntry& entry =
          entries[sample_index * static_cast<std::size_t>(options.group_size) +
                  static_cast<std::size_t>(g)];
      entry.claim_id = sample.claim_id;
      entry.dataset = sample.dataset;
      entry.gold = sample.gold;
      entry.raw_label = sample.raw_label;
      entry.group_index = g;
      entry.start_unix_ms = now_unix_ms();
      const auto started = std::chrono::steady_clock::now();
      try {
        if (options.mode == RolloutMode::Online) {
          entry.result = run_online_episode(sample, policy, retriever, config, g);
        } else {
          const auto bundle =
              build_evidence_bundle(sample, retriever, options.offline_distractors);
          entry.result = run_offline_episode(sample, bundle, policy, config, g);
        }
      } catch (const std::exception& ex) {
        // A broken episode degrades only itself, never the batch.
        entry.result = EpisodeResult{};
        entry.result.claim_id = sample.claim_id;
        entry.result.mode = options.mode;
        entry.result.error = ex.what();
        entry.result.trajectory = parse_transcript("", ParseMode::Strict, sample.claim);
      }
      entry.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
      rewards.push_back(entry.result.reward.r_final);
    }
    const std::vector<double> advantages = group_advantages(rewards, options.epsilon_norm);
    for (int g = 0; g < options.group_size; ++g) {
      entries[sample_index * static_cast<std::size_t>(options.group_size) +
              static_cast<std::size_t>(g)]
          .advantage = advantages[static_cast<std::size_t>(g)];
    }
  };

  int jobs = options.jobs > 0 ? options.jobs
                              : static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  jobs = std::min<int>(jobs, static_cast<int>(samples.size()));

  if (jobs <= 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) run_sample(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        while (true) {
          const std::size_t index = next.fetch_add(1);
          if (index >= samples.size()) return;
          run_sample(index);
        }
      });
    }
    for (std::thread& worker : workers) worker.join();
  }
  return entries;
}

}  // namespace oncv

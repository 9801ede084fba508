// Batch command surface: ingest / rollout / reward / evaluate / filter /
// confidence. Primary outputs are byte-deterministic; wall-clock data lives
// in per-line "timing" fields and in the <out>.meta.json sidecars.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oncv/confidence.hpp"
#include "oncv/corpus.hpp"
#include "oncv/datafilter.hpp"
#include "oncv/dataset.hpp"
#include "oncv/evaluation.hpp"
#include "oncv/policy.hpp"
#include "oncv/rollout.hpp"
#include "oncv/rollout_log.hpp"

using json = nlohmann::json;
using namespace oncv;

namespace {

// ---------------------------------------------------------------------------
// Configuration. Precedence: CLI flag > config file > environment > default.
// Config files are "key = value" lines with '#' comments.
// ---------------------------------------------------------------------------

class Settings {
 public:
  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
      throw std::runtime_error("cannot open config file: " + path);
    }
    std::string line;
    while (std::getline(in, line)) {
      const std::size_t comment = line.find('#');
      if (comment != std::string::npos) line.resize(comment);
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) continue;
      file_values_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
  }

  // `flag_set` wins, then the config file, then the environment variable.
  std::string resolve(const std::string& key, bool flag_set, const std::string& flag_value,
                      const char* env_name, const std::string& fallback) {
    std::string value = fallback;
    if (flag_set) {
      value = flag_value;
    } else if (auto it = file_values_.find(key); it != file_values_.end()) {
      value = it->second;
    } else if (env_name != nullptr) {
      if (const char* env = std::getenv(env_name); env != nullptr && *env != '\0') {
        value = env;
      }
    }
    effective_[key] = value;
    return value;
  }

  int resolve_int(const std::string& key, bool flag_set, int flag_value, const char* env_name,
                  int fallback) {
    const std::string text = resolve(key, flag_set, std::to_string(flag_value), env_name,
                                     std::to_string(fallback));
    effective_[key] = std::stoi(text);
    return std::stoi(text);
  }

  double resolve_double(const std::string& key, bool flag_set, double flag_value,
                        const char* env_name, double fallback) {
    const std::string text = resolve(key, flag_set, json(flag_value).dump(), env_name,
                                     json(fallback).dump());
    const double value = std::stod(text);
    effective_[key] = value;
    return value;
  }

  void note(const std::string& key, const json& value) { effective_[key] = value; }

  const json& effective() const { return effective_; }

 private:
  static std::string trim(const std::string& text) {
    const std::size_t begin = text.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const std::size_t end = text.find_last_not_of(" \t\r\n");
    return text.substr(begin, end - begin + 1);
  }

  std::map<std::string, std::string> file_values_;
  json effective_ = json::object();
};

void write_meta_sidecar(const std::string& out_path, const std::string& command,
                        const Settings& settings) {
  const auto now_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
  const json meta = {
      {"command", command},
      {"effective_config", settings.effective()},
      {"timestamp_unix_ms", now_ms},
      {"schema_version", 1},
  };
  std::ofstream out(out_path + ".meta.json", std::ios::binary);
  if (out) out << meta.dump(2) << '\n';
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write output file: " + path);
  }
  out << content;
}

// "scripted:<fixture.json>" or an http(s) base URL.
std::unique_ptr<PolicyClient> make_policy(const std::string& spec, const std::string& model,
                                          const std::string& api_key, int timeout_ms,
                                          int retries, int rate_interval_ms) {
  constexpr std::string_view kScriptedPrefix = "scripted:";
  if (spec.rfind(kScriptedPrefix, 0) == 0) {
    return std::make_unique<ScriptedPolicy>(
        ScriptedPolicy::from_file(spec.substr(kScriptedPrefix.size())));
  }
  HttpChatPolicy::Options options;
  options.base_url = spec;
  options.model = model;
  options.api_key = api_key;
  options.timeout_ms = timeout_ms;
  options.max_retries = retries;
  options.min_request_interval_ms = rate_interval_ms;
  return std::make_unique<HttpChatPolicy>(std::move(options));
}

std::optional<ParsedAnswer> answer_from_transcript(const std::string& transcript) {
  return parse_transcript(transcript, ParseMode::Lenient).answer;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& corpus_path, const std::string& out_path,
               Settings& settings) {
  const CorpusIndex index = CorpusIndex::ingest_file(corpus_path);
  index.save(out_path);
  settings.note("corpus", corpus_path);
  settings.note("out", out_path);
  write_meta_sidecar(out_path, "ingest", settings);
  const json summary = {
      {"entries", index.size()},
      {"documents", index.stats().documents},
      {"prechunked", index.stats().prechunked},
      {"skipped_empty", index.stats().skipped_empty},
      {"index", out_path},
  };
  std::cout << summary.dump(2) << '\n';
  return 0;
}

struct RolloutArgs {
  std::string dataset;
  std::string index;
  std::string policy;
  std::string mode = "online";
  int group_size = 3;
  int max_searches = 3;
  int max_turns = 4;
  int top_k = 3;
  double temperature = 0.8;
  int max_tokens = 512;
  int jobs = 0;
  int offline_distractors = 3;
  double epsilon_norm = 1e-6;
  bool no_require_plan = false;
  std::string out;
};

int cmd_rollout(const RolloutArgs& args, PolicyClient& policy, Settings& settings) {
  const std::vector<ClaimSample> samples = load_dataset(args.dataset);
  const CorpusIndex index = CorpusIndex::load(args.index);

  EpisodeConfig config;
  config.max_searches = args.max_searches;
  config.max_turns = args.max_turns;
  config.top_k = args.top_k;
  config.temperature = args.temperature;
  config.max_tokens = args.max_tokens;
  config.require_plan = !args.no_require_plan;

  BatchOptions options;
  options.mode = args.mode == "offline" ? RolloutMode::Offline : RolloutMode::Online;
  options.group_size = args.group_size;
  options.epsilon_norm = args.epsilon_norm;
  options.jobs = args.jobs;
  options.offline_distractors = args.offline_distractors;

  const std::vector<BatchEntry> entries = run_batch(samples, policy, index, config, options);
  write_rollout_log(args.out, entries);
  write_meta_sidecar(args.out, "rollout", settings);

  const json summary = {
      {"episodes", entries.size()},
      {"samples", samples.size()},
      {"log", args.out},
      {"content_hash", rollout_log_content_hash(args.out)},
  };
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_reward_audit(const std::string& log_path) {
  const std::vector<LogRecord> records = read_rollout_log(log_path);
  json mismatches = json::array();
  int checked = 0;
  int skipped_errored = 0;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const LogRecord& record = records[i];
    if (record.error) {
      ++skipped_errored;
      continue;
    }
    ++checked;
    const Trajectory t = parse_transcript(record.transcript, ParseMode::Strict);
    const FormatRules rules = record.mode == RolloutMode::Online ? FormatRules::online()
                                                                 : FormatRules::offline();
    const RewardBreakdown recomputed = final_reward(t, record.gold, rules);
    auto diff = [&](const char* field, double logged, double fresh) {
      if (logged != fresh) {
        mismatches.push_back({{"line", i + 1},
                              {"claim_id", record.claim_id},
                              {"field", field},
                              {"logged", logged},
                              {"recomputed", fresh}});
      }
    };
    diff("format", record.reward.r_format, recomputed.r_format);
    diff("evidence", record.reward.r_evidence, recomputed.r_evidence);
    diff("label", record.reward.r_label, recomputed.r_label);
    diff("hit_rate", record.reward.hit_rate, recomputed.hit_rate);
    diff("validity_weight", record.reward.w_validity, recomputed.w_validity);
    diff("final", record.reward.r_final, recomputed.r_final);
  }

  const json summary = {
      {"checked", checked},
      {"skipped_errored", skipped_errored},
      {"mismatches", mismatches},
  };
  std::cout << summary.dump(2) << '\n';
  return mismatches.empty() ? 0 : 1;
}

int cmd_evaluate(const std::string& log_path, bool strict_nei, const std::string& report_path,
                 Settings& settings) {
  const std::vector<LogRecord> records = read_rollout_log(log_path);
  std::vector<ScoredSample> scored;
  scored.reserve(records.size());
  for (const LogRecord& record : records) {
    ScoredSample sample;
    sample.dataset = record.dataset.empty() ? "default" : record.dataset;
    sample.gold_label = record.gold.label;
    sample.gold_label_remapped =
        !record.raw_label.empty() &&
        record.raw_label != std::string(label_name(record.gold.label));
    sample.score =
        score_sample(answer_from_transcript(record.transcript), record.gold, !strict_nei);
    scored.push_back(std::move(sample));
  }
  const EvaluationReport report = aggregate(scored, !strict_nei);
  write_text_file(report_path, report_to_json(report) + "\n");
  settings.note("log", log_path);
  settings.note("strict_nei", strict_nei);
  settings.note("report", report_path);
  write_meta_sidecar(report_path, "evaluate", settings);
  std::cout << report_table(report);
  return 0;
}

int cmd_filter(const std::string& dataset_path, const std::string& index_path,
               PolicyClient& judge, const std::string& out_path, int distractors, int jobs,
               Settings& settings) {
  const std::vector<ClaimSample> samples = load_dataset(dataset_path);
  const CorpusIndex index = CorpusIndex::load(index_path);

  FilterOptions options;
  options.distractors = distractors;
  options.jobs = jobs;
  const FilterResult result = run_filter(samples, judge, index, options);

  write_dataset(out_path, result.kept_samples);
  {
    std::ofstream decisions(out_path + ".decisions.jsonl", std::ios::binary);
    if (!decisions) {
      throw std::runtime_error("cannot write decisions log");
    }
    for (const FilterDecisionRecord& record : result.decisions) {
      json line = {
          {"claim_id", record.claim_id},
          {"outcome", record.outcome == FilterOutcome::Kept      ? "kept"
                      : record.outcome == FilterOutcome::Dropped ? "dropped"
                                                                 : "undecided"},
          {"reason", record.decision.reason},
          {"judge_transcript", record.decision.judge_transcript},
      };
      line["judge_label"] = record.decision.judge_label
                                ? json(std::string(label_name(*record.decision.judge_label)))
                                : json(nullptr);
      json evidence = json::array();
      for (const std::string& id : record.decision.judge_evidence) evidence.push_back(id);
      line["judge_evidence"] = evidence;
      decisions << line.dump() << '\n';
    }
  }
  write_meta_sidecar(out_path, "filter", settings);

  json summary = {
      {"input", result.report.input_count},
      {"kept", result.report.kept},
      {"dropped", result.report.dropped},
      {"undecided", result.report.undecided},
      {"kept_file", out_path},
  };
  summary["retention_rate"] =
      result.report.retention_rate ? json(*result.report.retention_rate) : json(nullptr);
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_confidence(const std::string& log_path, const std::string& out_path,
                   Settings& settings) {
  const std::vector<LogRecord> records = read_rollout_log(log_path);
  std::vector<ConfidenceRecord> confidence_records;
  confidence_records.reserve(records.size());
  for (const LogRecord& record : records) {
    ConfidenceRecord out;
    out.claim_id = record.claim_id;
    if (const auto answer = answer_from_transcript(record.transcript)) {
      out.pred = answer->label;
    }
    out.gold = record.gold.label;
    out.p_label = record.answer_probability;
    confidence_records.push_back(std::move(out));
  }

  const BucketTable buckets = bucket_records(confidence_records);
  const auto prf = precision_recall(confidence_records);
  write_text_file(out_path, confidence_tables_json(buckets, prf) + "\n");
  write_text_file(out_path + ".buckets.csv", bucket_table_csv(buckets));
  write_text_file(out_path + ".precision_recall.csv", precision_recall_csv(prf));
  settings.note("log", log_path);
  settings.note("out", out_path);
  write_meta_sidecar(out_path, "confidence", settings);

  const json summary = {
      {"records", confidence_records.size()},
      {"excluded_without_probability", buckets.excluded_without_probability},
      {"tables", out_path},
  };
  std::cout << summary.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online claim verification environment, rewards, and evaluation"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Build a retrieval index from a corpus file");
  std::string ingest_corpus, ingest_out;
  ingest->add_option("--corpus", ingest_corpus, "line-delimited JSON corpus")->required();
  ingest->add_option("--out", ingest_out, "index output path")->required();

  // rollout
  auto* rollout = app.add_subcommand("rollout", "Run grouped episodes and write the log");
  RolloutArgs rollout_args;
  std::string policy_spec, model_flag, api_key_flag;
  int timeout_flag = 30000, retries_flag = 3, rate_flag = 0;
  rollout->add_option("--dataset", rollout_args.dataset)->required();
  rollout->add_option("--index", rollout_args.index)->required();
  auto* policy_opt =
      rollout->add_option("--policy", policy_spec,
                          "scripted:FIXTURE or endpoint base URL (falls back to the "
                          "config file, then ONCV_BASE_URL)");
  rollout->add_option("--mode", rollout_args.mode)
      ->check(CLI::IsMember({"online", "offline"}));
  rollout->add_option("--group-size", rollout_args.group_size);
  rollout->add_option("--max-searches", rollout_args.max_searches);
  rollout->add_option("--max-turns", rollout_args.max_turns);
  rollout->add_option("--top-k", rollout_args.top_k);
  rollout->add_option("--temperature", rollout_args.temperature);
  rollout->add_option("--max-tokens", rollout_args.max_tokens);
  rollout->add_option("--jobs", rollout_args.jobs);
  rollout->add_option("--offline-distractors", rollout_args.offline_distractors);
  rollout->add_option("--epsilon-norm", rollout_args.epsilon_norm);
  rollout->add_flag("--no-require-plan", rollout_args.no_require_plan,
                    "drop the leading-plan format rule");
  rollout->add_option("--out", rollout_args.out)->required();
  auto* model_opt = rollout->add_option("--model", model_flag);
  auto* key_opt = rollout->add_option("--api-key", api_key_flag);
  auto* timeout_opt = rollout->add_option("--timeout-ms", timeout_flag);
  auto* retries_opt = rollout->add_option("--retries", retries_flag);
  auto* rate_opt = rollout->add_option("--rate-interval-ms", rate_flag);

  // reward audit
  auto* reward = app.add_subcommand("reward", "Recompute rewards from transcripts and diff");
  std::string reward_log;
  reward->add_option("--log", reward_log)->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Compute metrics over a rollout log");
  std::string evaluate_log, evaluate_report;
  bool strict_nei = false;
  evaluate->add_option("--log", evaluate_log)->required();
  evaluate->add_flag("--strict-nei", strict_nei, "disable the NEI evidence relaxation");
  evaluate->add_option("--report", evaluate_report)->required();

  // filter
  auto* filter = app.add_subcommand("filter", "Judge-filter a dataset");
  std::string filter_dataset, filter_index, judge_spec, filter_out;
  std::string judge_model_flag, judge_key_flag;
  int filter_distractors = 3, filter_jobs = 0;
  int judge_timeout_flag = 30000, judge_retries_flag = 3;
  filter->add_option("--dataset", filter_dataset)->required();
  filter->add_option("--index", filter_index)->required();
  auto* judge_opt = filter->add_option("--judge", judge_spec,
                                       "scripted:FIXTURE or endpoint base URL (falls back "
                                       "to the config file, then ONCV_BASE_URL)");
  filter->add_option("--out", filter_out)->required();
  filter->add_option("--distractors", filter_distractors);
  filter->add_option("--jobs", filter_jobs);
  auto* judge_model_opt = filter->add_option("--model", judge_model_flag);
  auto* judge_key_opt = filter->add_option("--api-key", judge_key_flag);
  auto* judge_timeout_opt = filter->add_option("--timeout-ms", judge_timeout_flag);
  auto* judge_retries_opt = filter->add_option("--retries", judge_retries_flag);

  // confidence
  auto* confidence = app.add_subcommand("confidence", "Confidence buckets and PRF tables");
  std::string confidence_log, confidence_out;
  confidence->add_option("--log", confidence_log)->required();
  confidence->add_option("--out", confidence_out)->required();

  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    Settings settings;
    if (!config_path.empty()) settings.load_file(config_path);

    if (ingest->parsed()) {
      return cmd_ingest(ingest_corpus, ingest_out, settings);
    }
    if (rollout->parsed()) {
      const std::string model = settings.resolve("model", model_opt->count() > 0, model_flag,
                                                 "ONCV_MODEL", "default-model");
      const std::string api_key =
          settings.resolve("api_key", key_opt->count() > 0, api_key_flag, "ONCV_API_KEY", "");
      const int timeout = settings.resolve_int("timeout_ms", timeout_opt->count() > 0,
                                               timeout_flag, "ONCV_TIMEOUT_MS", 30000);
      const int retries =
          settings.resolve_int("retries", retries_opt->count() > 0, retries_flag, nullptr, 3);
      const int rate = settings.resolve_int("rate_interval_ms", rate_opt->count() > 0,
                                            rate_flag, nullptr, 0);
      const std::string policy_value = settings.resolve(
          "policy", policy_opt->count() > 0, policy_spec, "ONCV_BASE_URL", "");
      if (policy_value.empty()) {
        throw std::runtime_error(
            "no policy endpoint: pass --policy, set it in the config file, or export "
            "ONCV_BASE_URL");
      }
      settings.note("mode", rollout_args.mode);
      settings.note("group_size", rollout_args.group_size);
      settings.note("max_searches", rollout_args.max_searches);
      settings.note("max_turns", rollout_args.max_turns);
      settings.note("top_k", rollout_args.top_k);
      settings.note("temperature", rollout_args.temperature);
      settings.note("max_tokens", rollout_args.max_tokens);
      settings.note("epsilon_norm", rollout_args.epsilon_norm);
      settings.note("require_plan", !rollout_args.no_require_plan);
      settings.note("dataset", rollout_args.dataset);
      settings.note("index", rollout_args.index);
      settings.note("out", rollout_args.out);
      auto policy = make_policy(policy_value, model, api_key, timeout, retries, rate);
      return cmd_rollout(rollout_args, *policy, settings);
    }
    if (reward->parsed()) {
      return cmd_reward_audit(reward_log);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(evaluate_log, strict_nei, evaluate_report, settings);
    }
    if (filter->parsed()) {
      const std::string model = settings.resolve("model", judge_model_opt->count() > 0,
                                                 judge_model_flag, "ONCV_MODEL", "default-model");
      const std::string api_key = settings.resolve("api_key", judge_key_opt->count() > 0,
                                                   judge_key_flag, "ONCV_API_KEY", "");
      const int timeout = settings.resolve_int("timeout_ms", judge_timeout_opt->count() > 0,
                                               judge_timeout_flag, "ONCV_TIMEOUT_MS", 30000);
      const int retries = settings.resolve_int("retries", judge_retries_opt->count() > 0,
                                               judge_retries_flag, nullptr, 3);
      const std::string judge_value = settings.resolve(
          "judge", judge_opt->count() > 0, judge_spec, "ONCV_BASE_URL", "");
      if (judge_value.empty()) {
        throw std::runtime_error(
            "no judge endpoint: pass --judge, set it in the config file, or export "
            "ONCV_BASE_URL");
      }
      settings.note("dataset", filter_dataset);
      settings.note("index", filter_index);
      settings.note("distractors", filter_distractors);
      settings.note("out", filter_out);
      auto judge = make_policy(judge_value, model, api_key, timeout, retries, 0);
      return cmd_filter(filter_dataset, filter_index, *judge, filter_out, filter_distractors,
                        filter_jobs, settings);
    }
    if (confidence->parsed()) {
      return cmd_confidence(confidence_log, confidence_out, settings);
    }
    return 1;
  } catch (const std::exception& ex) {
    const json error = {{"error", {{"command", command}, {"message", ex.what()}}}};
    std::cerr << error.dump() << '\n';
    return 1;
  }
}

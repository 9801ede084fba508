#include "oncv/datafilter.hpp"

#include <atomic>
#include <thread>

#include "oncv/prompts.hpp"

namespace oncv {

KeepDecision filter_sample(const ClaimSample& sample, PolicyClient& judge,
                           const std::vector<std::pair<std::string, std::string>>& bundle,
                           const EpisodeConfig& config) {
  PolicyRequest request;
  request.conversation = render_offline_prompt(sample.claim, bundle);
  request.temperature = config.temperature;
  request.max_tokens = config.max_tokens;
  request.claim_id = sample.claim_id;
  request.turn_index = 0;

  const PolicyResponse response = judge.complete(request);

  KeepDecision decision;
  decision.judge_transcript = response.text;
  const Trajectory trajectory = parse_transcript(response.text, ParseMode::Lenient, sample.claim);
  if (!trajectory.answer) {
    decision.reason = "judge emitted no parseable answer";
    return decision;
  }
  decision.judge_label = trajectory.answer->label;
  decision.judge_evidence = trajectory.answer->evidence;

  if (trajectory.answer->label != sample.gold.label) {
    decision.reason = "judge label disagrees with gold";
    return decision;
  }
  if (trajectory.answer->evidence != sample.gold.evidence) {
    // Exact set equality: any missing or extra id is a deviation.
    decision.reason = "judge evidence deviates from gold";
    return decision;
  }
  decision.keep = true;
  decision.reason = "judge fully correct";
  return decision;
}

FilterResult run_filter(const std::vector<ClaimSample>& samples, PolicyClient& judge,
                        const CorpusIndex& corpus, const FilterOptions& options,
                        const EpisodeConfig& config) {
  FilterResult result;
  result.report.input_count = static_cast<int>(samples.size());
  result.decisions.resize(samples.size());

  auto judge_one = [&](std::size_t index) {
    const ClaimSample& sample = samples[index];
    FilterDecisionRecord& record = result.decisions[index];
    record.claim_id = sample.claim_id;
    try {
      const auto bundle = build_evidence_bundle(sample, corpus, options.distractors);
      record.decision = filter_sample(sample, judge, bundle, config);
      record.outcome = record.decision.keep ? FilterOutcome::Kept : FilterOutcome::Dropped;
    } catch (const PolicyTransportError& ex) {
      record.outcome = FilterOutcome::Undecided;
      record.decision.reason = std::string("judge unavailable: ") + ex.what();
    } catch (const NotFoundError& ex) {
      record.outcome = FilterOutcome::Undecided;
      record.decision.reason = std::string("bundle incomplete: ") + ex.what();
    }
  };

  int jobs = options.jobs > 0 ? options.jobs
                              : static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  jobs = std::min<int>(jobs, static_cast<int>(samples.size()));

  if (jobs <= 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) judge_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(jobs));
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        while (true) {
          const std::size_t index = next.fetch_add(1);
          if (index >= samples.size()) return;
          judge_one(index);
        }
      });
    }
    for (std::thread& worker : workers) worker.join();
  }

  for (std::size_t i = 0; i < samples.size(); ++i) {
    switch (result.decisions[i].outcome) {
      case FilterOutcome::Kept:
        ++result.report.kept;
        result.kept_samples.push_back(samples[i]);
        break;
      case FilterOutcome::Dropped:
        ++result.report.dropped;
        break;
      case FilterOutcome::Undecided:
        ++result.report.undecided;
        break;
    }
  }
  if (result.report.input_count > 0) {
    result.report.retention_rate = static_cast<double>(result.report.kept) /
                                   static_cast<double>(result.report.input_count);
  }
  return result;
}

}  // namespace oncv

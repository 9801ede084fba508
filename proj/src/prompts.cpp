#include "oncv/prompts.hpp"

#include "oncv/protocol.hpp"

namespace oncv {
namespace {

constexpr std::string_view kLabelGlossary =
    "- Answer Labels respectively stand for:\n"
    "  SUPPORT: The claim is consistent with the cited evidence and the evidence is "
    "sufficient to confirm the claim.\n"
    "  REFUTE: The claim contradicts the cited evidence and the evidence is sufficient "
    "to disprove the claim.\n"
    "  NOT ENOUGH INFO: The available evidence is insufficient to determine whether the "
    "claim is true or false.\n";

constexpr std::string_view kForcedAnswerInstruction =
    "\nYour search budget is used up. Emit your final <answer> block now, with no "
    "further <search> queries.\n";

}  // namespace

std::string render_online_prompt(std::string_view claim, int max_searches) {
  std::string prompt;
  prompt.reserve(2048);
  prompt.append("You are a claim-verification assistant. You MUST follow this protocol exactly:\n\n");
  prompt.append("<plan>...</plan>\n");
  prompt.append("- Once at the start: sketch your high-level strategy, such as claim "
                "decomposition, entity recognition, etc.\n\n");
  prompt.append("<search>...</search>\n");
  prompt.append("- When you need a fact: emit exactly this tag with your query.\n");
  prompt.append("- To make the most of your search turns, don't repeat identical queries.\n");
  prompt.append("- You can search at most ").append(std::to_string(max_searches)).append(" times.\n\n");
  prompt.append("<information>\n[[e_1]]: info1\n[[e_2]]: info2\n...\n</information>\n");
  prompt.append("- You will be given claim related information in the format above.\n\n");
  prompt.append("<think>...</think>\n");
  prompt.append("- Use for every piece of reasoning; do not state your final verdict here.\n");
  prompt.append("- You must conduct reasoning inside <think> and </think> first every time "
                "you get new information.\n\n");
  prompt.append("<answer>\nLabel: SUPPORT / REFUTE / NOT ENOUGH INFO\n"
                "Evidence: [[e_1]], [[e_3]], ...\n</answer>\n");
  prompt.append("- Emit exactly once at the end, no extra text or tags.\n");
  prompt.append("- Evidence ids such as e_1 will be replaced by real ids from the corpus. "
                "Include only those ids in your evidence list.\n");
  prompt.append("- Evidence outputs must strictly enforce the format [[e_i]], [[e_j]]...\n");
  prompt.append(kLabelGlossary);
  prompt.append("\n- Process: plan -> (search -> information -> think) repeat until "
                "conclusion -> answer\n\n");
  prompt.append("Verify the claim: ").append(claim).append("\n");
  return prompt;
}

std::string render_offline_prompt(
    std::string_view claim,
    const std::vector<std::pair<std::string, std::string>>& evidence) {
  std::string prompt;
  prompt.reserve(2048);
  prompt.append("You are a claim-verification assistant. You MUST follow this protocol exactly:\n\n");
  prompt.append("<information>\n[[e_1]]: info1\n[[e_2]]: info2\n...\n</information>\n");
  prompt.append("- You will be given claim related information above.\n\n");
  prompt.append("<think>...</think>\n");
  prompt.append("- Use for every piece of reasoning.\n");
  prompt.append("- During reasoning, you must verify the claim step by step based on the "
                "given information.\n\n");
  prompt.append("<answer>\nLabel: SUPPORT / REFUTE / NOT ENOUGH INFO\n"
                "Evidence: [[e_1]], [[e_3]], ...\n</answer>\n");
  prompt.append("- Emit exactly once at the end, no extra text or tags.\n");
  prompt.append("- Evidence ids such as e_1 will be replaced by real ids from the corpus. "
                "You must include useful real ids when answering.\n");
  prompt.append("- Evidence outputs must strictly enforce the format [[e_i]], [[e_j]]...\n");
  prompt.append(kLabelGlossary);
  prompt.append("\nVerify the claim:\n").append(claim).append("\n");
  if (evidence.empty()) {
    prompt.append("<information>\n</information>\n");
  } else {
    prompt.append(render_information_block(evidence)).push_back('\n');
  }
  return prompt;
}

std::string_view forced_answer_instruction() { return kForcedAnswerInstruction; }

}  // namespace oncv

#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace oncv {

// Protocol instructions handed to the policy. The online variant drives the
// multi-turn search loop; the offline variant ships the evidence inside the
// prompt and asks only for reasoning plus the answer.
std::string render_online_prompt(std::string_view claim, int max_searches);

std::string render_offline_prompt(
    std::string_view claim,
    const std::vector<std::pair<std::string, std::string>>& evidence);

// Environment message appended (to the conversation only) when the search
// budget is spent without an answer.
std::string_view forced_answer_instruction();

}  // namespace oncv

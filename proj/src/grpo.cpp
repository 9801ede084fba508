#include "oncv/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace oncv {

std::vector<double> group_advantages(std::span<const double> rewards, double epsilon_norm) {
  if (rewards.empty()) {
    throw std::invalid_argument("group_advantages: empty group");
  }
  if (!(epsilon_norm > 0.0)) {
    throw std::invalid_argument("group_advantages: epsilon_norm must be positive");
  }
  for (double r : rewards) {
    if (!std::isfinite(r)) {
      throw std::invalid_argument("group_advantages: non-finite reward");
    }
  }

  const auto [min_it, max_it] = std::minmax_element(rewards.begin(), rewards.end());
  if (*min_it == *max_it) {
    // Zero-variance group: every numerator is exactly zero.
    return std::vector<double>(rewards.size(), 0.0);
  }

  const double n = static_cast<double>(rewards.size());
  double sum = 0.0;
  for (double r : rewards) sum += r;
  const double mean = sum / n;

  double sq = 0.0;
  for (double r : rewards) {
    const double d = r - mean;
    sq += d * d;
  }
  const double stddev = std::sqrt(sq / n);  // population std

  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) {
    out.push_back((r - mean) / (stddev + epsilon_norm));
  }
  return out;
}

double clipped_surrogate(std::span<const SurrogateInput> inputs) {
  if (inputs.empty()) {
    throw std::invalid_argument("clipped_surrogate: empty batch");
  }
  const double clip = inputs.front().clip_epsilon;
  if (!(clip > 0.0 && clip < 1.0)) {
    throw std::invalid_argument("clipped_surrogate: clip_epsilon must lie in (0,1)");
  }

  double sum = 0.0;
  for (const SurrogateInput& input : inputs) {
    if (!(input.ratio > 0.0) || !std::isfinite(input.ratio)) {
      throw std::invalid_argument("clipped_surrogate: ratio must be finite and positive");
    }
    if (input.clip_epsilon != clip) {
      throw std::invalid_argument("clipped_surrogate: clip_epsilon must match across the batch");
    }
    const double clipped = std::clamp(input.ratio, 1.0 - clip, 1.0 + clip);
    sum += std::min(input.ratio * input.advantage, clipped * input.advantage);
  }
  return sum / static_cast<double>(inputs.size());
}

double clipped_surrogate(std::span<const SurrogateInput> inputs, std::span<const double> kl,
                         double kl_beta) {
  if (kl.size() != inputs.size()) {
    throw std::invalid_argument("clipped_surrogate: kl estimates must match batch size");
  }
  double kl_sum = 0.0;
  for (double value : kl) kl_sum += value;
  const double kl_mean = kl_sum / static_cast<double>(kl.size());
  return clipped_surrogate(inputs) - kl_beta * kl_mean;
}

}  // namespace oncv

#pragma once

#include <span>
#include <vector>

namespace oncv {

inline constexpr double kDefaultEpsilonNorm = 1e-6;
inline constexpr double kDefaultClipEpsilon = 0.2;
inline constexpr double kDefaultKlBeta = 0.001;

// Group-relative advantages: (R_i - mean) / (population std + epsilon_norm),
// in input order. Groups with identical rewards map to exact zeros.
// Throws std::invalid_argument on an empty group or non-positive epsilon.
std::vector<double> group_advantages(std::span<const double> rewards,
                                     double epsilon_norm = kDefaultEpsilonNorm);

struct SurrogateInput {
  double ratio = 1.0;          // pi_new / pi_old for the rollout, > 0
  double advantage = 0.0;      // group-relative advantage
  double clip_epsilon = kDefaultClipEpsilon;  // must match across the batch
};

// Mean over the batch of min(ratio * adv, clip(ratio, 1-eps, 1+eps) * adv).
// Throws std::invalid_argument on empty input, non-positive/non-finite
// ratios, clip epsilon outside (0,1), or mixed clip epsilons.
double clipped_surrogate(std::span<const SurrogateInput> inputs);

// Same objective minus beta * mean(kl); kl estimates are caller-supplied,
// one per rollout.
double clipped_surrogate(std::span<const SurrogateInput> inputs,
                         std::span<const double> kl, double kl_beta = kDefaultKlBeta);

}  // namespace oncv

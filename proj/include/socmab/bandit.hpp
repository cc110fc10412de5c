#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>

#include "socmab/arm.hpp"
#include "socmab/errors.hpp"

namespace socmab {

/// Per-arm pull counts and reward sums for one participant.
struct ArmStats {
  std::array<std::uint64_t, kArmCount> pulls{};
  std::array<double, kArmCount> reward_sum{};

  std::uint64_t total_pulls() const { return pulls[0] + pulls[1] + pulls[2]; }

  std::uint64_t pulls_of(ArmId a) const { return pulls[arm_index(a)]; }

  /// Empirical mean; absent for an arm that was never pulled.
  std::optional<double> mean(ArmId a) const {
    const auto i = arm_index(a);
    if (pulls[i] == 0) return std::nullopt;
    return reward_sum[i] / static_cast<double>(pulls[i]);
  }

  friend bool operator==(const ArmStats&, const ArmStats&) = default;
};

struct RewardWeights {
  double motivation = 0.5;
  double steps = 0.5;

  void validate() const {
    if (!(motivation >= 0.0 && motivation <= 1.0 && steps >= 0.0 && steps <= 1.0) ||
        std::abs(motivation + steps - 1.0) > 1e-12) {
      throw DomainError("reward weights must lie in [0,1] and sum to 1");
    }
  }

  friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

struct LikertScale {
  int min = 1;
  int max = 5;

  bool contains(int v) const { return v >= min && v <= max; }
  int span() const { return max - min; }

  friend bool operator==(const LikertScale&, const LikertScale&) = default;
};

struct Reward {
  double value = 0.0;
  double motivation_component = 0.0;
  std::optional<double> steps_component;  // absent on a non-wear day

  friend bool operator==(const Reward&, const Reward&) = default;
};

/// Motivation change mapped affinely onto [0,1]: a drop across the whole scale is 0,
/// no change is 0.5, a rise across the whole scale is 1.
inline double motivation_component(int pre, int post, LikertScale scale = {}) {
  if (!scale.contains(pre) || !scale.contains(post)) {
    throw DomainError("Likert value outside [" + std::to_string(scale.min) + "," +
                      std::to_string(scale.max) + "]");
  }
  const double span = scale.span();
  return (static_cast<double>(post - pre) + span) / (2.0 * span);
}

/// Steps relative to the participant's baseline; twice the baseline saturates at 1.
inline double steps_component(std::uint64_t steps, double baseline_mean) {
  if (!(baseline_mean > 0.0)) throw DomainError("baseline mean must be positive");
  return std::min(static_cast<double>(steps) / (2.0 * baseline_mean), 1.0);
}

/// Daily reward. `steps` is absent on a non-wear day, in which case the motivation
/// component carries the full weight.
inline Reward compute_reward(int pre, int post, std::optional<std::uint64_t> steps,
                             double baseline_mean, const RewardWeights& weights = {},
                             LikertScale scale = {}) {
  weights.validate();
  if (!(baseline_mean > 0.0)) throw DomainError("baseline mean must be positive");
  Reward r;
  r.motivation_component = motivation_component(pre, post, scale);
  if (steps) {
    r.steps_component = steps_component(*steps, baseline_mean);
    r.value = weights.motivation * r.motivation_component + weights.steps * *r.steps_component;
  } else {
    r.value = r.motivation_component;
  }
  return r;
}

inline ArmStats update_stats(ArmStats stats, ArmId arm, double reward_value) {
  const auto i = arm_index(arm);
  stats.pulls[i] += 1;
  stats.reward_sum[i] += reward_value;
  return stats;
}

inline ArmStats update_stats(const ArmStats& stats, ArmId arm, const Reward& reward) {
  return update_stats(stats, arm, reward.value);
}

/// UCB1 index mean + c * sqrt(2 ln N / n). Requires the arm to have been pulled.
inline double ucb_score(const ArmStats& stats, ArmId arm, double exploration_c) {
  const auto n = static_cast<double>(stats.pulls_of(arm));
  const auto total = static_cast<double>(stats.total_pulls());
  return *stats.mean(arm) + exploration_c * std::sqrt(2.0 * std::log(total) / n);
}

namespace detail {

template <class URBG>
ArmId uniform_among(const std::array<bool, kArmCount>& eligible, URBG& rng) {
  std::array<ArmId, kArmCount> pool{};
  int n = 0;
  for (ArmId a : kAllArms)
    if (eligible[arm_index(a)]) pool[n++] = a;
  if (n == 1) return pool[0];
  std::uniform_int_distribution<int> pick(0, n - 1);
  return pool[pick(rng)];
}

// Scores within this distance of the maximum count as tied.
inline constexpr double kTieTolerance = 1e-12;

template <class URBG>
ArmId argmax_random_tie(const std::array<double, kArmCount>& scores, URBG& rng) {
  const double best = *std::max_element(scores.begin(), scores.end());
  std::array<bool, kArmCount> tied{};
  for (std::size_t i = 0; i < kArmCount; ++i) tied[i] = scores[i] >= best - kTieTolerance;
  return uniform_among(tied, rng);
}

template <class URBG>
std::optional<ArmId> unpulled_arm(const ArmStats& stats, URBG& rng) {
  std::array<bool, kArmCount> unpulled{};
  bool any = false;
  for (std::size_t i = 0; i < kArmCount; ++i) any |= unpulled[i] = stats.pulls[i] == 0;
  if (!any) return std::nullopt;
  return uniform_among(unpulled, rng);
}

}  // namespace detail

template <class URBG>
ArmId select_arm_uniform(URBG& rng) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(kArmCount) - 1);
  return arm_from_index(static_cast<std::size_t>(pick(rng)));
}

/// UCB1. Unpulled arms are tried first (uniformly among them); otherwise the highest
/// index wins with ties broken uniformly through `rng`.
template <class URBG>
ArmId select_arm_ucb(const ArmStats& stats, double exploration_c, URBG& rng) {
  if (!(exploration_c > 0.0)) throw DomainError("exploration constant must be positive");
  if (auto a = detail::unpulled_arm(stats, rng)) return *a;
  std::array<double, kArmCount> scores{};
  for (ArmId a : kAllArms) scores[arm_index(a)] = ucb_score(stats, a, exploration_c);
  return detail::argmax_random_tie(scores, rng);
}

/// Epsilon-greedy: explore uniformly with probability epsilon, else exploit the best
/// empirical mean. Unpulled arms are tried first.
template <class URBG>
ArmId select_arm_epsilon_greedy(const ArmStats& stats, double epsilon, URBG& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("epsilon must lie in [0,1]");
  if (auto a = detail::unpulled_arm(stats, rng)) return *a;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < epsilon) return select_arm_uniform(rng);
  std::array<double, kArmCount> means{};
  for (ArmId a : kAllArms) means[arm_index(a)] = *stats.mean(a);
  return detail::argmax_random_tie(means, rng);
}

struct Ucb1 {
  double exploration_c = 1.0;
  friend bool operator==(const Ucb1&, const Ucb1&) = default;
};

struct EpsilonGreedy {
  double epsilon = 0.1;
  friend bool operator==(const EpsilonGreedy&, const EpsilonGreedy&) = default;
};

using Strategy = std::variant<Ucb1, EpsilonGreedy>;

template <class URBG>
ArmId select_arm(const ArmStats& stats, const Strategy& strategy, URBG& rng) {
  return std::visit(
      [&](const auto& s) -> ArmId {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Ucb1>)
          return select_arm_ucb(stats, s.exploration_c, rng);
        else
          return select_arm_epsilon_greedy(stats, s.epsilon, rng);
      },
      strategy);
}

}  // namespace socmab

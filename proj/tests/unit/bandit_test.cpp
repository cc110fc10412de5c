#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "socmab/bandit.hpp"

using namespace socmab;

namespace {

ArmStats make_stats(std::array<std::uint64_t, 3> pulls, std::array<double, 3> means) {
  ArmStats s;
  for (int i = 0; i < 3; ++i) {
    s.pulls[i] = pulls[i];
    s.reward_sum[i] = means[i] * static_cast<double>(pulls[i]);
  }
  return s;
}

// Straight transcription of the reward definition, kept apart from the library.
double hand_reward(int pre, int post, std::optional<double> steps, double baseline) {
  const double m = ((post - pre) + 4.0) / 8.0;
  if (!steps) return m;
  const double s = std::min(*steps / (2.0 * baseline), 1.0);
  return 0.5 * m + 0.5 * s;
}

}  // namespace

TEST(Reward, WorkedExamples) {
  EXPECT_DOUBLE_EQ(compute_reward(3, 3, 6000, 6000).value, 0.5);
  // m = 6/8, s = 12000/12000 = 1
  EXPECT_DOUBLE_EQ(compute_reward(2, 4, 12000, 6000).value, 0.5 * 0.75 + 0.5 * 1.0);
  EXPECT_DOUBLE_EQ(compute_reward(2, 4, std::nullopt, 6000).value, 0.75);
  EXPECT_DOUBLE_EQ(compute_reward(5, 1, 0, 6000).value, 0.0);
  EXPECT_DOUBLE_EQ(compute_reward(1, 5, 50000, 6000).value, 1.0);
}

TEST(Reward, ComponentsAreReported) {
  const auto r = compute_reward(2, 3, 3000, 6000);
  EXPECT_DOUBLE_EQ(r.motivation_component, 5.0 / 8.0);
  ASSERT_TRUE(r.steps_component);
  EXPECT_DOUBLE_EQ(*r.steps_component, 0.25);
  EXPECT_FALSE(compute_reward(2, 3, std::nullopt, 6000).steps_component);
}

TEST(Reward, SweepMatchesHandFormulaAndStaysInUnitInterval) {
  const std::vector<std::optional<double>> steps{0.0, 3000.0, 6000.0, 12000.0, 20000.0, std::nullopt};
  for (int pre = 1; pre <= 5; ++pre)
    for (int post = 1; post <= 5; ++post)
      for (const auto& st : steps) {
        std::optional<std::uint64_t> s;
        if (st) s = static_cast<std::uint64_t>(*st);
        const double v = compute_reward(pre, post, s, 6000).value;
        EXPECT_NEAR(v, hand_reward(pre, post, st, 6000), 1e-12);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
}

TEST(Reward, MotivationComponentReflectsAboutHalf) {
  for (int a = 1; a <= 5; ++a)
    for (int b = 1; b <= 5; ++b)
      EXPECT_NEAR(motivation_component(a, b) + motivation_component(b, a), 1.0, 1e-15);
}

TEST(Reward, EqualWeightsAreSymmetricInComponents) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  const RewardWeights w{};
  for (int i = 0; i < 1000; ++i) {
    const double m = u(rng), s = u(rng);
    EXPECT_DOUBLE_EQ(w.motivation * m + w.steps * s, w.motivation * s + w.steps * m);
  }
}

TEST(Reward, RejectsBadInput) {
  EXPECT_THROW(compute_reward(0, 3, 100, 6000), DomainError);
  EXPECT_THROW(compute_reward(3, 6, 100, 6000), DomainError);
  EXPECT_THROW(compute_reward(3, 3, 100, 0.0), DomainError);
  EXPECT_THROW(compute_reward(3, 3, 100, 6000, RewardWeights{0.7, 0.7}), DomainError);
  EXPECT_THROW(steps_component(10, -1.0), DomainError);
}

TEST(Reward, CustomScaleAndWeights) {
  const LikertScale seven{1, 7};
  EXPECT_DOUBLE_EQ(motivation_component(1, 7, seven), 1.0);
  EXPECT_DOUBLE_EQ(compute_reward(4, 4, 6000, 6000, RewardWeights{1.0, 0.0}).value, 0.5);
  EXPECT_DOUBLE_EQ(compute_reward(4, 4, 12000, 6000, RewardWeights{0.0, 1.0}).value, 1.0);
}

TEST(UpdateStats, Examples) {
  auto s = update_stats(ArmStats{}, ArmId::Upward, 0.8);
  EXPECT_EQ(s.pulls, (std::array<std::uint64_t, 3>{0, 0, 1}));
  EXPECT_DOUBLE_EQ(s.reward_sum[2], 0.8);

  ArmStats t = make_stats({1, 1, 1}, {0.2, 0.5, 0.9});
  t = update_stats(t, ArmId::Downward, 0.0);
  EXPECT_EQ(t.pulls, (std::array<std::uint64_t, 3>{2, 1, 1}));
  EXPECT_DOUBLE_EQ(t.reward_sum[0], 0.2);
  EXPECT_DOUBLE_EQ(t.reward_sum[1], 0.5);
}

TEST(UpdateStats, FoldOfRandomSequence) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> arm(0, 2);
  std::uniform_real_distribution<double> val(0, 1);
  ArmStats s;
  std::array<std::uint64_t, 3> pulls{};
  std::array<double, 3> sums{};
  for (int i = 0; i < 100; ++i) {
    const int a = arm(rng);
    const double v = val(rng);
    s = update_stats(s, arm_from_index(a), v);
    pulls[a]++;
    sums[a] += v;
  }
  EXPECT_EQ(s.pulls, pulls);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(s.reward_sum[i], sums[i]);
}

TEST(Ucb, Examples) {
  std::mt19937_64 rng(1);
  EXPECT_EQ(select_arm_ucb(make_stats({5, 5, 5}, {0.2, 0.5, 0.9}), 1.0, rng), ArmId::Upward);
  EXPECT_EQ(select_arm_ucb(make_stats({1, 10, 10}, {1.0, 0.6, 0.6}), 1.0, rng), ArmId::Downward);
  for (int i = 0; i < 20; ++i)
    EXPECT_EQ(select_arm_ucb(make_stats({0, 7, 7}, {0.0, 0.9, 0.9}), 1.0, rng), ArmId::Downward);
  EXPECT_NEAR(ucb_score(make_stats({1, 10, 10}, {1.0, 0.6, 0.6}), ArmId::Downward, 1.0) - 1.0,
              std::sqrt(2.0 * std::log(21.0)), 1e-12);
}

TEST(Ucb, UnpulledArmsChosenUniformly) {
  std::mt19937_64 rng(5);
  std::array<int, 3> hits{};
  for (int i = 0; i < 3000; ++i) hits[arm_index(select_arm_ucb(make_stats({0, 0, 4}, {0, 0, 1}), 1.0, rng))]++;
  EXPECT_EQ(hits[2], 0);
  EXPECT_NEAR(hits[0] / 3000.0, 0.5, 0.05);
}

TEST(Ucb, TiesBrokenAtRandom) {
  std::mt19937_64 rng(9);
  std::set<ArmId> seen;
  for (int i = 0; i < 200; ++i) seen.insert(select_arm_ucb(make_stats({4, 4, 4}, {0.5, 0.5, 0.5}), 1.0, rng));
  EXPECT_EQ(seen.size(), 3u);
}

TEST(Ucb, MatchesBruteForceOnRandomTables) {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> pulls(1, 40);
  std::uniform_real_distribution<double> mean(0, 1), cdist(0.1, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto s = make_stats({static_cast<std::uint64_t>(pulls(gen)), static_cast<std::uint64_t>(pulls(gen)),
                               static_cast<std::uint64_t>(pulls(gen))},
                              {mean(gen), mean(gen), mean(gen)});
    const double c = cdist(gen);
    double best = -1;
    int arg = -1;
    const double total = static_cast<double>(s.pulls[0] + s.pulls[1] + s.pulls[2]);
    for (int i = 0; i < 3; ++i) {
      const double n = static_cast<double>(s.pulls[i]);
      const double score = s.reward_sum[i] / n + c * std::sqrt(2 * std::log(total) / n);
      if (score > best) best = score, arg = i;
    }
    std::mt19937_64 rng(trial);
    EXPECT_EQ(arm_index(select_arm_ucb(s, c, rng)), static_cast<std::size_t>(arg));
  }
}

TEST(Ucb, RejectsNonPositiveExploration) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(select_arm_ucb(ArmStats{}, 0.0, rng), DomainError);
}

TEST(Uniform, FrequenciesAndDeterminism) {
  std::mt19937_64 rng(77);
  std::array<int, 3> hits{};
  for (int i = 0; i < 30000; ++i) hits[arm_index(select_arm_uniform(rng))]++;
  for (int h : hits) {
    EXPECT_GE(h / 30000.0, 0.32);
    EXPECT_LE(h / 30000.0, 0.347);
  }
  std::mt19937_64 a(4), b(4), c(5);
  bool differs = false;
  for (int i = 0; i < 10; ++i) {
    const auto x = select_arm_uniform(a);
    EXPECT_EQ(x, select_arm_uniform(b));
    differs |= x != select_arm_uniform(c);
  }
  EXPECT_TRUE(differs);
}

TEST(EpsilonGreedy, ExploitsBestMeanMostly) {
  std::mt19937_64 rng(8);
  const auto s = make_stats({5, 5, 5}, {0.1, 0.9, 0.2});
  int best = 0;
  for (int i = 0; i < 10000; ++i) best += select_arm_epsilon_greedy(s, 0.1, rng) == ArmId::Mixed;
  // 0.9 exploit + 0.1/3 explore
  EXPECT_NEAR(best / 10000.0, 0.9 + 0.1 / 3, 0.015);
  EXPECT_EQ(select_arm_epsilon_greedy(make_stats({3, 0, 3}, {1, 0, 1}), 0.0, rng), ArmId::Mixed);
  EXPECT_THROW(select_arm_epsilon_greedy(s, 1.5, rng), DomainError);
}

TEST(Strategy, DispatchesOnVariant) {
  std::mt19937_64 rng(1);
  const auto s = make_stats({5, 5, 5}, {0.2, 0.5, 0.9});
  EXPECT_EQ(select_arm(s, Strategy{Ucb1{}}, rng), ArmId::Upward);
  EXPECT_EQ(select_arm(s, Strategy{EpsilonGreedy{0.0}}, rng), ArmId::Upward);
}

TEST(Regret, UcbBeatsUniformOnStationaryBandit) {
  const std::array<double, 3> means{0.3, 0.5, 0.8};
  int wins = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed), noise(seed + 1000), urng(seed + 2000);
    std::bernoulli_distribution draws[3]{std::bernoulli_distribution(means[0]),
                                         std::bernoulli_distribution(means[1]),
                                         std::bernoulli_distribution(means[2])};
    ArmStats s;
    int ucb_best = 0, uni_best = 0;
    for (int round = 1; round <= 200; ++round) {
      const ArmId a = select_arm_ucb(s, 1.0, rng);
      s = update_stats(s, a, draws[arm_index(a)](noise) ? 1.0 : 0.0);
      const ArmId u = select_arm_uniform(urng);
      if (round > 150) ucb_best += a == ArmId::Upward, uni_best += u == ArmId::Upward;
    }
    wins += ucb_best > uni_best;
  }
  EXPECT_GE(wins, 95);
}

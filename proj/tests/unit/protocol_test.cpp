#include <map>
#include <random>

#include <gtest/gtest.h>

#include "socmab/profiles.hpp"
#include "socmab/protocol.hpp"

using namespace socmab;
namespace ev = socmab::session_event;

namespace {

ParticipantModel make_participant(Condition c) {
  ParticipantModel p;
  p.participant_id = "p0001";
  p.condition = c;
  p.gender = "female";
  std::mt19937_64 rng(1);
  p.baseline_schedule = make_baseline_schedule(rng);
  return p;
}

DailySession closed_session(int pre, int post, ArmId arm = ArmId::Upward, int day = 1) {
  DailySession s;
  s.session_id = "p0001-s01";
  s.participant_id = "p0001";
  s.day_index = day;
  s.arm = arm;
  s.pre_motivation = pre;
  s.post_motivation = post;
  s.state = SessionState::Closed;
  return s;
}

std::vector<ProfileCard> four_cards() {
  std::mt19937_64 rng(3);
  return generate_cards(ArmId::Mixed, 6000, rng, AttributePool::defaults());
}

ArmStats make_stats(std::array<std::uint64_t, 3> pulls, std::array<double, 3> means) {
  ArmStats s;
  for (int i = 0; i < 3; ++i) s.pulls[i] = pulls[i], s.reward_sum[i] = means[i] * pulls[i];
  return s;
}

}  // namespace

TEST(AssignCondition, FemaleBlocksBalance) {
  EnrollmentRegistry reg;
  std::mt19937_64 rng(1);
  int control = 0;
  for (int i = 0; i < 10; ++i) control += assign_condition(reg, "female", rng) == Condition::Control;
  EXPECT_EQ(control, 5);
}

TEST(AssignCondition, OddCountSplitsByOne) {
  EnrollmentRegistry reg;
  std::mt19937_64 rng(2);
  int control = 0;
  for (int i = 0; i < 7; ++i) control += assign_condition(reg, "male", rng) == Condition::Control;
  EXPECT_TRUE(control == 3 || control == 4);
}

TEST(AssignCondition, EveryBlockHasOneOfEach) {
  EnrollmentRegistry reg;
  std::mt19937_64 rng(9);
  std::map<std::string, std::vector<Condition>> seq;
  const std::vector<std::string> genders{"female", "male", "other"};
  std::uniform_int_distribution<int> g(0, 2);
  std::mt19937_64 order(4);
  for (int i = 0; i < 300; ++i) {
    const auto& gender = genders[g(order)];
    seq[gender].push_back(assign_condition(reg, gender, rng));
  }
  for (const auto& [_, v] : seq)
    for (std::size_t i = 0; i + 1 < v.size(); i += 2) EXPECT_NE(v[i], v[i + 1]);
}

TEST(AssignCondition, DeterministicAndRejectsUnknownGender) {
  auto run = [](std::uint64_t seed) {
    EnrollmentRegistry reg;
    std::mt19937_64 rng(seed);
    std::vector<Condition> out;
    for (int i = 0; i < 20; ++i) out.push_back(assign_condition(reg, i % 3 ? "female" : "male", rng));
    return out;
  };
  EXPECT_EQ(run(5), run(5));
  EnrollmentRegistry reg;
  std::mt19937_64 rng(1);
  EXPECT_THROW(assign_condition(reg, "robot", rng), ValidationError);
  EXPECT_EQ(reg.count("robot"), 0u);
}

TEST(BaselineSchedule, BalancedAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    const auto s = make_baseline_schedule(rng);
    ASSERT_EQ(s.size(), 9u);
    std::array<int, 3> counts{};
    for (ArmId a : s) counts[arm_index(a)]++;
    EXPECT_EQ(counts, (std::array<int, 3>{3, 3, 3}));
  }
  std::mt19937_64 a(3), b(3);
  EXPECT_EQ(make_baseline_schedule(a), make_baseline_schedule(b));
  std::mt19937_64 c(3);
  EXPECT_THROW(make_baseline_schedule(c, 8), DomainError);
}

TEST(BaselineSchedule, FirstSlotUniform) {
  std::array<int, 3> first{};
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    std::mt19937_64 rng(seed);
    first[arm_index(make_baseline_schedule(rng)[0])]++;
  }
  for (int n : first) EXPECT_NEAR(n / 10000.0, 1.0 / 3, 0.02);
}

TEST(ArmForDay, BaselineDispatch) {
  const auto p = make_participant(Condition::Experimental);
  const StudyConfig cfg;
  std::mt19937_64 rng(1);
  for (int d = 1; d <= 9; ++d) EXPECT_EQ(arm_for_day(p, d, cfg, rng), p.baseline_schedule[d - 1]);
  EXPECT_THROW(arm_for_day(p, 0, cfg, rng), DomainError);
  EXPECT_THROW(arm_for_day(p, 22, cfg, rng), DomainError);
}

TEST(ArmForDay, ControlIsUniformAndNeverReadsStats) {
  auto p = make_participant(Condition::Control);
  p.arm_stats = make_stats({5, 5, 5}, {0.2, 0.5, 0.9});
  const StudyConfig cfg;
  std::array<int, 3> hits{};
  int reads = 0;
  auto source = [&]() -> const ArmStats& {
    ++reads;
    return p.arm_stats;
  };
  for (std::uint64_t seed = 0; seed < 3000; ++seed) {
    std::mt19937_64 rng(seed);
    hits[arm_index(arm_for_day(p, 15, cfg, rng, source))]++;
  }
  EXPECT_EQ(reads, 0);
  for (int h : hits) EXPECT_NEAR(h / 3000.0, 1.0 / 3, 0.04);
}

TEST(ArmForDay, ExperimentalUsesStrategy) {
  auto p = make_participant(Condition::Experimental);
  p.arm_stats = make_stats({5, 5, 5}, {0.2, 0.5, 0.9});
  StudyConfig cfg;
  int reads = 0;
  auto source = [&]() -> const ArmStats& {
    ++reads;
    return p.arm_stats;
  };
  std::mt19937_64 rng(1);
  EXPECT_EQ(arm_for_day(p, 15, cfg, rng, source), ArmId::Upward);
  EXPECT_EQ(reads, 1);
}

TEST(ArmForDay, ColdStartReadsAdaptiveStatsOnly) {
  auto p = make_participant(Condition::Experimental);
  p.arm_stats = make_stats({5, 5, 5}, {0.2, 0.5, 0.9});
  p.adaptive_stats = make_stats({0, 1, 1}, {0, 0.5, 0.9});
  StudyConfig cfg;
  cfg.warm_start = false;
  std::mt19937_64 rng(1);
  EXPECT_EQ(arm_for_day(p, 12, cfg, rng), ArmId::Downward);
}

TEST(AdvanceSession, FirstTransition) {
  DailySession s;
  const Timestamp t{std::chrono::seconds(100)};
  const auto next = advance_session(s, ev::PreMotivation{3}, t);
  EXPECT_EQ(next.state, SessionState::PreRated);
  EXPECT_EQ(next.pre_motivation, 3);
  EXPECT_EQ(next.entered_at[1], t);
  EXPECT_EQ(s.state, SessionState::Started);
}

TEST(AdvanceSession, FullScriptReachesClosed) {
  const auto cards = four_cards();
  DailySession s;
  Timestamp t{};
  auto step = [&](const SessionEvent& e) {
    t += std::chrono::seconds(1);
    s = advance_session(s, e, t);
  };
  step(ev::PreMotivation{2});
  step(ev::IssueCards{cards, 6000});
  step(ev::Preview{cards[1].card_id});
  step(ev::Preview{cards[3].card_id});
  step(ev::Select{cards[3].card_id});
  step(ev::Unlock{"steps"});
  step(ev::Unlock{"interests"});
  step(ev::PostMotivation{4});
  step(ev::Close{});
  EXPECT_EQ(s.state, SessionState::Closed);
  EXPECT_EQ(s.pre_motivation, 2);
  EXPECT_EQ(s.post_motivation, 4);
  EXPECT_EQ(s.selection, cards[3].card_id);
  ASSERT_EQ(s.previews.size(), 2u);
  EXPECT_EQ(s.previews[0].value, cards[1].card_id);
  ASSERT_EQ(s.unlock_events.size(), 2u);
  EXPECT_EQ(s.reference_steps, 6000u);
  EXPECT_EQ(s.ordinal_of(cards[3].card_id), 4u);
  for (int i = 0; i <= 5; ++i) EXPECT_TRUE(s.entered_at[i].has_value() || i == 0);
}

TEST(AdvanceSession, OutOfOrderEventsAreSequencingErrors) {
  const auto cards = four_cards();
  DailySession s;
  EXPECT_THROW(advance_session(s, ev::IssueCards{cards, 6000}, {}), SequencingError);
  EXPECT_THROW(advance_session(s, ev::Close{}, {}), SequencingError);
  s = advance_session(s, ev::PreMotivation{3}, {});
  EXPECT_THROW(advance_session(s, ev::Select{cards[0].card_id}, {}), SequencingError);
  s = advance_session(s, ev::IssueCards{cards, 6000}, {});
  EXPECT_THROW(advance_session(s, ev::PostMotivation{3}, {}), SequencingError);
  EXPECT_THROW(advance_session(s, ev::Unlock{"steps"}, {}), SequencingError);
  s = advance_session(s, ev::Select{cards[0].card_id}, {});
  EXPECT_THROW(advance_session(s, ev::Select{cards[1].card_id}, {}), SequencingError);
  EXPECT_THROW(advance_session(s, ev::Preview{cards[1].card_id}, {}), SequencingError);
  EXPECT_THROW(advance_session(s, ev::PreMotivation{3}, {}), SequencingError);
}

TEST(AdvanceSession, ValidationErrors) {
  const auto cards = four_cards();
  DailySession s;
  EXPECT_THROW(advance_session(s, ev::PreMotivation{0}, {}), ValidationError);
  EXPECT_THROW(advance_session(s, ev::PreMotivation{6}, {}), ValidationError);
  s = advance_session(s, ev::PreMotivation{3}, {});
  EXPECT_THROW(advance_session(s, ev::IssueCards{{cards[0]}, 6000}, {}), ValidationError);
  s = advance_session(s, ev::IssueCards{cards, 6000}, {});
  EXPECT_THROW(advance_session(s, ev::Select{"nope"}, {}), ValidationError);
  EXPECT_THROW(advance_session(s, ev::Preview{"nope"}, {}), ValidationError);
  s = advance_session(s, ev::Select{cards[2].card_id}, {});
  EXPECT_THROW(advance_session(s, ev::Unlock{"secrets"}, {}), ValidationError);
  EXPECT_THROW(advance_session(s, ev::PostMotivation{9}, {}), ValidationError);
}

TEST(FinalizeDay, NonWearBoundary) {
  const auto p = make_participant(Condition::Experimental);
  const StudyConfig cfg;
  const auto below = finalize_day(p, closed_session(2, 4), 99, cfg);
  EXPECT_FALSE(below.session.wear);
  EXPECT_DOUBLE_EQ(below.session.reward->value, 0.75);
  EXPECT_FALSE(below.session.reward->steps_component);
  EXPECT_TRUE(below.participant.baseline_wear_steps.empty());
  EXPECT_FALSE(below.participant.baseline_mean_steps);

  const auto at = finalize_day(p, closed_session(2, 4), 100, cfg);
  EXPECT_TRUE(at.session.wear);
  EXPECT_DOUBLE_EQ(at.session.reward->value, 0.5 * 0.75 + 0.5 * 100.0 / 12000.0);
}

TEST(FinalizeDay, UpdatesStatsCounterAndBaseline) {
  auto p = make_participant(Condition::Experimental);
  const StudyConfig cfg;
  auto d1 = finalize_day(p, closed_session(3, 3, ArmId::Upward, 1), 5000, cfg);
  EXPECT_EQ(d1.session.state, SessionState::Finalized);
  EXPECT_EQ(d1.participant.day_counter, 1);
  EXPECT_EQ(d1.participant.arm_stats.pulls_of(ArmId::Upward), 1u);
  EXPECT_EQ(d1.participant.adaptive_stats.total_pulls(), 0u);
  // first day is scored against the default baseline
  EXPECT_DOUBLE_EQ(*d1.session.reward->steps_component, 5000.0 / 12000.0);
  auto d2 = finalize_day(d1.participant, closed_session(3, 3, ArmId::Mixed, 2), 7000, cfg);
  EXPECT_DOUBLE_EQ(*d2.participant.baseline_mean_steps, 6000.0);
  EXPECT_DOUBLE_EQ(*d2.session.reward->steps_component, 7000.0 / 10000.0);
  auto d10 = finalize_day(d2.participant, closed_session(3, 3, ArmId::Mixed, 10), 50000, cfg);
  EXPECT_EQ(d10.participant.adaptive_stats.pulls_of(ArmId::Mixed), 1u);
  EXPECT_DOUBLE_EQ(*d10.participant.baseline_mean_steps, 6000.0);  // adaptive days don't move it
}

TEST(FinalizeDay, Errors) {
  const auto p = make_participant(Condition::Experimental);
  const StudyConfig cfg;
  const auto done = finalize_day(p, closed_session(3, 3), 5000, cfg);
  EXPECT_THROW(finalize_day(done.participant, done.session, 5000, cfg), ConflictError);
  EXPECT_THROW(finalize_day(p, closed_session(3, 3), -1, cfg), ValidationError);
  auto open = closed_session(3, 3);
  open.state = SessionState::PostRated;
  EXPECT_THROW(finalize_day(p, open, 10, cfg), SequencingError);
}

TEST(ReferenceSteps, Examples) {
  const auto p = make_participant(Condition::Control);
  const StudyConfig cfg;
  const std::vector<DatedSteps> one{{Date{2024, 1, 1}, 8000}};
  const std::vector<DatedSteps> gap{{Date{2024, 1, 1}, 8000}, {Date{2024, 1, 2}, 50}};
  EXPECT_DOUBLE_EQ(reference_steps(p, one, cfg), 8000.0);
  EXPECT_DOUBLE_EQ(reference_steps(p, gap, cfg), 8000.0);
  EXPECT_DOUBLE_EQ(reference_steps(p, {}, cfg), 6000.0);
  auto q = p;
  q.baseline_mean_steps = 7100.0;
  EXPECT_DOUBLE_EQ(reference_steps(q, std::vector<DatedSteps>{{Date{2024, 1, 2}, 50}}, cfg), 7100.0);
}

TEST(StudyConfigValidation, RejectsBadValues) {
  StudyConfig c;
  EXPECT_NO_THROW(c.validate());
  c.baseline_days = 21;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.baseline_days = 8;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.non_wear_threshold = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.strategy = Ucb1{0.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.weights = {0.9, 0.9};
  EXPECT_THROW(c.validate(), ConfigError);
}

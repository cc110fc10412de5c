#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "socmab/arm.hpp"
#include "socmab/bandit.hpp"
#include "socmab/date.hpp"
#include "socmab/errors.hpp"
#include "socmab/profiles.hpp"

namespace socmab {

enum class Condition : std::uint8_t { Control = 0, Experimental = 1 };

constexpr std::string_view to_string(Condition c) {
  return c == Condition::Control ? "control" : "experimental";
}

constexpr std::optional<Condition> parse_condition(std::string_view s) {
  if (s == "control") return Condition::Control;
  if (s == "experimental") return Condition::Experimental;
  return std::nullopt;
}

/// Gender categories accepted at enrollment; each is its own randomization stream.
inline const std::set<std::string, std::less<>>& known_genders() {
  static const std::set<std::string, std::less<>> g{"female", "male", "other"};
  return g;
}

struct StudyConfig {
  int baseline_days = 9;
  int total_days = 21;
  std::uint64_t non_wear_threshold = 100;
  double default_baseline_steps = 6000.0;
  RewardWeights weights;
  Strategy strategy = Ucb1{};
  LikertScale likert;
  std::uint64_t seed = 0;
  // false: the adaptive phase selects from adaptive-phase rewards only.
  bool warm_start = true;

  void validate() const {
    if (baseline_days < 0 || baseline_days >= total_days)
      throw ConfigError("baseline_days must be in [0, total_days)");
    if (baseline_days % static_cast<int>(kArmCount) != 0)
      throw ConfigError("baseline_days must be a multiple of 3 for a balanced schedule");
    if (non_wear_threshold < 1) throw ConfigError("non_wear_threshold must be >= 1");
    if (!(default_baseline_steps > 0)) throw ConfigError("default_baseline_steps must be > 0");
    if (likert.min >= likert.max) throw ConfigError("likert_min must be below likert_max");
    try {
      weights.validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    if (const auto* u = std::get_if<Ucb1>(&strategy); u && !(u->exploration_c > 0))
      throw ConfigError("UCB1 exploration constant must be > 0");
    if (const auto* e = std::get_if<EpsilonGreedy>(&strategy);
        e && !(e->epsilon >= 0 && e->epsilon <= 1))
      throw ConfigError("epsilon must lie in [0,1]");
  }
};

// ---------------------------------------------------------------------------
// Condition assignment

/// Stratified block randomization state: per gender, how many have enrolled and the
/// condition owed to the second member of an open block.
struct EnrollmentRegistry {
  std::map<std::string, std::uint64_t, std::less<>> enrolled;
  std::map<std::string, Condition, std::less<>> owed;

  std::uint64_t count(std::string_view gender) const {
    auto it = enrolled.find(gender);
    return it == enrolled.end() ? 0 : it->second;
  }

  /// Index of the block the next enrollee of `gender` falls into.
  std::uint64_t next_block(std::string_view gender) const { return count(gender) / 2; }

  void record(const std::string& gender, Condition assigned) {
    auto& n = enrolled[gender];
    if (n % 2 == 0)
      owed[gender] = assigned == Condition::Control ? Condition::Experimental : Condition::Control;
    else
      owed.erase(gender);
    ++n;
  }
};

/// Blocks of two within each gender: the first enrollee of a block gets a random
/// condition and the second gets the other one. `rng` is consumed only when a block opens.
template <class URBG>
Condition assign_condition(EnrollmentRegistry& registry, const std::string& gender, URBG& rng) {
  if (!known_genders().contains(gender))
    throw ValidationError("unknown gender category '" + gender + "'");
  Condition c;
  if (registry.count(gender) % 2 == 0) {
    c = std::bernoulli_distribution(0.5)(rng) ? Condition::Experimental : Condition::Control;
  } else {
    c = registry.owed.at(gender);
  }
  registry.record(gender, c);
  return c;
}

/// Random permutation with each arm appearing `days / 3` times.
template <class URBG>
std::vector<ArmId> make_baseline_schedule(URBG& rng, int days = 9) {
  if (days < 0 || days % static_cast<int>(kArmCount) != 0)
    throw DomainError("baseline length must be a non-negative multiple of 3");
  std::vector<ArmId> s;
  s.reserve(static_cast<std::size_t>(days));
  for (int i = 0; i < days; ++i) s.push_back(kAllArms[static_cast<std::size_t>(i) % kArmCount]);
  for (std::size_t i = s.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> d(0, i - 1);
    std::swap(s[i - 1], s[d(rng)]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Participant model

struct ParticipantModel {
  std::string participant_id;
  std::string external_id;
  std::string gender;
  Condition condition = Condition::Control;
  std::uint64_t ordinal = 0;
  std::vector<ArmId> baseline_schedule;
  ArmStats arm_stats;       // every finalized day
  ArmStats adaptive_stats;  // finalized days after the baseline period
  std::optional<double> baseline_mean_steps;
  std::vector<std::uint64_t> baseline_wear_steps;
  Date enrolled_on;
  int day_counter = 0;

  /// Stats the selection strategy reads, honoring the warm/cold start setting.
  const ArmStats& selection_stats(const StudyConfig& config) const {
    return config.warm_start ? arm_stats : adaptive_stats;
  }

  double effective_baseline(const StudyConfig& config) const {
    return baseline_mean_steps.value_or(config.default_baseline_steps);
  }

  friend bool operator==(const ParticipantModel&, const ParticipantModel&) = default;
};

/// Arm for data day `day_index`: the fixed schedule during baseline, then uniform for
/// Control or the configured strategy for Experimental. `stats_source` is invoked
/// only on the Experimental adaptive path.
template <class URBG, class StatsSource>
ArmId arm_for_day(const ParticipantModel& p, int day_index, const StudyConfig& config, URBG& rng,
                  StatsSource&& stats_source) {
  if (day_index < 1 || day_index > config.total_days)
    throw DomainError("day_index " + std::to_string(day_index) + " outside 1.." +
                      std::to_string(config.total_days));
  if (day_index <= config.baseline_days) {
    if (p.baseline_schedule.size() != static_cast<std::size_t>(config.baseline_days))
      throw DomainError("baseline schedule length does not match baseline_days");
    return p.baseline_schedule[static_cast<std::size_t>(day_index - 1)];
  }
  if (p.condition == Condition::Control) return select_arm_uniform(rng);
  const ArmStats& stats = stats_source();
  return select_arm(stats, config.strategy, rng);
}

template <class URBG>
ArmId arm_for_day(const ParticipantModel& p, int day_index, const StudyConfig& config, URBG& rng) {
  return arm_for_day(p, day_index, config, rng,
                     [&]() -> const ArmStats& { return p.selection_stats(config); });
}

// ---------------------------------------------------------------------------
// Daily session state machine

enum class SessionState : std::uint8_t {
  Started = 0,
  PreRated,
  CardsIssued,
  Selected,
  PostRated,
  Closed,
  Finalized,
};

constexpr std::string_view to_string(SessionState s) {
  constexpr std::array<std::string_view, 7> names{"Started",   "PreRated", "CardsIssued",
                                                  "Selected",  "PostRated", "Closed",
                                                  "Finalized"};
  return names[static_cast<std::size_t>(s)];
}

/// Sections of the overview page that can be expanded after selection.
inline const std::set<std::string, std::less<>>& unlockable_sections() {
  static const std::set<std::string, std::less<>> s{"steps", "interests"};
  return s;
}

struct TimedEntry {
  std::string value;
  Timestamp at;
  friend bool operator==(const TimedEntry&, const TimedEntry&) = default;
};

struct DailySession {
  std::string session_id;
  std::string participant_id;
  int day_index = 0;
  Date date;
  ArmId arm = ArmId::Mixed;
  std::vector<ProfileCard> cards;
  std::optional<std::uint64_t> reference_steps;  // what the cards were anchored on
  std::optional<int> pre_motivation;
  std::vector<TimedEntry> previews;  // card ids in preview order
  std::optional<std::string> selection;
  std::vector<TimedEntry> unlock_events;  // section names
  std::optional<int> post_motivation;
  std::optional<std::uint64_t> steps;
  bool wear = false;
  std::optional<Reward> reward;
  SessionState state = SessionState::Started;
  // Time each state was entered, indexed by SessionState.
  std::array<std::optional<Timestamp>, 7> entered_at{};

  const ProfileCard* card(std::string_view card_id) const {
    for (const auto& c : cards)
      if (c.card_id == card_id) return &c;
    return nullptr;
  }

  /// 1-based display position of a card.
  std::optional<std::size_t> ordinal_of(std::string_view card_id) const {
    for (std::size_t i = 0; i < cards.size(); ++i)
      if (cards[i].card_id == card_id) return i + 1;
    return std::nullopt;
  }

  const ProfileCard* selected_card() const { return selection ? card(*selection) : nullptr; }

  friend bool operator==(const DailySession&, const DailySession&) = default;
};

namespace session_event {
struct PreMotivation { int value; };
struct IssueCards { std::vector<ProfileCard> cards; std::uint64_t reference_steps; };
struct Preview { std::string card_id; };
struct Unlock { std::string section; };
struct Select { std::string card_id; };
struct PostMotivation { int value; };
struct Close {};
}  // namespace session_event

using SessionEvent =
    std::variant<session_event::PreMotivation, session_event::IssueCards, session_event::Preview,
                 session_event::Unlock, session_event::Select, session_event::PostMotivation,
                 session_event::Close>;

namespace detail {

inline void require_state(const DailySession& s, SessionState expected, std::string_view event) {
  if (s.state != expected)
    throw SequencingError(std::string(event) + " not allowed in state " +
                          std::string(to_string(s.state)) + " (expects " +
                          std::string(to_string(expected)) + ")");
}

inline void enter(DailySession& s, SessionState next, Timestamp at) {
  s.state = next;
  s.entered_at[static_cast<std::size_t>(next)] = at;
}

}  // namespace detail

/// Throws SequencingError for an event the current state does not accept and
/// ValidationError for a bad value.
inline void check_session_event(const DailySession& s, const SessionEvent& event, LikertScale scale = {}) {
  using namespace session_event;
  std::visit(
      [&](const auto& e) {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, PreMotivation>) {
          detail::require_state(s, SessionState::Started, "PreMotivation");
          if (!scale.contains(e.value)) throw ValidationError("motivation outside Likert range");
        } else if constexpr (std::is_same_v<E, IssueCards>) {
          detail::require_state(s, SessionState::PreRated, "IssueCards");
          if (e.cards.size() != 4) throw ValidationError("a session shows exactly 4 cards");
        } else if constexpr (std::is_same_v<E, Preview>) {
          detail::require_state(s, SessionState::CardsIssued, "Preview");
          if (!s.card(e.card_id)) throw ValidationError("card '" + e.card_id + "' not shown today");
        } else if constexpr (std::is_same_v<E, Select>) {
          detail::require_state(s, SessionState::CardsIssued, "Select");
          if (!s.card(e.card_id)) throw ValidationError("card '" + e.card_id + "' not shown today");
        } else if constexpr (std::is_same_v<E, Unlock>) {
          detail::require_state(s, SessionState::Selected, "Unlock");
          if (!unlockable_sections().contains(e.section))
            throw ValidationError("unknown section '" + e.section + "'");
        } else if constexpr (std::is_same_v<E, PostMotivation>) {
          detail::require_state(s, SessionState::Selected, "PostMotivation");
          if (!scale.contains(e.value)) throw ValidationError("motivation outside Likert range");
        } else {
          detail::require_state(s, SessionState::PostRated, "Close");
        }
      },
      event);
}

/// Applies one session event after check_session_event; the input is never modified.
inline DailySession advance_session(DailySession s, const SessionEvent& event, Timestamp at,
                                    LikertScale scale = {}) {
  using namespace session_event;
  check_session_event(s, event, scale);
  std::visit(
      [&](const auto& e) {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, PreMotivation>) {
          s.pre_motivation = e.value;
          detail::enter(s, SessionState::PreRated, at);
        } else if constexpr (std::is_same_v<E, IssueCards>) {
          s.cards = e.cards;
          s.reference_steps = e.reference_steps;
          detail::enter(s, SessionState::CardsIssued, at);
        } else if constexpr (std::is_same_v<E, Preview>) {
          s.previews.push_back({e.card_id, at});
        } else if constexpr (std::is_same_v<E, Select>) {
          s.selection = e.card_id;
          detail::enter(s, SessionState::Selected, at);
        } else if constexpr (std::is_same_v<E, Unlock>) {
          s.unlock_events.push_back({e.section, at});
        } else if constexpr (std::is_same_v<E, PostMotivation>) {
          s.post_motivation = e.value;
          detail::enter(s, SessionState::PostRated, at);
        } else {
          detail::enter(s, SessionState::Closed, at);
        }
      },
      event);
  return s;
}

// ---------------------------------------------------------------------------
// Day finalization

struct FinalizedDay {
  ParticipantModel participant;
  DailySession session;
};

/// Scores a closed session against the day's total steps and folds the reward into
/// the participant's arm statistics. The steps component is computed against the
/// baseline mean known before this day.
inline FinalizedDay finalize_day(ParticipantModel p, DailySession s, std::int64_t steps,
                                 const StudyConfig& config, Timestamp at = {}) {
  if (s.state == SessionState::Finalized)
    throw ConflictError("session " + s.session_id + " already finalized");
  detail::require_state(s, SessionState::Closed, "Finalize");
  if (steps < 0) throw ValidationError("steps must be non-negative");
  if (s.participant_id != p.participant_id)
    throw ValidationError("session does not belong to participant");

  const auto count = static_cast<std::uint64_t>(steps);
  s.steps = count;
  s.wear = count >= config.non_wear_threshold;
  s.reward = compute_reward(*s.pre_motivation, *s.post_motivation,
                            s.wear ? std::optional<std::uint64_t>{count} : std::nullopt,
                            p.effective_baseline(config), config.weights, config.likert);

  p.arm_stats = update_stats(p.arm_stats, s.arm, *s.reward);
  if (s.day_index > config.baseline_days)
    p.adaptive_stats = update_stats(p.adaptive_stats, s.arm, *s.reward);
  p.day_counter += 1;
  if (s.wear && s.day_index <= config.baseline_days) p.baseline_wear_steps.push_back(count);
  if (!p.baseline_wear_steps.empty()) {
    const double sum = std::accumulate(p.baseline_wear_steps.begin(),
                                       p.baseline_wear_steps.end(), 0.0);
    p.baseline_mean_steps = sum / static_cast<double>(p.baseline_wear_steps.size());
  }
  detail::enter(s, SessionState::Finalized, at);
  return {std::move(p), std::move(s)};
}

// ---------------------------------------------------------------------------
// Reference steps

struct DatedSteps {
  Date date;
  std::uint64_t steps = 0;
};

/// Steps the day's profiles are anchored on: the most recent wear day in `history`,
/// else the participant's baseline mean, else the configured default.
inline double reference_steps(const ParticipantModel& p, std::span<const DatedSteps> history,
                              const StudyConfig& config) {
  const DatedSteps* best = nullptr;
  for (const auto& r : history)
    if (r.steps >= config.non_wear_threshold && (!best || r.date > best->date)) best = &r;
  if (best) return static_cast<double>(best->steps);
  return p.effective_baseline(config);
}

}  // namespace socmab

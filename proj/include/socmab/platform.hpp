#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "socmab/event_store.hpp"
#include "socmab/json_io.hpp"
#include "socmab/protocol.hpp"
#include "socmab/rng.hpp"
#include "socmab/steps.hpp"

namespace socmab {

using Clock = std::function<Timestamp()>;

inline Clock system_clock_utc() {
  return [] { return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()); };
}

/// A clock that only moves when told to; used by simulations and tests.
class ManualClock {
 public:
  explicit ManualClock(Timestamp start = {}) : now_(start) {}
  Timestamp now() const { return now_; }
  void set(Timestamp t) { now_ = t; }
  void advance(std::chrono::seconds s) { now_ += s; }
  Clock as_clock() { return [this] { return now_; }; }

 private:
  Timestamp now_;
};

/// The study engine. Every mutation is validated against the protocol, appended to
/// the event store and only then applied; constructing a platform over an existing
/// store folds its events back into participant and session state.
///
/// Not thread-safe: callers serialize access (the API service holds a lock).
class StudyPlatform {
 public:
  StudyPlatform(StudyConfig config, EventStore& store, AttributePool pool = AttributePool::defaults(),
                Clock clock = system_clock_utc())
      : config_(std::move(config)), store_(store), pool_(std::move(pool)), clock_(std::move(clock)) {
    config_.validate();
    pool_.validate();
    for (const Event& e : store_.events()) apply(e);
  }

  const StudyConfig& config() const { return config_; }
  const EventStore& store() const { return store_; }
  const StepStore& steps() const { return steps_; }

  // -- enrollment ------------------------------------------------------------

  const ParticipantModel& enroll(const std::string& external_id, const std::string& gender) {
    if (!known_genders().contains(gender))
      throw ValidationError("unknown gender category '" + gender + "'");
    const std::uint64_t ordinal = participants_.size() + 1;
    EnrollmentRegistry trial = registry_;
    Rng cond_rng = substream(config_.seed, Stream::Condition,
                             {hash_key(gender), registry_.next_block(gender)});
    const Condition condition = assign_condition(trial, gender, cond_rng);
    Rng base_rng = substream(config_.seed, Stream::Baseline, {ordinal});
    const auto schedule = make_baseline_schedule(base_rng, config_.baseline_days);

    const Timestamp now = clock_();
    nlohmann::json arms = nlohmann::json::array();
    for (ArmId a : schedule) arms.push_back(to_string(a));
    Event e;
    e.participant_id = participant_id_for(ordinal);
    e.kind = EventKind::Enrolled;
    e.timestamp = now;
    e.payload = {{"external_id", external_id},
                 {"gender", gender},
                 {"condition", to_string(condition)},
                 {"ordinal", ordinal},
                 {"baseline_schedule", arms},
                 {"enrolled_on", Date{std::chrono::floor<std::chrono::days>(now)}.iso()}};
    commit(std::move(e));
    return participants_.at(participant_id_for(ordinal));
  }

  // -- session flow ----------------------------------------------------------

  const DailySession& start_session(const std::string& participant_id, Date date) {
    const ParticipantModel& p = participant(participant_id);
    if (session_by_date_.contains({participant_id, date}))
      throw ConflictError("a session already exists for " + participant_id + " on " + date.iso());
    const auto& ids = sessions_of(participant_id);
    if (!ids.empty() && !(sessions_.at(ids.back()).date < date))
      throw ConflictError("session dates must advance; last session was " +
                          sessions_.at(ids.back()).date.iso());
    int completed = 0;
    for (const auto& sid : ids)
      if (sessions_.at(sid).state >= SessionState::Closed) ++completed;
    if (completed >= config_.total_days)
      throw ConflictError(participant_id + " has completed all " +
                          std::to_string(config_.total_days) + " study days");

    const int day_index = completed + 1;
    Rng rng = substream(config_.seed, Stream::ArmChoice,
                        {p.ordinal, static_cast<std::uint64_t>(day_index), ids.size()});
    const ArmId arm = arm_for_day(p, day_index, config_, rng);
    const std::string sid = fmt::format("{}-s{:02}", participant_id, ids.size() + 1);

    Event e;
    e.participant_id = participant_id;
    e.day_index = day_index;
    e.kind = EventKind::ArmChosen;
    e.timestamp = clock_();
    e.payload = {{"session_id", sid}, {"date", date.iso()}, {"arm", to_string(arm)}};
    commit(std::move(e));
    return sessions_.at(sid);
  }

  const DailySession& rate_pre(const std::string& session_id, int value) {
    if (session(session_id).pre_motivation) throw ConflictError("pre-session motivation already rated");
    return session_step(session_id, EventKind::PreMotivation,
                        session_event::PreMotivation{value}, {{"value", value}});
  }

  /// The day's cards; generated and logged on the first call, returned as-is afterwards.
  const std::vector<ProfileCard>& issue_cards(const std::string& session_id) {
    const DailySession& s = session(session_id);
    if (s.state >= SessionState::CardsIssued) return s.cards;
    const ParticipantModel& p = participant(s.participant_id);

    std::vector<DatedSteps> history;
    for (const auto& r : steps_.history(p.participant_id, s.date)) history.push_back({r.date, r.steps});
    const double ref = reference_steps(p, history, config_);
    Rng rng = substream(config_.seed, Stream::Cards,
                        {p.ordinal, static_cast<std::uint64_t>(s.day_index), hash_key(session_id)});
    const auto ref_steps = static_cast<std::uint64_t>(std::llround(ref));
    auto cards = generate_cards(s.arm, ref_steps, rng, pool_);
    nlohmann::json payload_cards = cards;
    session_step(session_id, EventKind::CardsShown, session_event::IssueCards{std::move(cards), ref_steps},
                 {{"cards", std::move(payload_cards)}, {"reference_steps", ref_steps}});
    return sessions_.at(session_id).cards;
  }

  const DailySession& preview(const std::string& session_id, const std::string& card_id) {
    return session_step(session_id, EventKind::Preview, session_event::Preview{card_id},
                        {{"card_id", card_id}});
  }

  const ProfileCard& select(const std::string& session_id, const std::string& card_id) {
    const DailySession& s = session(session_id);
    if (s.selection) throw ConflictError("only one full profile may be reviewed per day");
    session_step(session_id, EventKind::Selected, session_event::Select{card_id},
                 {{"card_id", card_id}});
    return *sessions_.at(session_id).selected_card();
  }

  const DailySession& unlock(const std::string& session_id, const std::string& section) {
    return session_step(session_id, EventKind::Unlock, session_event::Unlock{section},
                        {{"section", section}});
  }

  /// Records the post-selection rating and closes the session. Finalizes at once when
  /// the day's steps are already known.
  const DailySession& rate_post(const std::string& session_id, int value) {
    if (session(session_id).post_motivation) throw ConflictError("post-session motivation already rated");
    session_step(session_id, EventKind::PostMotivation, session_event::PostMotivation{value},
                 {{"value", value}});
    try_finalize(session_id);
    return sessions_.at(session_id);
  }

  // -- steps -----------------------------------------------------------------

  struct IngestAck {
    bool overwrote = false;
    std::optional<std::string> finalized_session;
  };

  IngestAck ingest_steps(const std::string& participant_id, Date date, std::int64_t steps,
                         StepSource source = StepSource::Ingested) {
    participant(participant_id);
    if (steps < 0) throw ValidationError("steps must be non-negative");
    IngestAck ack;
    ack.overwrote = steps_.get_steps(participant_id, date).has_value();
    Event e;
    e.participant_id = participant_id;
    e.kind = EventKind::StepsIngested;
    e.timestamp = clock_();
    e.payload = {{"date", date.iso()},
                 {"steps", static_cast<std::uint64_t>(steps)},
                 {"source", to_string(source)}};
    commit(std::move(e));
    if (auto it = session_by_date_.find({participant_id, date}); it != session_by_date_.end())
      if (try_finalize(it->second)) ack.finalized_session = it->second;
    return ack;
  }

  /// Finalizes every closed session whose steps have arrived; returns how many.
  std::size_t tick() {
    std::vector<std::string> ready;
    for (const auto& [sid, s] : sessions_)
      if (s.state == SessionState::Closed && steps_.get_steps(s.participant_id, s.date)) ready.push_back(sid);
    for (const auto& sid : ready) try_finalize(sid);
    return ready.size();
  }

  /// Explicit finalization; rejects a session that is already finalized.
  const DailySession& finalize(const std::string& session_id) {
    const DailySession& s = session(session_id);
    if (s.state == SessionState::Finalized)
      throw ConflictError("session " + session_id + " already finalized");
    if (s.state != SessionState::Closed) throw SequencingError("session is not closed");
    if (!try_finalize(session_id))
      throw SequencingError("no step data yet for " + s.participant_id + " on " + s.date.iso());
    return sessions_.at(session_id);
  }

  // -- queries ---------------------------------------------------------------

  const ParticipantModel& participant(const std::string& participant_id) const {
    auto it = participants_.find(participant_id);
    if (it == participants_.end()) throw NotFoundError("unknown participant '" + participant_id + "'");
    return it->second;
  }

  const DailySession& session(const std::string& session_id) const {
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) throw NotFoundError("unknown session '" + session_id + "'");
    return it->second;
  }

  const std::map<std::string, ParticipantModel>& participants() const { return participants_; }
  const std::map<std::string, DailySession>& sessions() const { return sessions_; }

  const std::vector<std::string>& sessions_of(const std::string& participant_id) const {
    static const std::vector<std::string> none;
    auto it = by_participant_.find(participant_id);
    return it == by_participant_.end() ? none : it->second;
  }

  /// Finalized sessions ordered by (participant_id, day_index).
  std::vector<const DailySession*> finalized_sessions() const {
    std::vector<const DailySession*> out;
    for (const auto& [pid, ids] : by_participant_)
      for (const auto& sid : ids)
        if (const auto& s = sessions_.at(sid); s.state == SessionState::Finalized) out.push_back(&s);
    std::stable_sort(out.begin(), out.end(), [](const DailySession* a, const DailySession* b) {
      return std::tie(a->participant_id, a->day_index) < std::tie(b->participant_id, b->day_index);
    });
    return out;
  }

  static std::string participant_id_for(std::uint64_t ordinal) {
    return fmt::format("p{:04}", ordinal);
  }

 private:
  void commit(Event e) {
    store_.append(std::move(e));
    apply(store_.events().back());
  }

  template <class SessionEv>
  const DailySession& session_step(const std::string& session_id, EventKind kind, SessionEv ev,
                                   nlohmann::json payload) {
    const DailySession& s = session(session_id);
    const Timestamp now = clock_();
    // Checked before appending so a rejected event never reaches the log. Close always
    // follows a valid post rating.
    check_session_event(s, ev, config_.likert);
    payload["session_id"] = session_id;
    Event e;
    e.participant_id = s.participant_id;
    e.day_index = s.day_index;
    e.kind = kind;
    e.timestamp = now;
    e.payload = std::move(payload);
    commit(std::move(e));
    return sessions_.at(session_id);
  }

  bool try_finalize(const std::string& session_id) {
    const DailySession& s = sessions_.at(session_id);
    if (s.state != SessionState::Closed) return false;
    const auto steps = steps_.get_steps(s.participant_id, s.date);
    if (!steps) return false;
    const auto day = finalize_day(participants_.at(s.participant_id), s,
                                  static_cast<std::int64_t>(*steps), config_);
    Event e;
    e.participant_id = s.participant_id;
    e.day_index = s.day_index;
    e.kind = EventKind::Finalized;
    e.timestamp = clock_();
    e.payload = {{"session_id", session_id},
                 {"steps", *steps},
                 {"wear", day.session.wear},
                 {"reward", day.session.reward->value}};
    commit(std::move(e));
    return true;
  }

  DailySession& mutable_session(const nlohmann::json& payload) {
    const auto sid = payload.at("session_id").get<std::string>();
    auto it = sessions_.find(sid);
    if (it == sessions_.end()) throw ValidationError("event references unknown session " + sid);
    return it->second;
  }

  /// The single state transition function, shared by live commands and replay.
  void apply(const Event& e) {
    const auto& pl = e.payload;
    switch (e.kind) {
      case EventKind::Enrolled: {
        ParticipantModel p;
        p.participant_id = e.participant_id;
        p.external_id = pl.at("external_id").get<std::string>();
        p.gender = pl.at("gender").get<std::string>();
        p.condition = parse_condition(pl.at("condition").get<std::string>()).value();
        p.ordinal = pl.at("ordinal").get<std::uint64_t>();
        for (const auto& a : pl.at("baseline_schedule"))
          p.baseline_schedule.push_back(parse_arm(a.get<std::string>()).value());
        p.enrolled_on = parse_date_or_throw(pl.at("enrolled_on").get<std::string>());
        registry_.record(p.gender, p.condition);
        participants_.emplace(p.participant_id, std::move(p));
        break;
      }
      case EventKind::ArmChosen: {
        participant(e.participant_id);
        DailySession s;
        s.session_id = pl.at("session_id").get<std::string>();
        s.participant_id = e.participant_id;
        s.day_index = *e.day_index;
        s.date = parse_date_or_throw(pl.at("date").get<std::string>());
        s.arm = parse_arm(pl.at("arm").get<std::string>()).value();
        s.entered_at[static_cast<std::size_t>(SessionState::Started)] = e.timestamp;
        session_by_date_[{s.participant_id, s.date}] = s.session_id;
        by_participant_[s.participant_id].push_back(s.session_id);
        sessions_.emplace(s.session_id, std::move(s));
        break;
      }
      case EventKind::PreMotivation: {
        auto& s = mutable_session(pl);
        s = advance_session(std::move(s), session_event::PreMotivation{pl.at("value").get<int>()},
                            e.timestamp, config_.likert);
        break;
      }
      case EventKind::CardsShown: {
        auto& s = mutable_session(pl);
        s = advance_session(std::move(s), session_event::IssueCards{pl.at("cards").get<std::vector<ProfileCard>>(),
                                                         pl.at("reference_steps").get<std::uint64_t>()},
                            e.timestamp, config_.likert);
        break;
      }
      case EventKind::Preview: {
        auto& s = mutable_session(pl);
        s = advance_session(std::move(s), session_event::Preview{pl.at("card_id").get<std::string>()},
                            e.timestamp, config_.likert);
        break;
      }
      case EventKind::Selected: {
        auto& s = mutable_session(pl);
        s = advance_session(std::move(s), session_event::Select{pl.at("card_id").get<std::string>()},
                            e.timestamp, config_.likert);
        break;
      }
      case EventKind::Unlock: {
        auto& s = mutable_session(pl);
        s = advance_session(std::move(s), session_event::Unlock{pl.at("section").get<std::string>()},
                            e.timestamp, config_.likert);
        break;
      }
      case EventKind::PostMotivation: {
        auto& s = mutable_session(pl);
        s = advance_session(std::move(s), session_event::PostMotivation{pl.at("value").get<int>()},
                            e.timestamp, config_.likert);
        s = advance_session(std::move(s), session_event::Close{}, e.timestamp, config_.likert);
        break;
      }
      case EventKind::StepsIngested: {
        participant(e.participant_id);
        const auto source = parse_step_source(pl.at("source").get<std::string>());
        if (!source) throw ValidationError("unknown step source");
        steps_.upsert({e.participant_id, parse_date_or_throw(pl.at("date").get<std::string>()),
                       pl.at("steps").get<std::uint64_t>(), *source});
        break;
      }
      case EventKind::Finalized: {
        auto& s = mutable_session(pl);
        auto& p = participants_.at(e.participant_id);
        auto day = finalize_day(p, s, pl.at("steps").get<std::int64_t>(), config_, e.timestamp);
        if (std::abs(day.session.reward->value - pl.at("reward").get<double>()) > 1e-12)
          throw ValidationError("logged reward for " + s.session_id +
                                " disagrees with the configured reward function");
        p = std::move(day.participant);
        s = std::move(day.session);
        break;
      }
    }
  }

  StudyConfig config_;
  EventStore& store_;
  AttributePool pool_;
  Clock clock_;

  std::map<std::string, ParticipantModel> participants_;
  std::map<std::string, DailySession> sessions_;
  std::map<std::pair<std::string, Date>, std::string> session_by_date_;
  std::map<std::string, std::vector<std::string>> by_participant_;
  StepStore steps_;
  EnrollmentRegistry registry_;
};

// ---------------------------------------------------------------------------
// CSV export

enum class ExportKind { Sessions, Steps, Rewards };

inline constexpr std::string_view kSessionsCsvHeader =
    "participant_id,condition,day_index,date,arm,pre_motivation,post_motivation,"
    "selected_offset,previews,steps,wear,reward";

inline constexpr std::string_view kRewardsCsvHeader =
    "participant_id,condition,day_index,arm,motivation_component,steps_component,reward";

/// Writes one export table; rows are ordered by (participant_id, day_index) or, for
/// steps, (participant_id, date). Returns the number of data rows.
inline std::size_t export_csv(const StudyPlatform& platform, ExportKind which, std::ostream& out) {
  if (which == ExportKind::Steps) return write_steps_csv(out, platform.steps().records());
  const auto rows = platform.finalized_sessions();
  if (which == ExportKind::Sessions) {
    out << kSessionsCsvHeader << '\n';
    for (const DailySession* s : rows) {
      const auto& p = platform.participant(s->participant_id);
      std::string previews;
      for (const auto& pv : s->previews) {
        if (!previews.empty()) previews += ';';
        previews += std::to_string(*s->ordinal_of(pv.value));
      }
      out << fmt::format("{},{},{},{},{},{},{},{:.2f},{},{},{},{}\n", s->participant_id,
                         to_string(p.condition), s->day_index, s->date.iso(), to_string(s->arm),
                         *s->pre_motivation, *s->post_motivation, s->selected_card()->true_offset,
                         previews, *s->steps, s->wear ? 1 : 0, s->reward->value);
    }
  } else {
    out << kRewardsCsvHeader << '\n';
    for (const DailySession* s : rows) {
      const auto& p = platform.participant(s->participant_id);
      out << fmt::format("{},{},{},{},{},{},{}\n", s->participant_id, to_string(p.condition),
                         s->day_index, to_string(s->arm), s->reward->motivation_component,
                         s->reward->steps_component ? fmt::format("{}", *s->reward->steps_component)
                                                    : std::string(),
                         s->reward->value);
    }
  }
  return rows.size();
}

inline std::size_t export_csv(const StudyPlatform& platform, ExportKind which,
                              const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + destination.string());
  const auto n = export_csv(platform, which, out);
  out.flush();
  if (!out) throw ConfigError("write failed: " + destination.string());
  return n;
}

}  // namespace socmab

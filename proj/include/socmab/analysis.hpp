#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "socmab/arm.hpp"
#include "socmab/date.hpp"
#include "socmab/errors.hpp"
#include "socmab/platform.hpp"
#include "socmab/protocol.hpp"
#include "socmab/stats.hpp"
#include "socmab/steps.hpp"

namespace socmab::analysis {

/// One row of the sessions export.
struct SessionRow {
  std::string participant_id;
  Condition condition = Condition::Control;
  int day_index = 0;
  Date date;
  ArmId arm = ArmId::Mixed;
  int pre_motivation = 0;
  int post_motivation = 0;
  double selected_offset = 0.0;
  std::vector<int> previews;
  std::uint64_t steps = 0;
  bool wear = false;
  double reward = 0.0;

  int motivation_delta() const { return post_motivation - pre_motivation; }
};

enum class Phase : std::uint8_t { Pre = 0, During = 1 };

constexpr std::string_view to_string(Phase p) { return p == Phase::Pre ? "pre" : "during"; }

struct AnalysisOptions {
  int baseline_days = 9;
  int total_days = 21;
  int min_completed_days = 14;

  Phase phase_of(int day_index) const { return day_index <= baseline_days ? Phase::Pre : Phase::During; }
};

inline AnalysisOptions options_for(const StudyConfig& config) {
  AnalysisOptions o;
  o.baseline_days = config.baseline_days;
  o.total_days = config.total_days;
  return o;
}

// ---------------------------------------------------------------------------
// Input

namespace detail {

inline int parse_int_field(std::string_view s, const char* name, std::size_t line) {
  int v = 0;
  const bool neg = !s.empty() && s[0] == '-';
  const auto body = neg ? s.substr(1) : s;
  auto parsed = socmab::detail::parse_count(body);
  if (!parsed || *parsed > 1000000000ULL) throw ParseError(std::string("invalid ") + name, line);
  v = static_cast<int>(*parsed);
  return neg ? -v : v;
}

inline double parse_double_field(std::string_view s, const char* name, std::size_t line) {
  try {
    std::size_t used = 0;
    const std::string str(s);
    const double v = std::stod(str, &used);
    if (used != str.size()) throw std::invalid_argument(str);
    return v;
  } catch (const std::logic_error&) {
    throw ParseError(std::string("invalid ") + name, line);
  }
}

}  // namespace detail

inline std::vector<SessionRow> read_sessions_csv(std::istream& in) {
  std::vector<SessionRow> rows;
  std::string raw;
  std::size_t line = 1;
  if (!std::getline(in, raw)) throw ParseError("missing sessions header", line);
  if (socmab::detail::strip_cr(raw) != kSessionsCsvHeader)
    throw ParseError("unexpected sessions header", line);
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = socmab::detail::strip_cr(raw);
    if (text.empty()) continue;
    const auto f = socmab::detail::split_csv_line(text);
    if (f.size() != 12) throw ParseError("expected 12 fields", line);
    SessionRow r;
    r.participant_id = std::string(f[0]);
    const auto cond = parse_condition(f[1]);
    if (!cond) throw ParseError("invalid condition", line);
    r.condition = *cond;
    r.day_index = detail::parse_int_field(f[2], "day_index", line);
    const auto date = parse_date(f[3]);
    if (!date) throw ParseError("invalid date", line);
    r.date = *date;
    const auto arm = parse_arm(f[4]);
    if (!arm) throw ParseError("invalid arm", line);
    r.arm = *arm;
    r.pre_motivation = detail::parse_int_field(f[5], "pre_motivation", line);
    r.post_motivation = detail::parse_int_field(f[6], "post_motivation", line);
    r.selected_offset = detail::parse_double_field(f[7], "selected_offset", line);
    if (!f[8].empty()) {
      std::size_t start = 0;
      while (true) {
        const auto semi = f[8].find(';', start);
        r.previews.push_back(detail::parse_int_field(f[8].substr(start, semi - start), "previews", line));
        if (semi == std::string_view::npos) break;
        start = semi + 1;
      }
    }
    const auto steps = socmab::detail::parse_count(f[9]);
    if (!steps) throw ParseError("invalid steps", line);
    r.steps = *steps;
    if (f[10] != "0" && f[10] != "1") throw ParseError("invalid wear flag", line);
    r.wear = f[10] == "1";
    r.reward = detail::parse_double_field(f[11], "reward", line);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<SessionRow> read_sessions_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open sessions file: " + path);
  return read_sessions_csv(in);
}

/// Ground-truth preference per participant: header `participant_id,theta`.
inline std::map<std::string, double> read_truth_csv(std::istream& in) {
  std::map<std::string, double> truth;
  std::string raw;
  std::size_t line = 1;
  if (!std::getline(in, raw) || socmab::detail::strip_cr(raw) != "participant_id,theta")
    throw ParseError("expected header 'participant_id,theta'", line);
  while (std::getline(in, raw)) {
    ++line;
    const auto text = socmab::detail::strip_cr(raw);
    if (text.empty()) continue;
    const auto f = socmab::detail::split_csv_line(text);
    if (f.size() != 2 || f[0].empty()) throw ParseError("expected participant_id,theta", line);
    truth[std::string(f[0])] = detail::parse_double_field(f[1], "theta", line);
  }
  return truth;
}

inline std::map<std::string, double> read_truth_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open truth file: " + path);
  return read_truth_csv(in);
}

/// Rows of the sessions export, straight from a live platform.
inline std::vector<SessionRow> rows_from_platform(const StudyPlatform& platform) {
  std::vector<SessionRow> rows;
  for (const DailySession* s : platform.finalized_sessions()) {
    SessionRow r;
    r.participant_id = s->participant_id;
    r.condition = platform.participant(s->participant_id).condition;
    r.day_index = s->day_index;
    r.date = s->date;
    r.arm = s->arm;
    r.pre_motivation = *s->pre_motivation;
    r.post_motivation = *s->post_motivation;
    // Same two-decimal value the CSV export carries.
    r.selected_offset = std::stod(fmt::format("{:.2f}", s->selected_card()->true_offset));
    for (const auto& pv : s->previews) r.previews.push_back(static_cast<int>(*s->ordinal_of(pv.value)));
    r.steps = *s->steps;
    r.wear = s->wear;
    r.reward = s->reward->value;
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Exclusions

struct Exclusions {
  std::vector<std::string> excluded_participants;  // fewer than min_completed_days
  std::size_t excluded_sessions = 0;               // rows dropped with those participants
  std::size_t non_wear_days = 0;                   // among included participants
};

inline Exclusions exclusions(const std::vector<SessionRow>& rows, const AnalysisOptions& opt) {
  std::map<std::string, int> days;
  for (const auto& r : rows) ++days[r.participant_id];
  Exclusions ex;
  for (const auto& [pid, n] : days)
    if (n < opt.min_completed_days) {
      ex.excluded_participants.push_back(pid);
      ex.excluded_sessions += static_cast<std::size_t>(n);
    }
  for (const auto& r : rows)
    if (!r.wear && days[r.participant_id] >= opt.min_completed_days) ++ex.non_wear_days;
  return ex;
}

/// Rows of participants with enough completed days.
inline std::vector<SessionRow> included_rows(const std::vector<SessionRow>& rows, const AnalysisOptions& opt) {
  const auto ex = exclusions(rows, opt);
  const std::set<std::string> dropped(ex.excluded_participants.begin(), ex.excluded_participants.end());
  std::vector<SessionRow> out;
  for (const auto& r : rows)
    if (!dropped.contains(r.participant_id)) out.push_back(r);
  return out;
}

// ---------------------------------------------------------------------------
// Correlation between the arm shown and the preference score

/// Per-day Pearson r (index 0 is day 1) between the shown arm's direction code and
/// the participant's preference score, over experimental participants with a session
/// that day. Days with fewer than 3 pairs or no variance are absent.
inline std::vector<std::optional<double>> correlation_series(const std::vector<SessionRow>& rows,
                                                             const std::map<std::string, double>& truth,
                                                             const AnalysisOptions& opt) {
  std::vector<std::vector<double>> xs(static_cast<std::size_t>(opt.total_days));
  std::vector<std::vector<double>> ys(xs.size());
  for (const auto& r : rows) {
    if (r.condition != Condition::Experimental || r.day_index < 1 || r.day_index > opt.total_days) continue;
    auto it = truth.find(r.participant_id);
    if (it == truth.end()) continue;
    xs[static_cast<std::size_t>(r.day_index - 1)].push_back(direction(r.arm));
    ys[static_cast<std::size_t>(r.day_index - 1)].push_back(it->second);
  }
  std::vector<std::optional<double>> series(xs.size());
  for (std::size_t d = 0; d < xs.size(); ++d) {
    if (xs[d].size() < 3) continue;
    try {
      series[d] = stats::pearson(xs[d], ys[d]);
    } catch (const stats::UndefinedCorrelation&) {
    }
  }
  return series;
}

// ---------------------------------------------------------------------------
// Selection stability

/// ICC of selected offsets within participants of one condition over one phase.
/// Participants with fewer than 2 selections in the phase are left out.
inline double selection_stability(const std::vector<SessionRow>& rows, Condition condition, Phase phase,
                                  const AnalysisOptions& opt) {
  std::map<std::string, std::vector<double>> by_person;
  for (const auto& r : rows)
    if (r.condition == condition && opt.phase_of(r.day_index) == phase)
      by_person[r.participant_id].push_back(r.selected_offset);
  std::vector<std::vector<double>> groups;
  for (auto& [_, v] : by_person)
    if (v.size() >= 2) groups.push_back(std::move(v));
  if (groups.size() < 2) throw DomainError("selection stability needs at least 2 eligible participants");
  return stats::icc_oneway(groups);
}

// ---------------------------------------------------------------------------
// Summary tables

struct Cell {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> se;
};

inline Cell summarize(const std::vector<double>& xs) {
  Cell c;
  c.n = xs.size();
  if (!xs.empty()) c.mean = stats::mean(xs);
  c.se = stats::standard_error(xs);
  return c;
}

using StepKey = std::tuple<ArmId, Condition, Phase>;
using StepTable = std::map<StepKey, Cell>;

/// Daily steps per (arm, condition, phase) over wear days of included participants.
inline StepTable step_summary(const std::vector<SessionRow>& rows, const AnalysisOptions& opt) {
  std::map<StepKey, std::vector<double>> buckets;
  for (const auto& r : included_rows(rows, opt))
    if (r.wear) buckets[{r.arm, r.condition, opt.phase_of(r.day_index)}].push_back(static_cast<double>(r.steps));
  StepTable table;
  for (const auto& [k, v] : buckets) table[k] = summarize(v);
  return table;
}

struct MotivationTable {
  std::map<std::pair<Condition, ArmId>, Cell> by_arm;
  std::map<Condition, Cell> overall;
};

/// Post minus pre motivation per (condition, arm) and per condition, included
/// participants, all study days.
inline MotivationTable motivation_summary(const std::vector<SessionRow>& rows, const AnalysisOptions& opt) {
  std::map<std::pair<Condition, ArmId>, std::vector<double>> cells;
  std::map<Condition, std::vector<double>> overall;
  for (const auto& r : included_rows(rows, opt)) {
    cells[{r.condition, r.arm}].push_back(r.motivation_delta());
    overall[r.condition].push_back(r.motivation_delta());
  }
  MotivationTable t;
  for (const auto& [k, v] : cells) t.by_arm[k] = summarize(v);
  for (const auto& [k, v] : overall) t.overall[k] = summarize(v);
  return t;
}

/// Sessions (wear or not) per (arm, condition, phase) of included participants.
inline std::map<StepKey, std::size_t> exposure_counts(const std::vector<SessionRow>& rows,
                                                      const AnalysisOptions& opt) {
  std::map<StepKey, std::size_t> counts;
  for (const auto& r : included_rows(rows, opt)) ++counts[{r.arm, r.condition, opt.phase_of(r.day_index)}];
  return counts;
}

// ---------------------------------------------------------------------------
// Report

struct AnalysisReport {
  AnalysisOptions options;
  bool has_truth = false;
  std::vector<std::optional<double>> correlation_series;
  std::map<std::pair<Condition, Phase>, std::optional<double>> icc_table;
  StepTable step_table;
  std::map<StepKey, std::size_t> exposure;
  MotivationTable motivation_table;
  std::optional<stats::TTestResult> t_test;  // experimental vs control, per-session deltas
  Exclusions exclusions;
  std::size_t sessions = 0;
  std::size_t participants = 0;
};

inline AnalysisReport analyze(const std::vector<SessionRow>& rows,
                              const std::optional<std::map<std::string, double>>& truth,
                              const AnalysisOptions& opt = {}) {
  AnalysisReport rep;
  rep.options = opt;
  rep.sessions = rows.size();
  std::set<std::string> people;
  for (const auto& r : rows) people.insert(r.participant_id);
  rep.participants = people.size();
  rep.exclusions = exclusions(rows, opt);
  const auto kept = included_rows(rows, opt);

  rep.has_truth = truth.has_value();
  if (truth) rep.correlation_series = correlation_series(kept, *truth, opt);

  for (Condition c : {Condition::Control, Condition::Experimental})
    for (Phase ph : {Phase::Pre, Phase::During}) {
      std::optional<double> icc;
      try {
        icc = selection_stability(kept, c, ph, opt);
      } catch (const DomainError&) {
      }
      rep.icc_table[{c, ph}] = icc;
    }

  rep.step_table = step_summary(rows, opt);
  rep.exposure = exposure_counts(rows, opt);
  rep.motivation_table = motivation_summary(rows, opt);

  std::vector<double> ctrl, expt;
  for (const auto& r : kept)
    (r.condition == Condition::Control ? ctrl : expt).push_back(r.motivation_delta());
  try {
    rep.t_test = stats::welch_t(expt, ctrl);
  } catch (const DomainError&) {
  }
  return rep;
}

namespace detail {

inline nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json cell_json(const Cell& c) {
  return {{"n", c.n}, {"mean", c.mean}, {"se", opt_json(c.se)}};
}

inline std::string opt_text(const std::optional<double>& v, const char* spec = "{:.4f}") {
  return v ? fmt::format(fmt::runtime(spec), *v) : std::string("-");
}

}  // namespace detail

inline nlohmann::json to_json(const AnalysisReport& rep) {
  using nlohmann::json;
  json j;
  j["options"] = {{"baseline_days", rep.options.baseline_days},
                  {"total_days", rep.options.total_days},
                  {"min_completed_days", rep.options.min_completed_days}};
  j["sessions"] = rep.sessions;
  j["participants"] = rep.participants;

  json series = json::array();
  for (std::size_t d = 0; d < rep.correlation_series.size(); ++d)
    series.push_back({{"day", d + 1}, {"r", detail::opt_json(rep.correlation_series[d])}});
  j["correlation_series"] = rep.has_truth ? series : json(nullptr);

  json icc = json::array();
  for (const auto& [k, v] : rep.icc_table)
    icc.push_back({{"condition", to_string(k.first)}, {"phase", to_string(k.second)}, {"icc", detail::opt_json(v)}});
  j["icc_table"] = icc;

  json steps = json::array();
  for (const auto& [k, c] : rep.step_table) {
    json row = detail::cell_json(c);
    row["arm"] = to_string(std::get<0>(k));
    row["condition"] = to_string(std::get<1>(k));
    row["phase"] = to_string(std::get<2>(k));
    steps.push_back(row);
  }
  j["step_table"] = steps;

  json exposure = json::array();
  for (const auto& [k, n] : rep.exposure)
    exposure.push_back({{"arm", to_string(std::get<0>(k))},
                        {"condition", to_string(std::get<1>(k))},
                        {"phase", to_string(std::get<2>(k))},
                        {"sessions", n}});
  j["exposure"] = exposure;

  json by_arm = json::array();
  for (const auto& [k, c] : rep.motivation_table.by_arm) {
    json row = detail::cell_json(c);
    row["condition"] = to_string(k.first);
    row["arm"] = to_string(k.second);
    by_arm.push_back(row);
  }
  json overall = json::array();
  for (const auto& [k, c] : rep.motivation_table.overall) {
    json row = detail::cell_json(c);
    row["condition"] = to_string(k);
    overall.push_back(row);
  }
  j["motivation_table"] = {{"by_arm", by_arm}, {"overall", overall}};

  j["t_test"] = rep.t_test ? json{{"t", rep.t_test->t}, {"df", rep.t_test->df}, {"p", rep.t_test->p}}
                           : json(nullptr);
  j["exclusions"] = {{"excluded_participants", rep.exclusions.excluded_participants},
                     {"excluded_sessions", rep.exclusions.excluded_sessions},
                     {"non_wear_days", rep.exclusions.non_wear_days}};
  j["multilevel_models"] = "not computed";
  return j;
}

inline std::string to_text(const AnalysisReport& rep) {
  std::string out;
  auto line = [&](const std::string& s) { out += s + '\n'; };
  line(fmt::format("Sessions: {}  Participants: {}", rep.sessions, rep.participants));
  line(fmt::format("Excluded participants (< {} days): {} ({} sessions)  Non-wear days: {}",
                   rep.options.min_completed_days, rep.exclusions.excluded_participants.size(),
                   rep.exclusions.excluded_sessions, rep.exclusions.non_wear_days));
  line("");
  line("Arm/preference correlation (experimental), by day:");
  if (!rep.has_truth) {
    line("  (no preference scores supplied)");
  } else {
    for (std::size_t d = 0; d < rep.correlation_series.size(); ++d)
      line(fmt::format("  day {:>2}  r = {}", d + 1, detail::opt_text(rep.correlation_series[d], "{:+.4f}")));
  }
  line("");
  line("Selection stability (ICC):");
  line(fmt::format("  {:<13} {:>8} {:>8}", "condition", "pre", "during"));
  for (Condition c : {Condition::Control, Condition::Experimental})
    line(fmt::format("  {:<13} {:>8} {:>8}", to_string(c), detail::opt_text(rep.icc_table.at({c, Phase::Pre})),
                     detail::opt_text(rep.icc_table.at({c, Phase::During}))));
  line("");
  line("Step averages (wear days):");
  line(fmt::format("  {:<6} {:<13} {:<7} {:>5} {:>10} {:>9}", "arm", "condition", "phase", "n", "mean", "SE"));
  for (const auto& [k, c] : rep.step_table)
    line(fmt::format("  {:<6} {:<13} {:<7} {:>5} {:>10.1f} {:>9}", to_string(std::get<0>(k)),
                     to_string(std::get<1>(k)), to_string(std::get<2>(k)), c.n, c.mean,
                     detail::opt_text(c.se, "{:.1f}")));
  line("");
  line("Motivation change (post - pre):");
  line(fmt::format("  {:<13} {:<6} {:>5} {:>9} {:>9}", "condition", "arm", "n", "mean", "SE"));
  for (const auto& [k, c] : rep.motivation_table.by_arm)
    line(fmt::format("  {:<13} {:<6} {:>5} {:>9.4f} {:>9}", to_string(k.first), to_string(k.second), c.n,
                     c.mean, detail::opt_text(c.se)));
  for (const auto& [k, c] : rep.motivation_table.overall)
    line(fmt::format("  {:<13} {:<6} {:>5} {:>9.4f} {:>9}", to_string(k), "all", c.n, c.mean,
                     detail::opt_text(c.se)));
  line("");
  if (rep.t_test)
    line(fmt::format("Welch t-test (experimental vs control): t = {:.4f}, df = {:.2f}, p = {:.4g}",
                     rep.t_test->t, rep.t_test->df, rep.t_test->p));
  else
    line("Welch t-test: not computable");
  line("Multilevel models: not computed");
  return out;
}

}  // namespace socmab::analysis
